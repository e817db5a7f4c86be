#include <iostream>

#include "confmod/acceptance.hpp"
#include "confmod/errors.hpp"

int main(int argc, char** argv) {
    confmod::acceptance::Options o;
    for (int k = 1; k < argc; ++k)
        if (std::string(argv[k]) == "--quick") o.quick = true;
    try {
        o.tolerance_scale = confmod::acceptance::tolerance_scale_from_env();
    } catch (const confmod::validation_error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    auto results = confmod::acceptance::run_all(o);
    int failed = 0;
    for (const auto& c : results) {
        std::cout << confmod::acceptance::format(c);
        if (!c.passed) ++failed;
    }
    std::cout << "\nsummary:\n";
    for (const auto& c : results)
        std::cout << "  criterion " << c.number << ": " << (c.passed ? "pass" : "fail") << "  " << c.name << '\n';
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << '\n';
    return failed ? 2 : 0;
}
