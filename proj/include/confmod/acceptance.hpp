#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace confmod::acceptance {

struct Criterion {
    int number = 0;
    std::string name;
    bool passed = false;
    /// Measured quantities, one "key=value" item per check.
    std::vector<std::string> details;
    /// Failed checks; empty when passed.
    std::vector<std::string> failures;
    double seconds = 0.0;
};

struct Options {
    /// Skips the grid path of the chimney ratio criterion.
    bool quick = false;
    /// Multiplies every tolerance; values below 1 tighten the suite.
    double tolerance_scale = 1.0;
};

/// CONFMOD_ACCEPT_TOL_SCALE, or 1 when unset. Rejects non-positive values.
double tolerance_scale_from_env();

Criterion quadrilateral_calculus(const Options& o);
Criterion oracle_agreement(const Options& o);
Criterion strip_ratios(const Options& o);
Criterion strip_currents(const Options& o);
Criterion chimney_ratios(const Options& o);
Criterion chimney_currents(const Options& o);
Criterion property_suites(const Options& o);

/// All seven criteria in order; exceptions inside a criterion turn into a
/// failed check.
std::vector<Criterion> run_all(const Options& o, std::ostream* progress = nullptr);

/// "criterion N  PASS  name  (x.x s)" followed by indented details.
std::string format(const Criterion& c, bool verbose = true);

}  // namespace confmod::acceptance
