#include "confmod/numerics.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "confmod/errors.hpp"

namespace confmod::numerics {

double neville_at_zero(std::span<const double> t, std::span<const double> v) {
    if (t.size() != v.size() || t.empty()) throw validation_error("neville: size mismatch");
    std::vector<double> p(v.begin(), v.end());
    const std::size_t n = p.size();
    for (std::size_t m = 1; m < n; ++m) {
        for (std::size_t i = 0; i + m < n; ++i) {
            double den = t[i] - t[i + m];
            if (den == 0.0) throw validation_error("neville: repeated abscissa");
            p[i] = (t[i] * p[i + 1] - t[i + m] * p[i]) / den;
        }
    }
    return p[0];
}

double bracketed_root(const std::function<double(double)>& f, double lo, double hi,
                      int max_iter) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw numerical_error("root not bracketed");
    std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                               boost::math::tools::eps_tolerance<double>(52),
                                               iters);
    if (iters >= static_cast<std::uintmax_t>(max_iter))
        throw numerical_error("root finder hit the iteration cap");
    return 0.5 * (r.first + r.second);
}

LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw validation_error("line fit needs two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw validation_error("line fit: degenerate abscissae");
    double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

double horner(std::span<const double> c, double x) {
    double s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
    return s;
}

}  // namespace confmod::numerics
