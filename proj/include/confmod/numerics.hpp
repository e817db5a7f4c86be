#pragma once

#include <functional>
#include <span>

namespace confmod::numerics {

/// Value at t = 0 of the interpolating polynomial through (t_i, v_i).
double neville_at_zero(std::span<const double> t, std::span<const double> v);

/// Root of a monotone function on [lo, hi] with f(lo), f(hi) of opposite
/// sign. Throws numerical_error if not bracketed or after max_iter steps.
double bracketed_root(const std::function<double(double)>& f, double lo, double hi,
                      int max_iter = 200);

struct LineFit {
    double slope;
    double intercept;
};

LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

/// Polynomial sum c[0] + c[1] x + c[2] x^2 + ...
double horner(std::span<const double> c, double x);

}  // namespace confmod::numerics
