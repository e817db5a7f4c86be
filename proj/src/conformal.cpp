#include "confmod/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "confmod/errors.hpp"

namespace confmod::conformal {

namespace {

constexpr double pi = std::numbers::pi;

double point_segment_distance(std::complex<double> p, std::complex<double> a,
                              std::complex<double> b) {
    std::complex<double> ab = b - a;
    double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(p - a);
    double t = std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

double cross(std::complex<double> u, std::complex<double> v) {
    return u.real() * v.imag() - u.imag() * v.real();
}

bool segments_intersect(std::complex<double> a, std::complex<double> b, std::complex<double> c,
                        std::complex<double> d) {
    double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

double segment_distance(std::complex<double> a, std::complex<double> b, std::complex<double> c,
                        std::complex<double> d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

std::vector<std::pair<std::complex<double>, std::complex<double>>> segments(const Continua& e) {
    std::vector<std::pair<std::complex<double>, std::complex<double>>> s;
    if (e.vertices.size() == 1) s.emplace_back(e.vertices[0], e.vertices[0]);
    for (std::size_t i = 0; i + 1 < e.vertices.size(); ++i)
        s.emplace_back(e.vertices[i], e.vertices[i + 1]);
    return s;
}

}  // namespace

std::string to_string(ModulusMethod m) { return m == ModulusMethod::elliptic ? "elliptic" : "grid"; }

double agm(double a, double b) {
    if (!(a >= 0 && b >= 0)) throw validation_error("agm needs nonnegative arguments");
    for (int it = 0; it < 40; ++it) {
        if (std::abs(a - b) <= 1e-14 * a) return 0.5 * (a + b);
        double m = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = m;
    }
    throw numerical_error("agm did not converge in 40 iterations");
}

double elliptic_K(double k) {
    if (!(k >= 0.0 && k < 1.0)) throw validation_error("elliptic_K needs 0 <= k < 1");
    double kp = std::sqrt((1.0 - k) * (1.0 + k));
    return pi / (2.0 * agm(1.0, kp));
}

Modulus quad_modulus_log(double liouville) {
    if (!(liouville >= 1e-9) || !std::isfinite(liouville))
        throw validation_error("quadrilateral is degenerate (cross-ratio too close to 1)");
    const double log2 = std::log(2.0);
    if (liouville < log2) {
        double dual = -std::log(-std::expm1(-liouville));
        Modulus m = quad_modulus_log(dual);
        m.value = 1.0 / m.value;
        m.error_estimate = 1e-14 * m.value;
        return m;
    }
    double log_k = -liouville - 2.0 * std::log1p(std::sqrt(-std::expm1(-liouville)));
    double value;
    if (log_k < -40.0) {
        value = (std::log(4.0) - log_k) / pi;
    } else {
        double k = std::exp(log_k);
        double kp = std::sqrt((1.0 - k) * (1.0 + k));
        value = agm(1.0, kp) / (2.0 * agm(1.0, k));
    }
    return {value, ModulusMethod::elliptic, 1e-14 * value};
}

Modulus quad_modulus(double lambda) {
    if (!(lambda - 1.0 >= 1e-9)) throw validation_error("quad_modulus needs lambda > 1");
    if (!(lambda <= 1e12)) throw validation_error("quad_modulus: lambda above 1e12 rejected");
    return quad_modulus_log(std::log(lambda));
}

Modulus quad_modulus_box(const currents::GeodesicBox& box) {
    return quad_modulus_log(currents::liouville_box(box));
}

currents::GeodesicBox conjugate_box(const currents::GeodesicBox& box) {
    return {box.b(), box.c(), box.d(), box.a()};
}

double diameter(const Continua& e) {
    if (e.vertices.empty()) throw validation_error("continuum needs at least one point");
    double d = 0.0;
    for (std::size_t i = 0; i < e.vertices.size(); ++i)
        for (std::size_t j = i + 1; j < e.vertices.size(); ++j)
            d = std::max(d, std::abs(e.vertices[i] - e.vertices[j]));
    return d;
}

double distance(const Continua& e, const Continua& f) {
    if (e.vertices.empty() || f.vertices.empty())
        throw validation_error("continuum needs at least one point");
    double d = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : segments(e))
        for (const auto& [c, dd] : segments(f)) d = std::min(d, segment_distance(a, b, c, dd));
    return d;
}

double rel_distance(const Continua& e, const Continua& f) {
    double m = std::min(diameter(e), diameter(f));
    if (!(m > 0.0)) throw validation_error("relative distance needs positive diameters");
    return distance(e, f) / m;
}

double mod_upper_bound(double delta) {
    if (!(delta >= 0.0)) throw validation_error("relative distance must be nonnegative");
    if (delta == 0.0) return std::numeric_limits<double>::infinity();
    double t = 1.0 + 1.0 / (2.0 * delta);
    return pi * t * t;
}

double annulus_modulus(double r, double big_r) {
    if (!(r > 0.0 && r < big_r)) throw validation_error("annulus needs 0 < r < R");
    return 2.0 * pi / std::log(big_r / r);
}

}  // namespace confmod::conformal
