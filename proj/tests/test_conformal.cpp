#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/ellint_rf.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "confmod/conformal.hpp"
#include "confmod/errors.hpp"

using namespace confmod;
using namespace confmod::conformal;
using currents::GeodesicBox;
using std::numbers::pi;

namespace {

double quadrature_K(double k) {
    auto f = [k](double t) { return 1.0 / std::sqrt(1.0 - k * k * std::sin(t) * std::sin(t)); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, pi / 2, 15, 1e-15);
}

/// Modulus from the cross-ratio through Carlson's symmetric integral,
/// K(k) = R_F(0, 1 - k^2, 1).
double oracle_modulus(double lambda) {
    double k = 1.0 / std::pow(std::sqrt(lambda) + std::sqrt(lambda - 1.0), 2);
    double kp2 = (1.0 - k) * (1.0 + k);
    return boost::math::ellint_rf(0.0, k * k, 1.0) / (2.0 * boost::math::ellint_rf(0.0, kp2, 1.0));
}

/// Symmetric box with cross-ratio lambda.
GeodesicBox box_with_lambda(double lambda) {
    double a = std::acos(1.0 / std::sqrt(lambda));
    return GeodesicBox::from_angles(-a, a, pi - a, pi + a);
}

}  // namespace

TEST_CASE("complete elliptic integral") {
    CHECK(elliptic_K(0.0) == doctest::Approx(pi / 2).epsilon(1e-15));
    CHECK(elliptic_K(1.0 / std::sqrt(2.0)) == doctest::Approx(quadrature_K(1.0 / std::sqrt(2.0))).epsilon(1e-13));
    for (double k : {0.1, 0.5, 0.9, 0.99})
        CHECK(elliptic_K(k) == doctest::Approx(quadrature_K(k)).epsilon(1e-12));
    double prev_gap = 1.0;
    for (int e : {20, 30, 40, 50}) {
        double delta = std::ldexp(1.0, -e);
        double k = 1.0 - delta;
        double kp = std::sqrt(delta * (2.0 - delta));
        double gap = std::abs(elliptic_K(k) / std::log(4.0 / kp) - 1.0);
        CHECK(gap < prev_gap);
        CHECK(gap < 1e-5);
        prev_gap = gap;
    }
    CHECK_THROWS_AS(elliptic_K(1.0), validation_error);
    CHECK_THROWS_AS(elliptic_K(-0.1), validation_error);
}

TEST_CASE("quadrilateral modulus values") {
    CHECK(std::abs(quad_modulus(2.0).value - 1.0) < 1e-12);
    for (double lam : {1.001, 1.5, 5.0, 37.0, 1e4, 1e9})
        CHECK(quad_modulus(lam).value == doctest::Approx(oracle_modulus(lam)).epsilon(1e-11));
    double big = quad_modulus(1e6).value;
    CHECK(std::abs(big - std::log(1e6) / pi - 2.0 / pi * std::log(4.0)) < 1e-4);
    CHECK_THROWS_AS(quad_modulus(1.0), validation_error);
    CHECK_THROWS_AS(quad_modulus(0.5), validation_error);
    CHECK_THROWS_AS(quad_modulus(1e13), validation_error);
    CHECK(quad_modulus(5.0).method == ModulusMethod::elliptic);
}

TEST_CASE("log-domain modulus continues past overflow") {
    CHECK(quad_modulus_log(std::log(1e8)).value == doctest::Approx(quad_modulus(1e8).value).epsilon(1e-14));
    double l = 5000.0;
    CHECK(quad_modulus_log(l).value == doctest::Approx((l + 2 * std::log(4.0)) / pi).epsilon(1e-14));
}

TEST_CASE("duality and monotonicity") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 1000; ++n) {
        double lam = 1.0 + std::pow(10.0, -8.0 + 16.0 * u(rng));
        double dual = lam / (lam - 1.0);
        CHECK(std::abs(quad_modulus(lam).value * quad_modulus(dual).value - 1.0) < 1e-8);
    }
    double prev = 0.0;
    for (double lam = 1.01; lam < 1e8; lam *= 1.7) {
        double m = quad_modulus(lam).value;
        CHECK(m > prev);
        prev = m;
    }
}

TEST_CASE("conjugate boxes") {
    auto b2 = box_with_lambda(2.0);
    CHECK(quad_modulus_box(b2).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(quad_modulus_box(conjugate_box(b2)).value == doctest::Approx(1.0).epsilon(1e-12));
    auto b5 = box_with_lambda(5.0);
    CHECK(std::exp(currents::liouville_box(b5)) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(quad_modulus_box(conjugate_box(b5)).value == doctest::Approx(1.0 / quad_modulus(5.0).value).epsilon(1e-12));
    auto cc = conjugate_box(conjugate_box(b5));
    CHECK(cc.a() == b5.c());
    CHECK(cc.c() == b5.a());
    CHECK(quad_modulus_box(cc).value == doctest::Approx(quad_modulus_box(b5).value).epsilon(1e-13));
}

TEST_CASE("relative distance and the planar bound") {
    Continua e{{{0, 0}, {1, 0}}}, f{{{2, 0}, {3, 0}}};
    CHECK(rel_distance(e, f) == doctest::Approx(1.0));
    CHECK(rel_distance(e, e) == 0.0);
    Continua seg{{{1, 0}, {1, 1}}}, axis{{{0, -50}, {0, 50}}};
    CHECK(rel_distance(seg, axis) == doctest::Approx(1.0));
    Continua point{{{0, 0}}};
    CHECK_THROWS_AS(rel_distance(point, f), validation_error);
    CHECK(mod_upper_bound(1.0) == doctest::Approx(9 * pi / 4));
    CHECK(mod_upper_bound(0.5) == doctest::Approx(4 * pi));
    CHECK(mod_upper_bound(1e9) == doctest::Approx(pi));
    CHECK(std::isinf(mod_upper_bound(0.0)));
}

TEST_CASE("annulus modulus") {
    CHECK(annulus_modulus(1.0, std::exp(2 * pi)) == doctest::Approx(1.0).epsilon(1e-15));
    double eps = 0.01, len = 3.0;
    CHECK(annulus_modulus(eps * len / 2, 1.0) == doctest::Approx(2 * pi / std::log(2 / (eps * len))));
    CHECK_THROWS_AS(annulus_modulus(2.0, 1.0), validation_error);
}
