#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "confmod/currents.hpp"
#include "confmod/errors.hpp"

using namespace confmod;
using namespace confmod::currents;
using std::numbers::pi;

namespace {

using big = boost::multiprecision::cpp_bin_float_50;

/// Cross-ratio log evaluated with 50-digit complex arithmetic.
double oracle_liouville(double ta, double tb, double tc, double td) {
    auto pt = [](double t) { return std::pair<big, big>(cos(big(t)), sin(big(t))); };
    auto dist = [](const std::pair<big, big>& p, const std::pair<big, big>& q) {
        big dx = p.first - q.first, dy = p.second - q.second;
        return sqrt(dx * dx + dy * dy);
    };
    auto a = pt(ta), b = pt(tb), c = pt(tc), d = pt(td);
    big v = log(dist(a, c) * dist(b, d) / (dist(a, d) * dist(b, c)));
    return static_cast<double>(v);
}

std::array<double, 4> random_ccw_angles(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 2 * pi);
    std::array<double, 4> t{};
    for (auto& x : t) x = u(rng);
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace

TEST_CASE("circle points round trip angles and order along the lift") {
    for (double t : {0.0, 0.3, pi / 4, pi / 2, 2.0, pi, 4.0, 3 * pi / 2, 6.0, 2 * pi - 1e-12}) {
        auto p = CirclePoint::from_angle(t);
        CHECK(p.theta() == doctest::Approx(std::fmod(t, 2 * pi)).epsilon(1e-15));
        auto q = CirclePoint::from_complex(p.value());
        CHECK(std::abs(q.theta() - p.theta()) < 1e-14);
    }
    CHECK(CirclePoint::from_angle(-pi / 2) == CirclePoint::from_offset(3, 0.0));
    CHECK(CirclePoint::from_angle(0.1) < CirclePoint::from_angle(0.2));
    CHECK(CirclePoint::from_angle(2 * pi - 0.1) < CirclePoint::from_angle(0.1));
    auto tiny_a = CirclePoint::from_log_offset(1, 1, -300.0);
    auto tiny_b = CirclePoint::from_log_offset(1, 1, -299.0);
    CHECK(tiny_a < tiny_b);
    CHECK(CirclePoint::from_offset(1, 0.0) < tiny_a);
    CHECK(tiny_a.mirror().mirror() == tiny_a);
}

TEST_CASE("liouville measure of the symmetric box is log 2") {
    auto box = GeodesicBox::from_angles(pi / 4, 3 * pi / 4, 5 * pi / 4, 7 * pi / 4);
    CHECK(liouville_box(box) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("liouville measure matches a 50-digit cross-ratio") {
    auto box = GeodesicBox::from_angles(0, pi / 2, pi, 3 * pi / 2);
    CHECK(std::abs(liouville_box(box) - oracle_liouville(0, pi / 2, pi, 3 * pi / 2)) < 1e-14);
    std::mt19937_64 rng(7);
    for (int n = 0; n < 200; ++n) {
        auto t = random_ccw_angles(rng);
        if (t[1] - t[0] < 1e-3 || t[2] - t[1] < 1e-3 || t[3] - t[2] < 1e-3) continue;
        auto b = GeodesicBox::from_angles(t[0], t[1], t[2], t[3]);
        double ref = oracle_liouville(t[0], t[1], t[2], t[3]);
        CHECK(std::abs(liouville_box(b) - ref) < 1e-11 * std::max(1.0, ref));
    }
}

TEST_CASE("liouville measure resolves exponentially small gaps near an anchor") {
    // four points within e^-200 of i: the chord ratios equal the offset ratios
    const double s = -200.0;
    auto p = [&](double x) { return CirclePoint::from_log_offset(1, x > 0 ? 1 : -1, s + std::log(std::abs(x))); };
    GeodesicBox box(p(-2.0), p(-1.0), p(1.0), p(3.0));
    double ref = std::log((1.0 + 2.0) * (3.0 + 1.0) / ((3.0 + 2.0) * (1.0 + 1.0)));
    CHECK(liouville_box(box) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("degenerate and interleaved boxes are rejected") {
    CHECK_THROWS_AS(GeodesicBox::from_angles(0, 1, 1, 2), validation_error);
    CHECK_THROWS_AS(GeodesicBox::from_angles(0, 2, 1, 3), validation_error);
    CHECK_THROWS_AS(GeodesicBox::from_angles(3, 2, 1, 0), validation_error);
    CHECK_NOTHROW(GeodesicBox::from_angles(5, 6, 1, 2));
}

TEST_CASE("liouville measure is Mobius invariant, swap symmetric and additive") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int tested = 0;
    for (int n = 0; n < 500; ++n) {
        auto t = random_ccw_angles(rng);
        if (t[1] - t[0] < 1e-2 || t[2] - t[1] < 1e-2 || t[3] - t[2] < 1e-2 ||
            2 * pi - t[3] + t[0] < 1e-2)
            continue;
        ++tested;
        auto box = GeodesicBox::from_angles(t[0], t[1], t[2], t[3]);
        double l = liouville_box(box);
        DiskMobius m(std::polar(0.6 * u(rng), 2 * pi * u(rng)), 2 * pi * u(rng));
        GeodesicBox moved(m(box.a()), m(box.b()), m(box.c()), m(box.d()));
        CHECK(std::abs(liouville_box(moved) - l) < 1e-10 * std::max(1.0, l));
        GeodesicBox swapped(box.c(), box.d(), box.a(), box.b());
        CHECK(std::abs(liouville_box(swapped) - l) < 1e-12 * std::max(1.0, l));
        double te = t[2] + (t[3] - t[2]) * (0.1 + 0.8 * u(rng));
        auto left = GeodesicBox::from_angles(t[0], t[1], t[2], te);
        auto right = GeodesicBox::from_angles(t[0], t[1], te, t[3]);
        CHECK(std::abs(liouville_box(left) + liouville_box(right) - l) < 1e-10);
    }
    CHECK(tested > 100);
}

TEST_CASE("pull-backs by identity and Mobius maps preserve the measure") {
    auto box = GeodesicBox::from_angles(0.2, 1.1, 2.5, 4.0);
    double l = liouville_box(box);
    CHECK(pullback_liouville(BoundaryMap::identity(), box) == doctest::Approx(l));
    DiskMobius m({0.3, -0.4}, 0.7);
    auto hm = BoundaryMap::mobius(m);
    CHECK(pullback_liouville(hm, box) == doctest::Approx(l).epsilon(1e-12));
    auto h0 = BoundaryMap(
        [](const CirclePoint& p) { return CirclePoint::from_angle(p.theta() + 0.2 * std::sin(p.theta())); },
        "wobble");
    CHECK(pullback_liouville(h0.then(hm), box) ==
          doctest::Approx(pullback_liouville(h0, box)).epsilon(1e-11));
}

TEST_CASE("orientation-reversing maps fail the certificate") {
    auto reverse = [](const CirclePoint& p) { return p.conjugate(); };
    CHECK_THROWS_AS(BoundaryMap(reverse, "reverse"), invalid_boundary_map);
    auto fold = [](const CirclePoint& p) { return CirclePoint::from_angle(2 * p.theta()); };
    CHECK_THROWS_AS(BoundaryMap(fold, "double"), invalid_boundary_map);
    BoundaryMap unchecked(reverse, "reverse", 0);
    CHECK_THROWS_AS(pullback_liouville(unchecked, GeodesicBox::from_angles(0.1, 1, 2, 3)),
                    invalid_boundary_map);
}

TEST_CASE("Dirac laminations count separated atoms") {
    Geodesic g(CirclePoint::from_angle(pi / 2), CirclePoint::from_angle(0.0));
    DiracSum lam({{g, 1.0}});
    CHECK(lamination_box_measure(lam, GeodesicBox::from_angles(1.4, 1.7, -0.1, 0.1)) == 1.0);
    CHECK(lamination_box_measure(lam, GeodesicBox::from_angles(0.1, 1.4, 2.0, 3.0)) == 0.0);
    // enlarging arcs never decreases the measure
    CHECK(lamination_box_measure(lam, GeodesicBox::from_angles(1.0, 2.0, -0.5, 0.5)) == 1.0);
    Geodesic g2(CirclePoint::from_angle(pi / 2), CirclePoint::from_angle(pi));
    DiracSum two({{g, 1.0}, {g2, 1.0}});
    CHECK(lamination_box_measure(two, GeodesicBox::from_angles(1.4, 1.7, 2.9, 2 * pi + 0.1)) == 2.0);
    Geodesic crossing(CirclePoint::from_angle(1.0), CirclePoint::from_angle(4.0));
    CHECK_THROWS_AS(DiracSum({{g, 1.0}, {crossing, 1.0}}), validation_error);
    CHECK_THROWS_AS(DiracSum({{g, -1.0}}), validation_error);
}

TEST_CASE("weak-star report extrapolates and fits the rate") {
    Geodesic g(CirclePoint::from_angle(pi / 2), CirclePoint::from_angle(0.0));
    MeasuredLamination lam = DiracSum({{g, 2.0}});
    std::vector<NamedBox> boxes = {{"hit", GeodesicBox::from_angles(1.4, 1.7, -0.1, 0.1)},
                                   {"miss", GeodesicBox::from_angles(2.0, 3.0, 4.0, 5.0)}};
    std::vector<ScaledMeasure> constant, linear;
    for (double eps : {0.5, 0.25, 0.125, 0.0625}) {
        constant.push_back({eps, eps, [&](const GeodesicBox& b) { return lamination_box_measure(lam, b); }});
        linear.push_back({eps, eps, [&, eps](const GeodesicBox& b) {
                              return (1 + eps) * lamination_box_measure(lam, b);
                          }});
    }
    auto t0 = weakstar_report(constant, lam, boxes);
    for (const auto& r : t0.rows) CHECK(r.gap == 0.0);
    auto t1 = weakstar_report(linear, lam, boxes);
    CHECK(t1.rows[0].limit == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(t1.rows[0].rate == doctest::Approx(1.0).epsilon(1e-9));
    std::reverse(linear.begin(), linear.end());
    CHECK_THROWS_AS(weakstar_report(linear, lam, boxes), validation_error);
}
