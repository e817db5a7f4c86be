#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "confmod/domains.hpp"
#include "confmod/errors.hpp"

using namespace confmod;
using namespace confmod::domains;
using currents::CirclePoint;
using currents::GeodesicBox;
using std::numbers::pi;

namespace {

double angle_gap(const CirclePoint& p, const CirclePoint& q) {
    return std::exp(currents::log_chord(p, q));
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t it = 300;
    auto r = boost::math::tools::bisect(f, lo, hi, tol, it);
    return 0.5 * (r.first + r.second);
}

/// Bottom-side x of an angle in the lower half, by root-finding on the closed form.
double oracle_strip_x(double theta) {
    auto f = [theta](double x) {
        double a = std::arg(strip_map({x, 0.0}));
        if (a < 0) a += 2 * pi;
        return a - theta;
    };
    return bisect(f, -12.0, 12.0);
}

/// Right-ray prevertex |w| from arc length by quadrature of |f'(w)|.
double oracle_ray_x(double c) {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [](double v) { return std::sqrt((v - 1) * (v + 1)) / v; };
    return 1.0 + 2.0 / pi * ts.integrate(f, 1.0, c);
}

double oracle_wall_y(double s) {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [](double v) { return std::sqrt((1 - v) * (1 + v)) / v; };
    return 2.0 / pi * ts.integrate(f, s, 1.0);
}

double oracle_chimney_angle(const ChimneyPrimeEnd& p) {
    double w = 0.0;
    if (p.kind == ChimneyPrimeEnd::Kind::right_ray)
        w = -bisect([&](double c) { return oracle_ray_x(c) - p.x(); }, 1.0, 1e4);
    else if (p.kind == ChimneyPrimeEnd::Kind::right_wall)
        w = -bisect([&](double s) { return p.t - oracle_wall_y(s); }, 1e-12, 1.0);
    double th = pi / 2 + 2 * std::atan(w);
    return th < 0 ? th + 2 * pi : th;
}

PrimeEndArc strip_piece(StripSide s, Bound lo, Bound hi) { return PrimeEndArc::strip({StripArc(s, lo, hi)}); }

}  // namespace

TEST_CASE("strip map normalization") {
    const std::complex<double> i(0, 1);
    CHECK(std::abs(strip_map(0.0) + i) < 1e-15);
    CHECK(std::abs(strip_map(i) - i) < 1e-15);
    CHECK(std::abs(strip_map({40.0, 0.5}) - 1.0) < 1e-15);
    CHECK(std::abs(strip_map({-40.0, 0.5}) + 1.0) < 1e-15);
    CHECK(strip_map_boundary(StripPrimeEnd::bottom(0)) == CirclePoint::from_offset(3, 0.0));
    CHECK(strip_map_boundary(StripPrimeEnd::top(0)) == CirclePoint::from_offset(1, 0.0));
    CHECK(strip_map_boundary(StripPrimeEnd::plus_infinity()) == CirclePoint::from_offset(0, 0.0));
    CHECK(strip_map_boundary(StripPrimeEnd::minus_infinity()) == CirclePoint::from_offset(2, 0.0));
    CHECK_THROWS_AS(strip_map({0.0, 1.5}), validation_error);
    // far prime ends stay distinct from +-1
    auto far = strip_map_boundary(StripPrimeEnd::bottom(1e4));
    CHECK(far.anchor() == 0);
    CHECK(far.sign() == -1);
    CHECK(far.log_abs_offset() == doctest::Approx(std::log(2.0) - pi * 1e4).epsilon(1e-14));
}

TEST_CASE("strip boundary map agrees with the closed form and round trips") {
    for (double x : {-3.0, -0.7, -0.2, 0.0, 0.1, 0.28, 0.29, 1.0, 2.5}) {
        auto p = strip_map_boundary(StripPrimeEnd::bottom(x));
        CHECK(std::abs(p.value() - strip_map({x, 0.0})) < 1e-14);
        auto q = strip_map_boundary(StripPrimeEnd::top(x));
        CHECK(std::abs(q.value() - strip_map({x, 1.0})) < 1e-14);
    }
    for (int k = 1; k < 2000; ++k) {
        double th = 2 * pi * k / 2000.0;
        if (std::abs(th - pi) < 1e-6) continue;
        auto w = CirclePoint::from_angle(th);
        auto back = strip_map_boundary(strip_map_inverse(w));
        CHECK(angle_gap(back, w) < 1e-12);
    }
    for (double th : {3.5, 4.0, 4.7, 5.5, 6.1}) {
        auto pe = strip_map_inverse(CirclePoint::from_angle(th));
        CHECK(pe.kind == StripPrimeEnd::Kind::bottom);
        CHECK(pe.x == doctest::Approx(oracle_strip_x(th)).epsilon(1e-10));
    }
    CHECK(strip_map_inverse(CirclePoint::from_offset(3, 0.0)) == StripPrimeEnd::bottom(0.0));
    CHECK(strip_map_inverse(CirclePoint::from_offset(1, 0.0)) == StripPrimeEnd::top(0.0));
    CHECK(strip_map_inverse(CirclePoint::from_offset(0, 0.0)) == StripPrimeEnd::plus_infinity());
    auto deep = CirclePoint::from_log_offset(2, 1, -5000.0);
    CHECK(strip_map_inverse(deep).x == doctest::Approx(-(5000.0 - std::log(0.5)) / pi).epsilon(1e-14));
}

TEST_CASE("strip deformation boundary maps") {
    auto id = boundary_map_h(Deformation(Deformation::Kind::horizontal_shrink, 1.0));
    for (double th : {0.3, 2.0, 4.0}) CHECK(angle_gap(id(CirclePoint::from_angle(th)), CirclePoint::from_angle(th)) < 1e-13);
    auto h = boundary_map_h(Deformation(Deformation::Kind::horizontal_shrink, 0.5));
    CHECK(h(CirclePoint::from_offset(3, 0.0)) == CirclePoint::from_offset(3, 0.0));
    CHECK(h(CirclePoint::from_offset(0, 0.0)) == CirclePoint::from_offset(0, 0.0));
    CHECK(h(CirclePoint::from_offset(2, 0.0)) == CirclePoint::from_offset(2, 0.0));
    std::complex<double> e(std::exp(pi / 2), 0.0), i(0, 1);
    auto img = h(strip_map_boundary(StripPrimeEnd::bottom(1.0)));
    CHECK(std::abs(img.value() - (e - i) / (e + i)) < 1e-14);
    for (double eps : {1e-5, 1.0 / 64, 0.3, 7.0, 65536.0}) {
        auto he = boundary_map_h(Deformation(Deformation::Kind::horizontal_shrink, eps));
        CHECK(he.verify_monotone(10000));
    }
}

TEST_CASE("strip arcs and deformation of arcs") {
    auto [i0, j0] = canonical_arcs(DomainTag::strip);
    CHECK(i0.connected());
    CHECK(std::get<StripPrimeEnd>(i0.components()[0].start) == StripPrimeEnd::top(0.0));
    CHECK(std::get<StripPrimeEnd>(i0.components()[0].end) == StripPrimeEnd::bottom(0.0));
    auto [a, b] = i0.disk_arc();
    CHECK(a == CirclePoint::from_offset(1, 0.0));
    CHECK(b == CirclePoint::from_offset(3, 0.0));
    CHECK(i0.contains_disk_point(CirclePoint::from_offset(2, 0.0)));
    CHECK(!i0.contains_disk_point(CirclePoint::from_offset(0, 0.0)));
    CHECK(j0.contains_disk_point(CirclePoint::from_offset(0, 0.0)));
    auto box = family_box(i0, j0);
    CHECK(currents::liouville_box(box) > 0);

    auto arc = strip_piece(StripSide::bottom, Bound::at(-1.0), Bound::at(3.0));
    auto d = deform_arc(Deformation(Deformation::Kind::horizontal_shrink, 0.25), arc);
    CHECK(d.strip_pieces()[0].lo.value == -0.25);
    CHECK(d.strip_pieces()[0].hi.value == 0.75);
    CHECK(d.strip_pieces()[0].side == StripSide::bottom);
    CHECK_THROWS_AS(deform_arc(Deformation(Deformation::Kind::vertical_shrink, 0.5), arc), validation_error);

    auto two = PrimeEndArc::strip({StripArc(StripSide::bottom, Bound::at(0), Bound::at(1)),
                                   StripArc(StripSide::bottom, Bound::at(2), Bound::at(3))});
    CHECK(two.components().size() == 2);
    CHECK_THROWS_AS(PrimeEndArc::strip({StripArc(StripSide::bottom, Bound::at(0), Bound::at(2)),
                                        StripArc(StripSide::bottom, Bound::at(1), Bound::at(3))}),
                    validation_error);
    CHECK_THROWS_AS(PrimeEndArc::strip({StripArc(StripSide::bottom, Bound::minus_infinity(), Bound::plus_infinity()),
                                        StripArc(StripSide::top, Bound::minus_infinity(), Bound::plus_infinity())}),
                    validation_error);
    CHECK_THROWS_AS(StripArc(StripSide::top, Bound::at(2), Bound::at(1)), validation_error);
    CHECK_THROWS_AS(family_box(i0, i0), validation_error);
}

TEST_CASE("vertical lamination of the strip") {
    auto lam = strip_vertical_lamination();
    auto box_over = [](double p, double q) {
        auto from = [](std::complex<double> z) { return CirclePoint::from_complex(strip_map(z)); };
        return GeodesicBox(from({p, 0}), from({q, 0}), from({q, 1}), from({p, 1}));
    };
    CHECK(currents::lamination_box_measure(lam, box_over(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(currents::lamination_box_measure(lam, box_over(2, 5)) == doctest::Approx(3.0).epsilon(1e-11));
    CHECK(currents::lamination_box_measure(lam, box_over(-1.5, 0.5)) == doctest::Approx(2.0).epsilon(1e-11));
    auto bottom_only = GeodesicBox::from_angles(3.5, 4.0, 4.5, 5.0);
    CHECK(currents::lamination_box_measure(lam, bottom_only) == 0.0);
    // the box (i, -i) x (1 side) sees leaves with x in [0, 1]
    auto [i0, j0] = canonical_arcs(DomainTag::strip);
    auto b = family_box(strip_piece(StripSide::bottom, Bound::at(0), Bound::at(1)),
                        strip_piece(StripSide::top, Bound::at(0), Bound::at(1)));
    CHECK(currents::lamination_box_measure(lam, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chimney map normalization") {
    CHECK(chimney_map_boundary(ChimneyPrimeEnd::right_ray(1.0)) == CirclePoint::from_offset(0, 0.0));
    CHECK(chimney_map_boundary(ChimneyPrimeEnd::left_ray(-1.0)) == CirclePoint::from_offset(2, 0.0));
    CHECK(chimney_map_boundary(ChimneyPrimeEnd::chimney_top()) == CirclePoint::from_offset(1, 0.0));
    CHECK(chimney_map_boundary(ChimneyPrimeEnd::lower_infinity()) == CirclePoint::from_offset(3, 0.0));
    CHECK(ChimneyPrimeEnd::right_wall(0.0) == ChimneyPrimeEnd::right_ray(1.0));
    const auto& m = chimney();
    CHECK(std::abs(m.sc(std::complex<double>(1.0, 1e-300)) + 1.0) < 1e-12);
    CHECK(std::abs(m.sc(std::complex<double>(-1.0, 1e-300)) - 1.0) < 1e-12);
}

TEST_CASE("chimney boundary map matches Schwarz-Christoffel quadrature") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 50; ++n) {
        auto ray = ChimneyPrimeEnd::right_ray(1.001 + 20.0 * u(rng) * u(rng));
        CHECK(std::abs(chimney_map_boundary(ray).theta() - oracle_chimney_angle(ray)) < 1e-9);
        auto wall = ChimneyPrimeEnd::right_wall(0.001 + 5.0 * u(rng) * u(rng));
        CHECK(std::abs(chimney_map_boundary(wall).theta() - oracle_chimney_angle(wall)) < 1e-9);
        // the left side is the mirror image
        double left = chimney_map_boundary(wall.mirror()).theta();
        CHECK(std::abs(left - (pi - oracle_chimney_angle(wall))) < 1e-9);
    }
}

TEST_CASE("chimney boundary inverse round trips") {
    for (int k = 0; k < 3000; ++k) {
        double th = 2 * pi * (k + 0.37) / 3000.0;
        if (std::abs(th - 3 * pi / 2) < 1e-3) continue;
        auto w = CirclePoint::from_angle(th);
        auto back = chimney_map_boundary(chimney_map_inverse(w));
        CHECK(angle_gap(back, w) < 1e-12);
    }
    for (double y : {1e-9, 1e-4, 0.3, 2.0, 40.0, 1e4}) {
        auto p = ChimneyPrimeEnd::right_wall(y);
        auto q = chimney_map_inverse(chimney_map_boundary(p));
        CHECK(q.t == doctest::Approx(y).epsilon(1e-10));
    }
    for (double x : {1.0 + 1e-9, 1.5, 30.0, 1e5}) {
        auto q = chimney_map_inverse(chimney_map_boundary(ChimneyPrimeEnd::left_ray(-x)));
        CHECK(q.kind == ChimneyPrimeEnd::Kind::left_ray);
        CHECK(q.x() == doctest::Approx(-x).epsilon(1e-10));
    }
}

TEST_CASE("chimney interior map") {
    const auto& m = chimney();
    const std::complex<double> i(0, 1);
    for (auto z : {std::complex<double>(0, -1), {0.5, 3.0}, {-0.9, 0.01}, {5.0, -0.2}, {-3.0, -4.0}, {0.0, 6.0}}) {
        auto w = m.sc_inverse(z);
        CHECK(w.imag() > 0);
        CHECK(std::abs(m.sc(w) - z) < 1e-10);
        auto d = chimney_map(z);
        CHECK(std::abs(d) < 1.0);
        auto dm = chimney_map(-std::conj(z));
        CHECK(std::abs(dm + std::conj(d)) < 1e-10);
    }
    for (double y : {-2.0, -0.5, 0.5, 3.0}) CHECK(std::abs(chimney_map({0.0, y}).real()) < 1e-12);
    CHECK(std::abs(chimney_map({0.0, 8.0}) - i) < 1e-3);
    CHECK_THROWS_AS(chimney_map({2.0, 1.0}), validation_error);
}

TEST_CASE("chimney deformation") {
    auto wall = PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_wall, Bound::at(1), Bound::at(3))});
    auto d = deform_arc(Deformation(Deformation::Kind::vertical_shrink, 0.5), wall);
    CHECK(d.chimney_pieces()[0].lo.value == 0.5);
    CHECK(d.chimney_pieces()[0].hi.value == 1.5);
    auto ray = PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_ray, Bound::at(1), Bound::at(4))});
    auto r = deform_arc(Deformation(Deformation::Kind::vertical_shrink, 0.5), ray);
    CHECK(r.chimney_pieces()[0].hi.value == 4.0);
    for (double eps : {1.0, 0.25, 1.0 / 4096, 1.0 / 65536}) {
        auto h = boundary_map_h(Deformation(Deformation::Kind::vertical_shrink, eps));
        CHECK(h.verify_monotone(10000));
        for (double th : {0.2, 1.0, 2.5, 3.3}) {
            auto p = CirclePoint::from_angle(th);
            CHECK(angle_gap(h(p.mirror()), h(p).mirror()) < 1e-8);
        }
    }
    auto h1 = boundary_map_h(Deformation(Deformation::Kind::vertical_shrink, 1.0));
    CHECK(angle_gap(h1(CirclePoint::from_angle(1.0)), CirclePoint::from_angle(1.0)) < 1e-12);
}

TEST_CASE("chimney arcs through the infinite prime ends") {
    auto j = PrimeEndArc::chimney({ChimneyArc(ChimneySide::left_wall, Bound::at(0), Bound::at(1)),
                                   ChimneyArc(ChimneySide::left_ray, Bound::minus_infinity(), Bound::at(-1)),
                                   ChimneyArc(ChimneySide::right_ray, Bound::at(1), Bound::plus_infinity()),
                                   ChimneyArc(ChimneySide::right_wall, Bound::at(0), Bound::at(1))});
    CHECK(j.connected());
    CHECK(j.contains_disk_point(CirclePoint::from_offset(0, 0.0)));
    CHECK(j.contains_disk_point(CirclePoint::from_offset(2, 0.0)));
    CHECK(j.contains_disk_point(CirclePoint::from_offset(3, 0.0)));
    auto [i0, j0] = canonical_arcs(DomainTag::chimney);
    CHECK(std::get<ChimneyPrimeEnd>(i0.components()[0].end) == ChimneyPrimeEnd::chimney_top());
    CHECK(family_modulus(i0, j0).value > 0);
    auto m = mirror_arc(i0);
    CHECK(std::get<ChimneyPrimeEnd>(m.components()[0].start) == ChimneyPrimeEnd::chimney_top());
}

TEST_CASE("half chimney modulus of a symmetric connected family") {
    // I through the top, J through the lower infinity; both symmetric
    auto i = PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_wall, Bound::at(1), Bound::plus_infinity()),
                                   ChimneyArc(ChimneySide::left_wall, Bound::at(1), Bound::plus_infinity())});
    auto j = PrimeEndArc::chimney({ChimneyArc(ChimneySide::left_wall, Bound::at(0), Bound::at(0.5)),
                                   ChimneyArc(ChimneySide::left_ray, Bound::minus_infinity(), Bound::at(-1)),
                                   ChimneyArc(ChimneySide::right_ray, Bound::at(1), Bound::plus_infinity()),
                                   ChimneyArc(ChimneySide::right_wall, Bound::at(0), Bound::at(0.5))});
    auto ih = PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_wall, Bound::at(1), Bound::plus_infinity())});
    auto jh = PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_ray, Bound::at(1), Bound::plus_infinity()),
                                    ChimneyArc(ChimneySide::right_wall, Bound::at(0), Bound::at(0.5))});
    double full = family_modulus(i, j).value;
    double half = chimney_half_modulus(ih, jh).value;
    CHECK(full == doctest::Approx(2.0 * half).epsilon(1e-10));
}
