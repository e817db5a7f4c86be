#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "confmod/delgrid.hpp"
#include "confmod/errors.hpp"

using namespace confmod;
using namespace confmod::delgrid;
using domains::Bound;
using domains::ChimneyArc;
using domains::ChimneySide;
using domains::PrimeEndArc;
using domains::StripArc;
using domains::StripSide;
using std::numbers::pi;

namespace {

currents::GeodesicBox symmetric_box(double lambda) {
    double a = std::acos(1.0 / std::sqrt(lambda));
    return currents::GeodesicBox::from_angles(-a, a, pi - a, pi + a);
}

kernels::CsrMatrix laplacian_1d(int n) {
    kernels::CsrMatrix a;
    a.n = n;
    a.row_ptr.push_back(0);
    for (int i = 0; i < n; ++i) {
        if (i > 0) a.col.push_back(i - 1), a.val.push_back(-1.0);
        a.col.push_back(i), a.val.push_back(2.0);
        if (i + 1 < n) a.col.push_back(i + 1), a.val.push_back(-1.0);
        a.row_ptr.push_back(static_cast<int>(a.col.size()));
    }
    return a;
}

}  // namespace

TEST_CASE("serial and parallel kernels agree") {
    const int n = 400;
    auto a = laplacian_1d(n);
    std::vector<double> b(n, 0.0);
    b.back() = 1.0;  // u_0 = 0, u_{n+1} = 1 folded into the right-hand side
    std::vector<double> xs(n, 0.0), xp(n, 0.0);
    auto rs = kernels::pcg(a, b, xs, 1e-12, 10000, kernels::Backend::serial);
    auto rp = kernels::pcg(a, b, xp, 1e-12, 10000, kernels::Backend::parallel);
    CHECK(rs.converged);
    CHECK(rp.converged);
    for (int i = 0; i < n; ++i) {
        CHECK(xs[i] == doctest::Approx(static_cast<double>(i + 1) / (n + 1)).epsilon(1e-9));
        CHECK(std::abs(xs[i] - xp[i]) < 1e-10);
    }
    std::vector<double> y1(n), y2(n);
    kernels::serial::spmv(a, xs, y1);
    kernels::parallel::spmv(a, xs, y2);
    CHECK(kernels::serial::dot(y1, y1) == doctest::Approx(kernels::parallel::dot(y2, y2)).epsilon(1e-13));
}

TEST_CASE("rectangle") {
    auto dom = rectangle_domain(2.0, 1.0, 1.0 / 64);
    auto m = grid_modulus(dom);
    CHECK(m.method == conformal::ModulusMethod::grid);
    CHECK(m.value == doctest::Approx(0.5).epsilon(0.005));
    CHECK(grid_modulus_dual(dom).value == doctest::Approx(2.0).epsilon(0.005));
    auto tall = rectangle_domain(1.0, 3.0, 1.0 / 64);
    CHECK(grid_modulus(tall).value == doctest::Approx(3.0).epsilon(0.005));

    auto lm = dom.build();
    auto s = solve_potential(lm);
    CHECK(s.residual <= 1e-10);
    CHECK(s.max_principle_violation < 1e-12);
    CHECK(s.h == doctest::Approx(1.0 / 64));
}

TEST_CASE("annulus") {
    auto dom = annulus_domain(1.0, 4.0, 1.0 / 32);
    CHECK(grid_modulus(dom).value == doctest::Approx(conformal::annulus_modulus(1.0, 4.0)).epsilon(0.01));
    auto s = solve_potential(dom.build());
    CHECK(s.max_principle_violation < 1e-9);
    CHECK_THROWS_AS(grid_modulus_dual(dom), validation_error);
}

TEST_CASE("disk quadrilaterals") {
    auto d5 = disk_quadrilateral_domain(symmetric_box(5.0), 1.0 / 32);
    auto g5 = grid_modulus(d5);
    CHECK(g5.value == doctest::Approx(conformal::quad_modulus(5.0).value).epsilon(0.01));
    CHECK(g5.error_estimate < 0.01 * g5.value);

    auto d2 = disk_quadrilateral_domain(symmetric_box(2.0), 1.0 / 32);
    CHECK(grid_modulus(d2).value == doctest::Approx(1.0).epsilon(0.01));
    CHECK(grid_modulus_dual(d2).value == doctest::Approx(1.0).epsilon(0.01));

    auto box = currents::GeodesicBox::from_angles(0.3, 1.1, 2.9, 4.4);
    auto dr = disk_quadrilateral_domain(box, 1.0 / 32);
    double m = grid_modulus(dr).value, md = grid_modulus_dual(dr).value;
    CHECK(m == doctest::Approx(conformal::quad_modulus_box(box).value).epsilon(0.01));
    CHECK(m * md == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("energy differences shrink under refinement") {
    auto e = grid_energies(disk_quadrilateral_domain(symmetric_box(5.0), 1.0 / 16), 3);
    CHECK(std::abs(e[1] - e[2]) < std::abs(e[0] - e[1]));
    CHECK(e[0] > e[1]);
    CHECK(e[1] > e[2]);
}

TEST_CASE("strip family matches the elliptic path") {
    auto c = domains::canonical_arcs(domains::DomainTag::strip);
    domains::Deformation d(domains::Deformation::Kind::horizontal_shrink, 1.0 / 64);
    auto i = domains::deform_arc(d, c.i0), j = domains::deform_arc(d, c.j0);
    auto g = grid_modulus(family_domain(i, j));
    CHECK(g.value == doctest::Approx(domains::family_modulus(i, j).value).epsilon(0.005));
}

TEST_CASE("chimney family matches the elliptic path") {
    auto c = domains::canonical_arcs(domains::DomainTag::chimney);
    domains::Deformation d(domains::Deformation::Kind::vertical_shrink, 1.0 / 16);
    auto i = domains::deform_arc(d, c.i0), j = domains::deform_arc(d, c.j0);
    GridOptions o;
    o.radius = 12;
    o.height = 6;
    auto g = grid_modulus(family_domain(i, j, o));
    CHECK(g.value == doctest::Approx(domains::family_modulus(i, j).value).epsilon(0.01));
}

TEST_CASE("symmetric meshes give symmetric potentials") {
    auto i = PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_wall, Bound::at(0.5), Bound::plus_infinity()),
                                   ChimneyArc(ChimneySide::left_wall, Bound::at(0.5), Bound::plus_infinity())});
    auto j = PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_ray, Bound::at(1.0), Bound::at(2.0)),
                                   ChimneyArc(ChimneySide::left_ray, Bound::at(-2.0), Bound::at(-1.0))});
    GridOptions o;
    o.radius = 6;
    o.height = 4;
    auto lm = family_domain(i, j, o).build();
    auto s = solve_potential(lm);
    CHECK(s.max_principle_violation < 1e-12);
    std::map<std::pair<double, double>, double> at;
    for (std::size_t k = 0; k < s.u.size(); ++k) at[{lm.mesh.nodes[k].real(), lm.mesh.nodes[k].imag()}] = s.u[k];
    double worst = 0.0;
    std::size_t matched = 0;
    for (const auto& [p, v] : at) {
        auto it = at.find({-p.first, p.second});
        if (it == at.end()) continue;
        ++matched;
        worst = std::max(worst, std::abs(v - it->second));
    }
    CHECK(matched == at.size());
    CHECK(worst < 1e-8);
}

TEST_CASE("mesh validation") {
    QuadtreeSpec s;
    s.rects = {{0, 0, 2, 1}};
    s.h_max = 0.125;
    s.h_min = 0.125;
    s.arc_i = {{{0, 0}, {0, 1}}};
    s.arc_j = {{{0, 1}, {2, 1}}};
    CHECK_THROWS_AS(quadtree_domain("touching", s).build(), validation_error);

    s.arc_j = {{{0.25, 0}, {2, 0}}};
    CHECK_THROWS_WITH_AS(quadtree_domain("narrow gap", s).build(), doctest::Contains("mesh too coarse"),
                         validation_error);

    s.arc_j = {{{1.5, 0}, {1.625, 0}}};
    CHECK_THROWS_WITH_AS(quadtree_domain("short", s).build(), doctest::Contains("shorter"), validation_error);

    s.rects = {{0, 0, 1.5, 1}};
    s.cell = 1.0;
    CHECK_THROWS_AS(quadtree_domain("misaligned", s).build(), validation_error);

    auto i = PrimeEndArc::strip({StripArc(StripSide::bottom, Bound::at(-30.0), Bound::at(0.0))});
    auto j = PrimeEndArc::strip({StripArc(StripSide::bottom, Bound::at(1.0), Bound::at(2.0))});
    CHECK_THROWS_AS(family_domain(i, j), validation_error);
    CHECK_THROWS_AS(rectangle_domain(-1.0, 1.0, 0.1), validation_error);
}

TEST_CASE("truncation study") {
    std::vector<double> radii{2.0, 4.0, 8.0};
    auto bounded = truncation_study([](double) { return rectangle_domain(2.0, 1.0, 1.0 / 16); }, radii);
    for (const auto& r : bounded.rows) CHECK(r.modulus == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(bounded.certified());

    auto c = domains::canonical_arcs(domains::DomainTag::strip);
    domains::Deformation d(domains::Deformation::Kind::horizontal_shrink, 0.25);
    auto i = domains::deform_arc(d, c.i0), j = domains::deform_arc(d, c.j0);
    std::vector<double> strip_radii{2.0, 3.0, 4.0};
    auto t = truncation_study(
        [&](double r) {
            GridOptions o;
            o.radius = r;
            return family_domain(i, j, o);
        },
        strip_radii);
    CHECK(std::isnan(t.rows[0].difference));
    CHECK(std::abs(t.rows[2].difference) * 2 <= std::abs(t.rows[1].difference));
    CHECK(t.certified());

    std::vector<double> bad{4.0, 2.0};
    CHECK_THROWS_AS(truncation_study([](double) { return rectangle_domain(1, 1, 0.25); }, bad), validation_error);
}

TEST_CASE("property corpus") {
    auto corpus = default_property_corpus();
    auto rep = family_property_check(corpus);
    REQUIRE(rep.rows.size() == corpus.size());
    for (const auto& r : rep.rows) {
        INFO(r.name << " lhs=" << r.lhs << " rhs=" << r.rhs);
        CHECK(r.holds);
    }
    CHECK(rep.all_hold());
}

TEST_CASE("planar bound dominates continua moduli") {
    conformal::Continua e{{{-1, 0}, {-1, 1}, {-0.5, 1}}}, f{{{0.5, -1}, {0.5, 0.5}}};
    double m = grid_modulus(continua_domain(e, f, 8, 0.25)).value;
    CHECK(m > 0.0);
    CHECK(m < conformal::mod_upper_bound(conformal::rel_distance(e, f)));
    conformal::Continua diag{{{0, 0}, {1, 1}}};
    CHECK_THROWS_AS(continua_domain(diag, f, 8, 0.25), validation_error);
}

TEST_CASE("solution csv") {
    auto dom = rectangle_domain(1.0, 1.0, 0.125);
    auto lm = dom.build();
    auto s = solve_potential(lm);
    std::ostringstream os;
    write_solution_csv(os, lm, s);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "x,y,u,label");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == lm.mesh.nodes.size());
}
