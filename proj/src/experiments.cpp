#include "confmod/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include "confmod/errors.hpp"
#include "confmod/numerics.hpp"

namespace confmod::experiments {

using currents::CirclePoint;
using currents::GeodesicBox;
using currents::NamedBox;
using domains::Bound;
using domains::ChimneyArc;
using domains::ChimneyPrimeEnd;
using domains::ChimneySide;
using domains::StripArc;
using domains::StripPrimeEnd;
using domains::StripSide;
using std::numbers::pi;

std::string to_string(Method m) {
    switch (m) {
        case Method::elliptic: return "elliptic";
        case Method::grid: return "grid";
        case Method::both: return "both";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    if (s == "elliptic") return Method::elliptic;
    if (s == "grid") return Method::grid;
    if (s == "both") return Method::both;
    throw validation_error("unknown method '" + s + "' (expected elliptic, grid or both)");
}

std::vector<double> dyadic_schedule(int first, int last, int step) {
    if (first > last || step < 1) throw validation_error("empty dyadic schedule");
    std::vector<double> out;
    for (int k = first; k <= last; k += step) out.push_back(std::ldexp(1.0, -k));
    return out;
}

domains::Deformation deformation(DomainTag d, double epsilon) {
    using K = domains::Deformation::Kind;
    return domains::Deformation(d == DomainTag::strip ? K::horizontal_shrink : K::vertical_shrink, epsilon);
}

namespace {

void check_schedule(std::span<const double> eps) {
    if (eps.empty()) throw validation_error("empty epsilon schedule");
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(eps[k] > 0.0)) throw validation_error("epsilon must be positive");
        if (k > 0 && !(eps[k] < eps[k - 1])) throw validation_error("epsilon schedule must be strictly decreasing");
    }
}

struct SplitArcs {
    PrimeEndArc right;
    PrimeEndArc left;
};

std::optional<SplitArcs> split_symmetric(const PrimeEndArc& a) {
    std::vector<ChimneyArc> r, l;
    for (const auto& p : a.chimney_pieces()) {
        if (p.side == ChimneySide::right_ray || p.side == ChimneySide::right_wall)
            r.push_back(p);
        else
            l.push_back(p);
    }
    if (r.empty() || l.empty()) return std::nullopt;
    SplitArcs s{PrimeEndArc::chimney(r), PrimeEndArc::chimney(l)};
    if (domains::mirror_arc(s.right).describe() != s.left.describe()) return std::nullopt;
    return s;
}

}  // namespace

conformal::Modulus elliptic_modulus(DomainTag d, const PrimeEndArc& i, const PrimeEndArc& j, double epsilon) {
    if (i.domain() != d || j.domain() != d) throw validation_error("arcs do not belong to the scenario domain");
    auto def = deformation(d, epsilon);
    auto id = domains::deform_arc(def, i), jd = domains::deform_arc(def, j);
    if (id.connected() && jd.connected()) return domains::family_modulus(id, jd);
    if (d == DomainTag::chimney) {
        auto si = split_symmetric(id), sj = split_symmetric(jd);
        if (si && sj) {
            auto half = domains::chimney_half_modulus(si->right, sj->right);
            half.value *= 2;
            half.error_estimate *= 2;
            return half;
        }
    }
    throw validation_error("elliptic path needs connected arcs or a mirror-symmetric chimney pair");
}

conformal::Modulus grid_family_modulus(DomainTag d, const PrimeEndArc& i, const PrimeEndArc& j, double epsilon,
                                       const delgrid::GridOptions& opts) {
    if (i.domain() != d || j.domain() != d) throw validation_error("arcs do not belong to the scenario domain");
    auto def = deformation(d, epsilon);
    return delgrid::grid_modulus(delgrid::family_domain(domains::deform_arc(def, i), domains::deform_arc(def, j), opts));
}

namespace {

bool is_endpoint(const PrimeEndArc& a, const domains::PrimeEnd& p) {
    for (const auto& c : a.components())
        if (c.start == p || c.end == p) return true;
    return false;
}

}  // namespace

int classify_strip(const PrimeEndArc& i, const PrimeEndArc& j) {
    if (i.domain() != DomainTag::strip || j.domain() != DomainTag::strip)
        throw validation_error("strip classification needs strip arcs");
    const domains::PrimeEnd minus = StripPrimeEnd::minus_infinity(), plus = StripPrimeEnd::plus_infinity();
    for (const auto* a : {&i, &j})
        if (is_endpoint(*a, minus) || is_endpoint(*a, plus))
            throw validation_error("unclassifiable arc: endpoint at an end of the strip (" + a->describe() + ")");
    const auto m = domains::map_prime_end(minus), p = domains::map_prime_end(plus);
    bool split = (i.contains_disk_point(m) && j.contains_disk_point(p)) ||
                 (i.contains_disk_point(p) && j.contains_disk_point(m));
    return split ? 1 : 0;
}

int classify_chimney(const PrimeEndArc& i, const PrimeEndArc& j) {
    if (i.domain() != DomainTag::chimney || j.domain() != DomainTag::chimney)
        throw validation_error("chimney classification needs chimney arcs");
    const std::array<ChimneyPrimeEnd, 2> corners = {ChimneyPrimeEnd::right_ray(1.0), ChimneyPrimeEnd::left_ray(-1.0)};
    const std::array<ChimneyPrimeEnd, 2> ray_side = {ChimneyPrimeEnd::right_ray_from_corner(1e-9),
                                                     ChimneyPrimeEnd::left_ray_from_corner(1e-9)};
    for (const auto& c : corners)
        if (i.contains_disk_point(domains::map_prime_end(c)))
            throw validation_error("unclassifiable arc: I contains a corner (" + i.describe() + ")");
    // I reaches the top along the wall of side k
    std::array<bool, 2> reaches = {false, false};
    for (const auto& p : i.chimney_pieces()) {
        if (p.hi.kind != Bound::Kind::plus_infinity) continue;
        if (p.side == ChimneySide::right_wall) reaches[0] = true;
        if (p.side == ChimneySide::left_wall) reaches[1] = true;
    }
    int count = 0;
    for (int k = 0; k < 2; ++k) {
        if (!j.contains_disk_point(domains::map_prime_end(corners[k]))) continue;
        if (!j.contains_disk_point(domains::map_prime_end(ray_side[k])))
            throw validation_error("unclassifiable arc: J ends at a corner from the wall (" + j.describe() + ")");
        if (reaches[k]) ++count;
    }
    return count;
}

namespace {

/// Grid moduli of the canonical family are shared by every scenario.
double cached_grid_i0j0(DomainTag d, double eps, const delgrid::GridOptions& o) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, double, double, double, double>, double> cache;
    auto key = std::make_tuple(static_cast<int>(d), eps, o.radius, o.height, o.h, o.grading);
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto c = domains::canonical_arcs(d);
    double v = grid_family_modulus(d, c.i0, c.j0, eps, o).value;
    std::lock_guard lock(mu);
    cache[key] = v;
    return v;
}

double extrapolated_limit(const std::vector<RatioRow>& rows) {
    const std::size_t m = std::min<std::size_t>(3, rows.size());
    std::vector<double> t, v;
    for (std::size_t k = rows.size() - m; k < rows.size(); ++k) {
        t.push_back(1.0 / rows[k].modulus_i0j0);
        v.push_back(rows[k].ratio);
    }
    return numerics::neville_at_zero(t, v);
}

RatioTable build_ratio_table(const Scenario& s, int expected) {
    check_schedule(s.epsilons);
    if (!s.grid_epsilons.empty()) check_schedule(s.grid_epsilons);
    if (s.i.domain() != s.domain || s.j.domain() != s.domain)
        throw validation_error("scenario " + s.id + ": arcs do not belong to the scenario domain");
    RatioTable t;
    t.scenario_id = s.id;
    t.domain = s.domain;
    t.expected_limit = expected;
    const auto canon = domains::canonical_arcs(s.domain);

    const bool want_elliptic = s.method != Method::grid;
    const bool want_grid = s.method != Method::elliptic;
    // the finite-modulus check at eps = 1 doubles as the elliptic availability test
    bool elliptic_ok = true;
    try {
        elliptic_modulus(s.domain, s.i, s.j, 1.0);
    } catch (const validation_error&) {
        if (want_elliptic) throw;
        elliptic_ok = false;
    }

    if (elliptic_ok) {
        for (double e : s.epsilons) {
            double m0 = elliptic_modulus(s.domain, canon.i0, canon.j0, e).value;
            double m = elliptic_modulus(s.domain, s.i, s.j, e).value;
            t.elliptic.push_back({e, conformal::ModulusMethod::elliptic, m0, m, m / m0});
        }
        t.elliptic_limit = extrapolated_limit(t.elliptic);
        t.elliptic_gap = std::abs(t.elliptic_limit - expected);
        t.elliptic_final_gap = std::abs(t.elliptic.back().ratio - expected);
        const std::size_t n = t.elliptic.size(), first = n > 8 ? n - 8 : 0;
        t.gap_monotone = n >= 2;
        for (std::size_t k = first + 1; k < n; ++k) {
            double g0 = std::abs(t.elliptic[k - 1].ratio - expected), g1 = std::abs(t.elliptic[k].ratio - expected);
            if (!(g1 < g0 || g1 <= 1e-12)) t.gap_monotone = false;
        }
    }
    if (want_grid) {
        const auto& sched = s.grid_epsilons.empty() ? s.epsilons : s.grid_epsilons;
        for (double e : sched) {
            double m0 = cached_grid_i0j0(s.domain, e, s.grid);
            double m = grid_family_modulus(s.domain, s.i, s.j, e, s.grid).value;
            t.grid.push_back({e, conformal::ModulusMethod::grid, m0, m, m / m0});
        }
        t.grid_limit = extrapolated_limit(t.grid);
        t.grid_gap = std::abs(t.grid_limit - expected);
        t.grid_final_gap = std::abs(t.grid.back().ratio - expected);
        if (elliptic_ok) {
            double worst = 0.0;
            for (const auto& g : t.grid) {
                double m0 = elliptic_modulus(s.domain, canon.i0, canon.j0, g.epsilon).value;
                double m = elliptic_modulus(s.domain, s.i, s.j, g.epsilon).value;
                worst = std::max({worst, std::abs(g.modulus_i0j0 / m0 - 1), std::abs(g.modulus_ij / m - 1)});
            }
            t.agreement = worst;
        }
    }
    return t;
}

}  // namespace

RatioTable ratio_table_strip(const Scenario& s) {
    if (s.domain != DomainTag::strip) throw validation_error("scenario " + s.id + " is not a strip scenario");
    return build_ratio_table(s, classify_strip(s.i, s.j));
}

RatioTable ratio_table_chimney(const Scenario& s) {
    if (s.domain != DomainTag::chimney) throw validation_error("scenario " + s.id + " is not a chimney scenario");
    return build_ratio_table(s, classify_chimney(s.i, s.j));
}

RatioTable ratio_table(const Scenario& s) {
    return s.domain == DomainTag::strip ? ratio_table_strip(s) : ratio_table_chimney(s);
}

// ------------------------------------------------------------ currents

NamedBox strip_parameter_box(std::string id, double p, double q) {
    if (!(p < q)) throw validation_error("parameter interval must be nonempty");
    auto phi = [](const StripPrimeEnd& e) { return domains::strip_map_boundary(e); };
    return {std::move(id), GeodesicBox(phi(StripPrimeEnd::bottom(p)), phi(StripPrimeEnd::bottom(q)),
                                       phi(StripPrimeEnd::top(q)), phi(StripPrimeEnd::top(p)))};
}

NamedBox angle_box(std::string id, double a, double b, double c, double d) {
    return {std::move(id), GeodesicBox::from_angles(a, b, c, d)};
}

double epsilon_star(DomainTag d, double epsilon) {
    auto c = domains::canonical_arcs(d);
    return 1.0 / elliptic_modulus(d, c.i0, c.j0, epsilon).value;
}

namespace {

void check_margin(std::span<const NamedBox> boxes, const std::vector<CirclePoint>& endpoints, double margin) {
    for (const auto& nb : boxes)
        for (const auto* p : {&nb.box.a(), &nb.box.b(), &nb.box.c(), &nb.box.d()})
            for (const auto& e : endpoints)
                if (std::abs(std::remainder(p->theta() - e.theta(), 2 * pi)) < margin)
                    throw validation_error("box " + nb.id + " has a corner within the margin of a lamination endpoint");
}

CurrentsTable run_pipeline(std::string name, std::span<const NamedBox> boxes, std::span<const double> schedule,
                           const currents::MeasuredLamination& target,
                           const std::function<currents::BoundaryMap(double)>& map_at,
                           const std::function<double(double)>& scale_at, const std::function<double(double)>& rate_at,
                           const CurrentsOptions& o) {
    check_schedule(schedule);
    CurrentsTable t;
    t.pipeline = std::move(name);
    std::vector<currents::ScaledMeasure> scaled;
    for (double e : schedule) {
        auto h = std::make_shared<currents::BoundaryMap>(map_at(e));
        double scale = scale_at(e);
        double rate = rate_at(e);
        t.epsilons.push_back(e);
        t.rate_variables.push_back(rate);
        scaled.push_back({e, rate, [h, scale](const GeodesicBox& b) { return scale * currents::pullback_liouville(*h, b); }});
    }
    t.table = currents::weakstar_report(scaled, target, boxes);
    double num = 0.0, den = 0.0;
    for (const auto& r : t.table.rows) {
        num += r.limit * r.target;
        den += r.target * r.target;
    }
    if (den > 0.0) {
        t.constant = num / den;
        t.max_residual = 0.0;
        for (auto& r : t.table.rows) {
            double res = (r.limit - t.constant * r.target) / t.constant;
            t.residuals.push_back(res);
            t.max_residual = std::max(t.max_residual, std::abs(res));
            r.gap = std::abs(r.limit - t.constant * r.target);
            r.target *= t.constant;
        }
        t.flagged = t.max_residual > o.tolerance;
    } else {
        t.flagged = true;
    }
    return t;
}

}  // namespace

CurrentsTable strip_shrink_currents(std::span<const NamedBox> boxes, std::span<const double> schedule,
                                    const CurrentsOptions& o) {
    check_margin(boxes, {CirclePoint::from_angle(0.0), CirclePoint::from_angle(pi)}, o.margin);
    return run_pipeline(
        "strip-shrink", boxes, schedule, domains::strip_vertical_lamination(),
        [](double e) { return domains::boundary_map_h(deformation(DomainTag::strip, 1.0 / e)); },
        [](double e) { return e; }, [](double e) { return e; }, o);
}

CurrentsTable strip_stretch_currents(std::span<const NamedBox> boxes, std::span<const double> schedule,
                                     const CurrentsOptions& o) {
    auto m1 = CirclePoint::from_angle(pi), p1 = CirclePoint::from_angle(0.0);
    check_margin(boxes, {m1, p1}, o.margin);
    currents::DiracSum target({{currents::Geodesic(m1, p1), 1.0}});
    return run_pipeline(
        "strip-stretch", boxes, schedule, target,
        [](double e) { return domains::boundary_map_h(deformation(DomainTag::strip, e)); },
        [](double e) { return epsilon_star(DomainTag::strip, e); },
        [](double e) { return epsilon_star(DomainTag::strip, e); }, o);
}

CurrentsTable chimney_currents(std::span<const NamedBox> boxes, std::span<const double> schedule,
                               const CurrentsOptions& o) {
    auto top = CirclePoint::from_angle(pi / 2), p1 = CirclePoint::from_angle(0.0), m1 = CirclePoint::from_angle(pi);
    check_margin(boxes, {top, p1, m1}, o.margin);
    currents::DiracSum target({{currents::Geodesic(top, p1), 1.0}, {currents::Geodesic(top, m1), 1.0}});
    return run_pipeline(
        "chimney", boxes, schedule, target,
        [](double e) { return domains::boundary_map_h(deformation(DomainTag::chimney, e)); },
        [](double e) { return epsilon_star(DomainTag::chimney, e); },
        [](double e) { return epsilon_star(DomainTag::chimney, e); }, o);
}

// ------------------------------------------------------------ rates

std::vector<RateFit> rate_report(std::span<const ConvergenceSeries> series) {
    std::vector<RateFit> out;
    for (const auto& s : series) {
        if (s.t.size() != s.values.size()) throw validation_error("series " + s.id + " has mismatched columns");
        if (s.t.size() < 4) throw validation_error("rate fit needs at least four schedule points");
        RateFit f;
        f.id = s.id;
        std::vector<double> lx, ly;
        const double floor = 1e-13 * std::max(1.0, std::abs(s.limit));
        for (std::size_t k = 0; k < s.t.size(); ++k) {
            double d = std::abs(s.values[k] - s.limit);
            if (d > floor && s.t[k] > 0.0) {
                lx.push_back(std::log(s.t[k]));
                ly.push_back(std::log(d));
            }
        }
        f.points = lx.size();
        if (lx.size() >= 4) {
            auto fit = numerics::least_squares_line(lx, ly);
            f.slope = fit.slope;
            f.intercept = fit.intercept;
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<ConvergenceSeries> series_of(const CurrentsTable& t) {
    std::vector<ConvergenceSeries> out;
    for (const auto& r : t.table.rows) out.push_back({r.box_id, t.rate_variables, r.values, r.limit});
    return out;
}

std::vector<ConvergenceSeries> series_of(const RatioTable& t) {
    ConvergenceSeries s{t.scenario_id, {}, {}, static_cast<double>(t.expected_limit)};
    for (const auto& r : t.elliptic) {
        s.t.push_back(1.0 / r.modulus_i0j0);
        s.values.push_back(r.ratio);
    }
    return {s};
}

// ------------------------------------------------------------ defaults

namespace {

PrimeEndArc strip_arc(std::vector<StripArc> pieces) { return PrimeEndArc::strip(std::move(pieces)); }
PrimeEndArc chimney_arc(std::vector<ChimneyArc> pieces) { return PrimeEndArc::chimney(std::move(pieces)); }

StripArc bottom(Bound lo, Bound hi) { return StripArc(StripSide::bottom, lo, hi); }
StripArc top(Bound lo, Bound hi) { return StripArc(StripSide::top, lo, hi); }
Bound at(double v) { return Bound::at(v); }
const Bound ninf = Bound::minus_infinity();
const Bound pinf = Bound::plus_infinity();

}  // namespace

std::vector<double> default_strip_schedule() { return dyadic_schedule(1, 16); }
std::vector<double> default_chimney_schedule() { return dyadic_schedule(4, 48, 4); }
std::vector<double> default_chimney_grid_schedule() { return dyadic_schedule(8, 40, 8); }

std::vector<Scenario> default_strip_scenarios() {
    auto sched = default_strip_schedule();
    auto make = [&](std::string id, PrimeEndArc i, PrimeEndArc j) {
        return Scenario{std::move(id), DomainTag::strip, std::move(i), std::move(j), sched, Method::elliptic, {}, {}};
    };
    return {
        make("strip-one-a", strip_arc({bottom(ninf, at(-0.2)), top(ninf, at(0.1))}),
             strip_arc({bottom(at(1.1), pinf), top(at(0.9), pinf)})),
        make("strip-one-b", strip_arc({bottom(ninf, at(0.3)), top(ninf, at(-0.3))}),
             strip_arc({bottom(at(1.2), pinf), top(at(1.0), pinf)})),
        make("strip-one-c", strip_arc({bottom(ninf, at(0.0)), top(ninf, at(0.0))}),
             strip_arc({bottom(at(0.8), pinf), top(at(1.2), pinf)})),
        make("strip-mirror-a", strip_arc({bottom(at(1.0), pinf), top(at(0.8), pinf)}),
             strip_arc({bottom(ninf, at(0.2)), top(ninf, at(-0.1))})),
        make("strip-mirror-b", strip_arc({bottom(at(0.7), pinf), top(at(1.3), pinf)}),
             strip_arc({bottom(ninf, at(-0.3)), top(ninf, at(0.1))})),
        make("strip-mirror-c", strip_arc({bottom(at(1.5), pinf), top(at(1.0), pinf)}),
             strip_arc({bottom(ninf, at(0.0)), top(ninf, at(0.5))})),
        make("strip-zero-near", strip_arc({bottom(at(0.0), at(0.1))}), strip_arc({bottom(at(3.0), at(3.1))})),
        make("strip-zero-far", strip_arc({bottom(at(0.0), at(0.1))}), strip_arc({bottom(at(5.0), at(5.1))})),
        make("strip-zero-short", strip_arc({bottom(at(0.0), at(0.05))}), strip_arc({bottom(at(3.0), at(3.05))})),
    };
}

std::vector<Scenario> default_chimney_scenarios() {
    auto sched = default_chimney_schedule();
    auto grid_sched = default_chimney_grid_schedule();
    delgrid::GridOptions g;
    auto make = [&](std::string id, PrimeEndArc i, PrimeEndArc j) {
        return Scenario{std::move(id), DomainTag::chimney, std::move(i), std::move(j), sched, Method::both, grid_sched, g};
    };
    auto rw = [](Bound lo, Bound hi) { return ChimneyArc(ChimneySide::right_wall, lo, hi); };
    auto lw = [](Bound lo, Bound hi) { return ChimneyArc(ChimneySide::left_wall, lo, hi); };
    auto rr = [](Bound lo, Bound hi) { return ChimneyArc(ChimneySide::right_ray, lo, hi); };
    auto lr = [](Bound lo, Bound hi) { return ChimneyArc(ChimneySide::left_ray, lo, hi); };
    return {
        make("chimney-two-symmetric", chimney_arc({rw(at(1.0), pinf), lw(at(1.0), pinf)}),
             chimney_arc({rr(at(1.0), at(2.0)), lr(at(-2.0), at(-1.0))})),
        make("chimney-two-wide", chimney_arc({rw(at(0.5), pinf), lw(at(0.5), pinf)}),
             chimney_arc({rr(at(1.0), at(3.0)), lr(at(-3.0), at(-1.0))})),
        make("chimney-one-right", chimney_arc({rw(at(1.0), pinf)}), chimney_arc({rr(at(1.0), at(3.0))})),
        make("chimney-one-top", chimney_arc({rw(at(1.0), pinf), lw(at(2.0), pinf)}), chimney_arc({rr(at(1.0), at(2.0))})),
        make("chimney-one-left", chimney_arc({lw(at(1.0), pinf)}), chimney_arc({lr(at(-3.0), at(-1.0))})),
        make("chimney-one-rays", chimney_arc({rw(at(1.0), pinf)}), chimney_arc({rr(at(1.0), pinf), lr(ninf, at(-1.0))})),
        make("chimney-zero-far", chimney_arc({rw(at(1.0), pinf)}), chimney_arc({rr(at(3.0), at(4.0))})),
        make("chimney-zero-across", chimney_arc({rw(at(1.0), pinf)}), chimney_arc({lr(at(-3.0), at(-2.0))})),
        make("chimney-zero-rays", chimney_arc({rr(at(4.0), at(5.0))}), chimney_arc({rr(at(1.0), at(2.0))})),
    };
}

std::vector<NamedBox> default_shrink_boxes() {
    auto phi = [](double x) { return domains::strip_map_boundary(StripPrimeEnd::bottom(x)); };
    return {strip_parameter_box("param[0,1]", 0.0, 1.0), strip_parameter_box("param[-1.5,1.5]", -1.5, 1.5),
            strip_parameter_box("param[1,2]", 1.0, 2.0), strip_parameter_box("param[-1.5,-0.5]", -1.5, -0.5),
            {"off-support", GeodesicBox(phi(-2.0), phi(-1.0), phi(1.0), phi(2.0))}};
}

std::vector<NamedBox> default_stretch_boxes() {
    return {angle_box("separating-a", pi - 0.5, pi + 0.5, 2 * pi - 0.3, 0.4),
            angle_box("separating-b", 2.0, 3.5, 5.5, 0.9), angle_box("separating-c", 1.8, 4.0, 5.0, 1.2),
            angle_box("upper", 0.5, 1.2, 1.8, 2.5), angle_box("lower", 3.8, 4.4, 5.0, 5.6)};
}

std::vector<NamedBox> default_chimney_boxes() {
    return {angle_box("pair-right", 1.2, 2.0, 2 * pi - 0.4, 0.3), angle_box("pair-left", 1.1, 1.9, 2.9, 3.5),
            angle_box("pair-both", 1.2, 2.0, 2.5, 0.6), angle_box("away", 3.6, 4.2, 4.8, 5.6)};
}

// ------------------------------------------------------------ csv

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string method_name(conformal::ModulusMethod m) { return conformal::to_string(m); }

std::string quoted(const std::string& f) {
    if (f.find_first_of(",\"\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::vector<std::string> split_fields(const std::string& line, std::size_t lineno) {
    std::vector<std::string> f(1);
    bool in_quotes = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        char c = line[k];
        if (in_quotes) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                f.back() += '"';
                ++k;
            } else if (c == '"') {
                in_quotes = false;
            } else {
                f.back() += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            f.emplace_back();
        } else {
            f.back() += c;
        }
    }
    if (in_quotes) throw validation_error("CSV line " + std::to_string(lineno) + ": unterminated quote");
    return f;
}

void row(std::ostream& os, const CsvRecord& r) {
    os << quoted(r.scenario_id) << ',' << num(r.epsilon) << ',' << num(r.modulus_i0j0) << ',' << num(r.modulus_ij) << ','
       << num(r.ratio) << ',' << num(r.expected_limit) << ',' << quoted(r.box_id) << ',' << num(r.scaled_measure) << ','
       << num(r.target) << ',' << num(r.gap) << ',' << quoted(r.method) << '\n';
}

}  // namespace

void write_csv_header(std::ostream& os) {
    os << "scenario_id,epsilon,modulus_I0J0,modulus_IJ,ratio,expected_limit,box_id,scaled_measure,target,gap,method\n";
}

void write_csv(std::ostream& os, const RatioTable& t) {
    for (const auto* rows : {&t.elliptic, &t.grid})
        for (const auto& r : *rows) {
            CsvRecord c;
            c.scenario_id = t.scenario_id;
            c.epsilon = r.epsilon;
            c.modulus_i0j0 = r.modulus_i0j0;
            c.modulus_ij = r.modulus_ij;
            c.ratio = r.ratio;
            c.expected_limit = t.expected_limit;
            c.gap = std::abs(r.ratio - t.expected_limit);
            c.method = method_name(r.method);
            row(os, c);
        }
}

void write_csv(std::ostream& os, const CurrentsTable& t, const std::string& scenario_id) {
    for (const auto& r : t.table.rows)
        for (std::size_t k = 0; k < r.values.size(); ++k) {
            CsvRecord c;
            c.scenario_id = scenario_id;
            c.epsilon = r.epsilons[k];
            c.box_id = r.box_id;
            c.scaled_measure = r.values[k];
            c.target = r.target;
            c.gap = std::abs(r.values[k] - r.target);
            c.method = t.pipeline;
            row(os, c);
        }
}

std::vector<CsvRecord> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw validation_error("empty CSV");
    std::ostringstream expected;
    write_csv_header(expected);
    if (line + "\n" != expected.str()) throw validation_error("unexpected CSV header: " + line);
    std::vector<CsvRecord> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_fields(line, lineno);
        if (f.size() != 11) throw validation_error("CSV line " + std::to_string(lineno) + ": expected 11 fields");
        auto d = [&](const std::string& s) {
            if (s.empty()) return nan;
            try {
                return std::stod(s);
            } catch (const std::exception&) {
                throw validation_error("CSV line " + std::to_string(lineno) + ": bad number '" + s + "'");
            }
        };
        out.push_back({f[0], d(f[1]), d(f[2]), d(f[3]), d(f[4]), d(f[5]), f[6], d(f[7]), d(f[8]), d(f[9]), f[10]});
    }
    return out;
}

}  // namespace confmod::experiments
