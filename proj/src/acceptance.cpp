#include "confmod/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "confmod/config.hpp"
#include "confmod/delgrid.hpp"
#include "confmod/errors.hpp"
#include "confmod/experiments.hpp"

namespace confmod::acceptance {

using domains::DomainTag;
using experiments::RatioTable;
using std::numbers::pi;

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

class Recorder {
public:
    Recorder(Criterion& c, double scale) : c_(c), scale_(scale) {}

    /// Records value <= bound (bound scaled by the tolerance factor).
    void at_most(const std::string& what, double value, double bound) {
        double b = bound * scale_;
        std::string item = what + "=" + fmt(value) + " (<= " + fmt(b) + ")";
        c_.details.push_back(item);
        if (!(value <= b)) c_.failures.push_back(item);
    }
    void holds(const std::string& what, bool ok) {
        c_.details.push_back(what + (ok ? ": yes" : ": no"));
        if (!ok) c_.failures.push_back(what);
    }
    void note(const std::string& item) { c_.details.push_back(item); }

private:
    Criterion& c_;
    double scale_;
};

Criterion timed(int number, std::string name, const Options& o, const std::function<void(Recorder&)>& body) {
    Criterion c;
    c.number = number;
    c.name = std::move(name);
    Recorder r(c, o.tolerance_scale);
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(r);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.passed = c.failures.empty();
    return c;
}

currents::GeodesicBox symmetric_box(double lambda) {
    double a = std::acos(1.0 / std::sqrt(lambda));
    return currents::GeodesicBox::from_angles(-a, a, pi - a, pi + a);
}

const currents::WeakStarRow& row_of(const experiments::CurrentsTable& t, const std::string& id) {
    for (const auto& r : t.table.rows)
        if (r.box_id == id) return r;
    throw validation_error("box " + id + " missing from the currents table");
}

/// Axis-parallel staircase with 2 or 3 vertices on a quarter lattice inside
/// x in [x0, x1].
conformal::Continua random_staircase(std::mt19937_64& rng, double x0, double x1) {
    auto pick = [&](double lo, double hi) {
        std::uniform_int_distribution<int> d(static_cast<int>(std::lround(lo * 4)), static_cast<int>(std::lround(hi * 4)));
        return d(rng) / 4.0;
    };
    std::uniform_int_distribution<int> count(2, 3);
    conformal::Continua c;
    std::complex<double> p(pick(x0, x1), pick(-3.0, 3.0));
    c.vertices.push_back(p);
    int n = count(rng);
    bool horizontal = std::bernoulli_distribution(0.5)(rng);
    for (int k = 1; k < n; ++k) {
        std::complex<double> q = p;
        do {
            q = horizontal ? std::complex<double>(pick(x0, x1), p.imag()) : std::complex<double>(p.real(), pick(-3.0, 3.0));
        } while (std::abs(q - p) < 1.0);
        c.vertices.push_back(q);
        p = q;
        horizontal = !horizontal;
    }
    return c;
}

}  // namespace

double tolerance_scale_from_env() {
    const char* s = std::getenv("CONFMOD_ACCEPT_TOL_SCALE");
    if (!s || !*s) return 1.0;
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || !(v > 0.0) || !std::isfinite(v))
        throw validation_error(std::string("CONFMOD_ACCEPT_TOL_SCALE must be a positive number, got '") + s + "'");
    return v;
}

Criterion quadrilateral_calculus(const Options& o) {
    return timed(1, "quadrilateral calculus", o, [](Recorder& r) {
        r.at_most("|mod(2)-1|", std::abs(conformal::quad_modulus(2.0).value - 1.0), 1e-10);

        std::mt19937_64 rng(20240601);
        // lambda - 1 log-uniform, so both near-degenerate ends are sampled
        std::uniform_real_distribution<double> u(-6.0, 5.99);
        double worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            double lambda = 1.0 + std::pow(10.0, u(rng));
            double dual = lambda / (lambda - 1.0);
            double p = conformal::quad_modulus(lambda).value * conformal::quad_modulus(dual).value;
            worst = std::max(worst, std::abs(p - 1.0));
        }
        r.at_most("max |mod(l) mod(l/(l-1)) - 1| over 1000 l", worst, 1e-8);

        auto excess = [](double lambda) {
            return conformal::quad_modulus(lambda).value - std::log(lambda) / pi - 2.0 / pi * std::log(4.0);
        };
        r.at_most("|excess at 1e6|", std::abs(excess(1e6)), 1e-3);
        bool decreasing = true;
        double prev = INFINITY;
        for (int k = 0; k <= 50; ++k) {
            double v = std::abs(excess(std::pow(10.0, 3.0 + 5.0 * k / 50)));
            if (!(v < prev)) decreasing = false;
            prev = v;
        }
        r.holds("excess decreasing over 1e3..1e8", decreasing);
    });
}

Criterion oracle_agreement(const Options& o) {
    return timed(2, "oracle agreement", o, [](Recorder& r) {
        using namespace delgrid;
        auto rect = rectangle_domain(2.0, 1.0, 1.0 / 64);
        double m = grid_modulus(rect).value, md = grid_modulus_dual(rect).value;
        r.at_most("rectangle 2x1 rel err", std::abs(m / 0.5 - 1), 0.005);
        r.at_most("rectangle duality |m md - 1|", std::abs(m * md - 1), 0.02);

        double a = grid_modulus(annulus_domain(1.0, 4.0, 1.0 / 32)).value;
        r.at_most("annulus 1<|z|<4 rel err", std::abs(a / conformal::annulus_modulus(1.0, 4.0) - 1), 0.01);

        std::vector<std::pair<std::string, currents::GeodesicBox>> boxes = {
            {"disk lambda=5", symmetric_box(5.0)},
            {"disk lambda=2", symmetric_box(2.0)},
            {"disk box(0.3,1.1,2.9,4.4)", currents::GeodesicBox::from_angles(0.3, 1.1, 2.9, 4.4)}};
        for (const auto& [name, box] : boxes) {
            auto dom = disk_quadrilateral_domain(box, 1.0 / 32);
            double g = grid_modulus(dom).value, gd = grid_modulus_dual(dom).value;
            r.at_most(name + " rel err", std::abs(g / conformal::quad_modulus_box(box).value - 1), 0.01);
            r.at_most(name + " duality |m md - 1|", std::abs(g * gd - 1), 0.02);
        }
    });
}

Criterion strip_ratios(const Options& o) {
    return timed(3, "strip ratio limits", o, [](Recorder& r) {
        auto cfg = config::default_config(DomainTag::strip);
        int count[2] = {0, 0};
        int mirrored = 0;
        for (const auto& s : cfg.scenarios) {
            auto t = experiments::ratio_table_strip(s);
            r.at_most(s.id + " gap at eps=" + fmt(t.elliptic.back().epsilon), t.elliptic_final_gap, 0.05);
            r.holds(s.id + " gap decreasing over last 8", t.gap_monotone);
            r.note(s.id + " extrapolated limit=" + fmt(t.elliptic_limit) + " expected=" + std::to_string(t.expected_limit));
            ++count[t.expected_limit];
            auto minus = domains::map_prime_end(domains::StripPrimeEnd::minus_infinity());
            if (t.expected_limit == 1 && s.i.contains_disk_point(domains::map_prime_end(domains::StripPrimeEnd::plus_infinity())) &&
                s.j.contains_disk_point(minus))
                ++mirrored;
        }
        r.holds("final epsilon is 2^-16", cfg.scenarios.front().epsilons.back() == std::ldexp(1.0, -16));
        r.holds("three scenarios with limit 1 (-1 in I, 1 in J)", count[1] - mirrored >= 3);
        r.holds("three mirrored scenarios with limit 1", mirrored >= 3);
        r.holds("three bounded scenarios with limit 0", count[0] >= 3);
    });
}

Criterion strip_currents(const Options& o) {
    return timed(4, "strip currents", o, [](Recorder& r) {
        auto cfg = config::default_config(DomainTag::strip);
        experiments::CurrentsOptions co;
        co.margin = cfg.tolerances.margin;
        auto sh = experiments::strip_shrink_currents(cfg.shrink_boxes, cfg.currents_schedule, co);
        double one = row_of(sh, "param[0,1]").limit, three = row_of(sh, "param[-1.5,1.5]").limit;
        r.at_most("shrink |limit[-1.5,1.5] / limit[0,1] - 3| / 3", std::abs(three / one - 3.0) / 3.0, 0.02);
        r.at_most("shrink |off-support| / on-support", std::abs(row_of(sh, "off-support").limit) / one, 1e-3);
        r.note("fitted constant c=" + fmt(sh.constant));
        double spread = 0.0;
        for (const auto& row : sh.table.rows)
            if (row.target > 0.0) spread = std::max(spread, std::abs(row.limit / row.target - 1.0));
        r.at_most("shrink per-box constant spread", spread, 0.01);

        auto st = experiments::strip_stretch_currents(cfg.stretch_boxes, cfg.currents_schedule, co);
        double lo = INFINITY, hi = 0.0, off = 0.0;
        for (const auto& row : st.table.rows) {
            if (row.box_id.rfind("separating", 0) == 0) {
                lo = std::min(lo, row.limit);
                hi = std::max(hi, row.limit);
            } else {
                off = std::max(off, std::abs(row.limit));
            }
        }
        r.at_most("stretch separating limits max/min - 1", hi / lo - 1.0, 0.02);
        r.at_most("stretch non-separating / separating", off / lo, 0.01);
        r.note("stretch limit=" + fmt(lo));
    });
}

Criterion chimney_ratios(const Options& o) {
    return timed(5, "chimney ratio limits", o, [&o](Recorder& r) {
        auto cfg = config::default_config(DomainTag::chimney);
        bool seen[3] = {false, false, false};
        for (auto s : cfg.scenarios) {
            if (o.quick) s.method = experiments::Method::elliptic;
            auto t = experiments::ratio_table_chimney(s);
            seen[t.expected_limit] = true;
            r.at_most(s.id + " elliptic gap at eps=" + fmt(t.elliptic.back().epsilon), t.elliptic_final_gap, 0.1);
            if (!t.grid.empty()) {
                r.at_most(s.id + " grid gap at eps=" + fmt(t.grid.back().epsilon), t.grid_final_gap, 0.15);
                r.at_most(s.id + " elliptic/grid agreement", t.agreement, 0.02);
            }
        }
        r.holds("limits 0, 1 and 2 all exercised", seen[0] && seen[1] && seen[2]);
        if (o.quick) r.note("grid path skipped (quick)");

        // symmetry rule on the grid: full chimney against twice the half chimney
        using domains::Bound;
        using domains::ChimneyArc;
        using domains::ChimneySide;
        auto c = domains::canonical_arcs(DomainTag::chimney);
        auto it = domains::PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_wall, Bound::at(1.0), Bound::plus_infinity()),
                                                 ChimneyArc(ChimneySide::left_wall, Bound::at(1.0), Bound::plus_infinity())});
        auto jt = domains::PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_ray, Bound::at(1.0), Bound::at(2.0)),
                                                 ChimneyArc(ChimneySide::left_ray, Bound::at(-2.0), Bound::at(-1.0))});
        const double eps = std::ldexp(1.0, -8);
        auto d = experiments::deformation(DomainTag::chimney, eps);
        delgrid::GridOptions g;
        if (o.quick) {
            g.radius = 8;
            g.height = 4;
        }
        double full = experiments::grid_family_modulus(DomainTag::chimney, it, jt, eps, g).value;
        double half = delgrid::grid_modulus(
                          delgrid::chimney_half_domain(domains::deform_arc(d, c.i0), domains::deform_arc(d, c.j0), g))
                          .value;
        r.at_most("symmetry |mod(I~,J~) / (2 mod+) - 1| on the grid", std::abs(full / (2 * half) - 1), 0.02);
        double ell = experiments::elliptic_modulus(DomainTag::chimney, it, jt, eps).value;
        r.at_most("symmetry grid full vs elliptic 2 mod+", std::abs(full / ell - 1), 0.02);
    });
}

Criterion chimney_currents(const Options& o) {
    return timed(6, "chimney currents", o, [](Recorder& r) {
        auto cfg = config::default_config(DomainTag::chimney);
        experiments::CurrentsOptions co;
        co.margin = cfg.tolerances.margin;
        auto t = experiments::chimney_currents(cfg.chimney_boxes, cfg.currents_schedule, co);
        double right = row_of(t, "pair-right").limit, left = row_of(t, "pair-left").limit;
        double both = row_of(t, "pair-both").limit;
        r.at_most("|both / (2 right) - 1|", std::abs(both / (2 * right) - 1), 0.03);
        r.at_most("|both / (right + left) - 1|", std::abs(both / (right + left) - 1), 0.03);
        r.at_most("|away| / single", std::abs(row_of(t, "away").limit) / right, 0.01);
        r.note("single-pair limit=" + fmt(right) + " raw at final eps=" + fmt(row_of(t, "pair-right").values.back()));
        bool ok = true;
        for (std::size_t k = 0; k < t.rate_variables.size(); ++k) {
            if (!(t.rate_variables[k] > 0.0)) ok = false;
            if (k > 0 && !(t.rate_variables[k] < t.rate_variables[k - 1])) ok = false;
        }
        r.holds("eps* positive and strictly decreasing", ok);
        r.note("eps* at final eps=" + fmt(t.rate_variables.back()));
    });
}

Criterion property_suites(const Options& o) {
    return timed(7, "property suites", o, [](Recorder& r) {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> ang(0.0, 2 * pi), rad(0.0, 0.95);
        double mob = 0.0, split = 0.0;
        for (int k = 0; k < 500; ++k) {
            std::array<double, 4> t{ang(rng), ang(rng), ang(rng), ang(rng)};
            std::sort(t.begin(), t.end());
            if (t[1] - t[0] < 1e-3 || t[2] - t[1] < 1e-3 || t[3] - t[2] < 1e-3 || 2 * pi - t[3] + t[0] < 1e-3) continue;
            auto box = currents::GeodesicBox::from_angles(t[0], t[1], t[2], t[3]);
            double l = currents::liouville_box(box);
            currents::DiskMobius m(std::polar(rad(rng), ang(rng)), ang(rng));
            double lm = currents::liouville_box(currents::GeodesicBox(m(box.a()), m(box.b()), m(box.c()), m(box.d())));
            mob = std::max(mob, std::abs(lm - l) / std::max(1.0, l));
            double mid = 0.5 * (t[0] + t[1]);
            double parts = currents::liouville_box(currents::GeodesicBox::from_angles(t[0], mid, t[2], t[3])) +
                           currents::liouville_box(currents::GeodesicBox::from_angles(mid, t[1], t[2], t[3]));
            split = std::max(split, std::abs(parts - l) / std::max(1.0, l));
        }
        r.at_most("Liouville Moebius invariance", mob, 1e-10);
        r.at_most("Liouville arc-splitting additivity", split, 1e-10);

        auto corpus = delgrid::default_property_corpus();
        auto rep = delgrid::family_property_check(corpus, 0.02);
        for (const auto& row : rep.rows)
            r.holds("delgrid " + delgrid::to_string(row.kind) + " " + row.name + " (" + fmt(row.lhs) + " vs " + fmt(row.rhs) + ")",
                    row.holds);

        std::mt19937_64 crng(11);
        int dominated = 0, total = 0;
        double worst = 0.0;
        for (int k = 0; k < 50; ++k) {
            auto e = random_staircase(crng, -3.0, -0.5), f = random_staircase(crng, 0.5, 3.0);
            double g = delgrid::grid_modulus(delgrid::continua_domain(e, f, 4, 0.5)).value;
            double bound = conformal::mod_upper_bound(conformal::rel_distance(e, f));
            ++total;
            if (g <= bound) ++dominated;
            worst = std::max(worst, g / bound);
        }
        r.holds("mod_upper_bound dominates " + std::to_string(dominated) + "/" + std::to_string(total) +
                    " continua pairs (max ratio " + fmt(worst) + ")",
                dominated == total);

        auto samples = currents::monotonicity_samples(10000);
        int maps = 0;
        bool monotone = true;
        for (double e : experiments::default_strip_schedule()) {
            for (double f : {e, 1.0 / e}) {
                monotone = monotone && domains::boundary_map_h(experiments::deformation(DomainTag::strip, f)).is_monotone_on(samples);
                ++maps;
            }
        }
        for (double e : experiments::default_chimney_schedule()) {
            monotone = monotone && domains::boundary_map_h(experiments::deformation(DomainTag::chimney, e)).is_monotone_on(samples);
            ++maps;
        }
        r.holds("boundary maps monotone on 1e4 samples (" + std::to_string(maps) + " maps)", monotone);
    });
}

std::vector<Criterion> run_all(const Options& o, std::ostream* progress) {
    std::vector<std::function<Criterion(const Options&)>> all = {
        quadrilateral_calculus, oracle_agreement, strip_ratios, strip_currents,
        chimney_ratios,         chimney_currents, property_suites};
    std::vector<Criterion> out;
    for (const auto& f : all) {
        out.push_back(f(o));
        if (progress) *progress << format(out.back(), false) << std::flush;
    }
    return out;
}

std::string format(const Criterion& c, bool verbose) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    os << "criterion " << c.number << "  " << (c.passed ? "PASS" : "FAIL") << "  " << c.name << "  (" << c.seconds
       << " s)\n";
    if (verbose)
        for (const auto& d : c.details) os << "    " << d << '\n';
    for (const auto& f : c.failures) os << "    failed: " << f << '\n';
    return os.str();
}

}  // namespace confmod::acceptance
