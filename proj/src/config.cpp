#include "confmod/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "confmod/errors.hpp"

namespace confmod::config {

using domains::Bound;
using domains::ChimneyArc;
using domains::ChimneyPrimeEnd;
using domains::ChimneySide;
using domains::DomainTag;
using domains::PrimeEndArc;
using domains::StripArc;
using domains::StripPrimeEnd;
using domains::StripSide;

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw validation_error("not a number: '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw validation_error("not a finite number: '" + s + "'");
    return v;
}

Bound parse_bound(const std::string& raw, bool upper, DomainTag d, bool wall) {
    const std::string s = trim(raw);
    if (s == "inf" || s == "+inf") return Bound::plus_infinity();
    if (s == "-inf") return Bound::minus_infinity();
    if (d == DomainTag::chimney) {
        if (s == "chimney-top") {
            if (!wall || !upper) throw validation_error("chimney-top only closes a wall interval from above");
            return Bound::plus_infinity();
        }
        if (s == "lower-inf") {
            if (wall) throw validation_error("lower-inf only ends a ray interval");
            return upper ? Bound::plus_infinity() : Bound::minus_infinity();
        }
    }
    return Bound::at(parse_number(s));
}

struct Piece {
    std::string side;
    std::string lo, hi;
};

Piece split_piece(const std::string& raw) {
    const std::string s = trim(raw);
    auto open = s.find('('), close = s.rfind(')');
    if (open == std::string::npos || close != s.size() - 1)
        throw validation_error("arc piece must look like side(lo,hi): '" + s + "'");
    auto inner = s.substr(open + 1, close - open - 1);
    auto comma = inner.find(',');
    if (comma == std::string::npos || inner.find(',', comma + 1) != std::string::npos)
        throw validation_error("arc piece needs exactly two bounds: '" + s + "'");
    return {trim(s.substr(0, open)), inner.substr(0, comma), inner.substr(comma + 1)};
}

DomainTag parse_domain(const std::string& s) {
    if (s == "strip") return DomainTag::strip;
    if (s == "chimney") return DomainTag::chimney;
    throw validation_error("unknown domain '" + s + "' (expected strip or chimney)");
}

// ---------------------------------------------------------------- yaml helpers

[[noreturn]] void fail(const std::string& source, const YAML::Node& n, const std::string& msg) {
    auto m = n.Mark();
    std::string where = source;
    if (!m.is_null()) where += ":" + std::to_string(m.line + 1);
    throw validation_error(where + ": " + msg);
}

/// Rewraps validation errors from the domain layer with the node position.
template <class F>
auto at_node(const std::string& source, const YAML::Node& n, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const validation_error& e) {
        fail(source, n, e.what());
    } catch (const YAML::Exception& e) {
        fail(source, n, e.msg);
    }
}

void check_keys(const std::string& source, const YAML::Node& map, std::initializer_list<const char*> allowed) {
    if (!map.IsMap()) fail(source, map, "expected a mapping");
    for (const auto& kv : map) {
        auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            fail(source, kv.first, "unknown key '" + key + "'");
    }
}

std::string scalar(const std::string& source, const YAML::Node& n) {
    if (!n.IsScalar()) fail(source, n, "expected a scalar");
    return n.Scalar();
}

double number(const std::string& source, const YAML::Node& n) {
    return at_node(source, n, [&] { return parse_number(scalar(source, n)); });
}

double positive(const std::string& source, const YAML::Node& n) {
    double v = number(source, n);
    if (!(v > 0.0)) fail(source, n, "value must be positive");
    return v;
}

std::vector<std::string> strings(const std::string& source, const YAML::Node& n) {
    std::vector<std::string> out;
    if (n.IsScalar()) return {n.Scalar()};
    if (!n.IsSequence()) fail(source, n, "expected a string or a list of strings");
    for (const auto& e : n) out.push_back(scalar(source, e));
    return out;
}

std::vector<double> numbers(const std::string& source, const YAML::Node& n) {
    if (!n.IsSequence()) fail(source, n, "expected a list of numbers");
    std::vector<double> out;
    for (const auto& e : n) out.push_back(number(source, e));
    return out;
}

int integer(const std::string& source, const YAML::Node& n) {
    double v = number(source, n);
    if (v != std::floor(v) || std::abs(v) > 1000) fail(source, n, "expected an integer");
    return static_cast<int>(v);
}

/// Either an explicit strictly decreasing list or {first, last, step} for
/// the dyadic schedule 2^-first .. 2^-last.
std::vector<double> schedule(const std::string& source, const YAML::Node& n) {
    std::vector<double> out;
    if (n.IsMap()) {
        check_keys(source, n, {"first", "last", "step"});
        if (!n["first"] || !n["last"]) fail(source, n, "dyadic schedule needs first and last");
        int step = n["step"] ? integer(source, n["step"]) : 1;
        out = at_node(source, n, [&] {
            return experiments::dyadic_schedule(integer(source, n["first"]), integer(source, n["last"]), step);
        });
    } else {
        out = numbers(source, n);
        if (out.empty()) fail(source, n, "schedule is empty");
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (!(out[k] > 0.0)) fail(source, n, "epsilon must be positive");
            if (k > 0 && !(out[k] < out[k - 1])) fail(source, n, "epsilon schedule must be strictly decreasing");
        }
    }
    return out;
}

delgrid::GridOptions grid_options(const std::string& source, const YAML::Node& n) {
    check_keys(source, n, {"radius", "height", "h", "grading"});
    delgrid::GridOptions g;
    if (n["radius"]) g.radius = positive(source, n["radius"]);
    if (n["height"]) g.height = positive(source, n["height"]);
    if (n["h"]) g.h = positive(source, n["h"]);
    if (n["grading"]) g.grading = positive(source, n["grading"]);
    return g;
}

currents::NamedBox box(const std::string& source, DomainTag d, const YAML::Node& n) {
    check_keys(source, n, {"id", "parameter", "angles", "prime_ends"});
    if (!n["id"]) fail(source, n, "box needs an id");
    std::string id = scalar(source, n["id"]);
    int given = (n["parameter"] ? 1 : 0) + (n["angles"] ? 1 : 0) + (n["prime_ends"] ? 1 : 0);
    if (given != 1) fail(source, n, "box " + id + " needs exactly one of parameter, angles, prime_ends");
    if (n["parameter"]) {
        if (d != DomainTag::strip) fail(source, n, "parameter boxes exist only on the strip");
        auto v = numbers(source, n["parameter"]);
        if (v.size() != 2) fail(source, n["parameter"], "parameter box needs [p, q]");
        return at_node(source, n, [&] { return experiments::strip_parameter_box(id, v[0], v[1]); });
    }
    if (n["angles"]) {
        auto v = numbers(source, n["angles"]);
        if (v.size() != 4) fail(source, n["angles"], "angle box needs four angles");
        return at_node(source, n, [&] { return experiments::angle_box(id, v[0], v[1], v[2], v[3]); });
    }
    auto p = strings(source, n["prime_ends"]);
    if (p.size() != 4) fail(source, n["prime_ends"], "prime_ends box needs four prime ends");
    return at_node(source, n, [&] {
        std::array<currents::CirclePoint, 4> c;
        for (int k = 0; k < 4; ++k) c[k] = domains::map_prime_end(parse_prime_end(d, p[k]));
        return currents::NamedBox{id, currents::GeodesicBox(c[0], c[1], c[2], c[3])};
    });
}

std::vector<currents::NamedBox> boxes(const std::string& source, DomainTag d, const YAML::Node& n) {
    if (!n.IsSequence()) fail(source, n, "expected a list of boxes");
    std::vector<currents::NamedBox> out;
    std::set<std::string> seen;
    for (const auto& b : n) {
        out.push_back(box(source, d, b));
        if (!seen.insert(out.back().id).second) fail(source, b, "duplicate box id '" + out.back().id + "'");
    }
    return out;
}

}  // namespace

PrimeEndArc parse_arc(DomainTag d, const std::vector<std::string>& pieces) {
    if (pieces.empty()) throw validation_error("arc needs at least one piece");
    if (d == DomainTag::strip) {
        std::vector<StripArc> out;
        for (const auto& raw : pieces) {
            auto p = split_piece(raw);
            StripSide side;
            if (p.side == "bottom")
                side = StripSide::bottom;
            else if (p.side == "top")
                side = StripSide::top;
            else
                throw validation_error("unknown strip side '" + p.side + "' (expected bottom or top)");
            out.emplace_back(side, parse_bound(p.lo, false, d, false), parse_bound(p.hi, true, d, false));
        }
        return PrimeEndArc::strip(std::move(out));
    }
    std::vector<ChimneyArc> out;
    for (const auto& raw : pieces) {
        auto p = split_piece(raw);
        ChimneySide side;
        if (p.side == "right-ray")
            side = ChimneySide::right_ray;
        else if (p.side == "right-wall")
            side = ChimneySide::right_wall;
        else if (p.side == "left-wall")
            side = ChimneySide::left_wall;
        else if (p.side == "left-ray")
            side = ChimneySide::left_ray;
        else
            throw validation_error("unknown chimney side '" + p.side +
                                   "' (expected right-ray, right-wall, left-wall or left-ray)");
        bool wall = side == ChimneySide::right_wall || side == ChimneySide::left_wall;
        out.emplace_back(side, parse_bound(p.lo, false, d, wall), parse_bound(p.hi, true, d, wall));
    }
    return PrimeEndArc::chimney(std::move(out));
}

domains::PrimeEnd parse_prime_end(DomainTag d, const std::string& raw) {
    const std::string s = trim(raw);
    if (d == DomainTag::strip) {
        if (s == "+inf" || s == "inf") return StripPrimeEnd::plus_infinity();
        if (s == "-inf") return StripPrimeEnd::minus_infinity();
    } else {
        if (s == "chimney-top") return ChimneyPrimeEnd::chimney_top();
        if (s == "lower-inf") return ChimneyPrimeEnd::lower_infinity();
    }
    auto space = s.find(' ');
    if (space == std::string::npos) throw validation_error("prime end must look like 'side value': '" + s + "'");
    std::string side = s.substr(0, space);
    double v = parse_number(trim(s.substr(space + 1)));
    if (d == DomainTag::strip) {
        if (side == "bottom") return StripPrimeEnd::bottom(v);
        if (side == "top") return StripPrimeEnd::top(v);
    } else {
        if (side == "right-ray") return ChimneyPrimeEnd::right_ray(v);
        if (side == "left-ray") return ChimneyPrimeEnd::left_ray(v);
        if (side == "right-wall") return ChimneyPrimeEnd::right_wall(v);
        if (side == "left-wall") return ChimneyPrimeEnd::left_wall(v);
    }
    throw validation_error("unknown side '" + side + "' for a " + domains::to_string(d) + " prime end");
}

Config parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw validation_error(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root.IsMap()) throw validation_error(source + ": top level must be a mapping");
    check_keys(source, root,
               {"domain", "method", "schedule", "grid_schedule", "currents_schedule", "grid", "tolerances",
                "truncation_radii", "output_dir", "scenarios", "boxes"});
    if (!root["domain"]) fail(source, root, "missing key 'domain'");
    Config c;
    c.domain = at_node(source, root["domain"], [&] { return parse_domain(scalar(source, root["domain"])); });

    auto method = experiments::Method::elliptic;
    if (root["method"])
        method = at_node(source, root["method"], [&] { return experiments::parse_method(scalar(source, root["method"])); });
    if (!root["schedule"]) fail(source, root, "missing key 'schedule'");
    auto sched = schedule(source, root["schedule"]);
    std::vector<double> grid_sched;
    if (root["grid_schedule"]) grid_sched = schedule(source, root["grid_schedule"]);
    c.currents_schedule = root["currents_schedule"] ? schedule(source, root["currents_schedule"]) : sched;
    delgrid::GridOptions grid;
    if (root["grid"]) grid = grid_options(source, root["grid"]);
    if (root["truncation_radii"]) {
        c.truncation_radii = numbers(source, root["truncation_radii"]);
        for (std::size_t k = 0; k < c.truncation_radii.size(); ++k)
            if (!(c.truncation_radii[k] > 0.0) || (k > 0 && !(c.truncation_radii[k] > c.truncation_radii[k - 1])))
                fail(source, root["truncation_radii"], "truncation radii must be positive and increasing");
    }
    if (root["output_dir"]) c.output_dir = scalar(source, root["output_dir"]);

    if (const auto& t = root["tolerances"]) {
        check_keys(source, t, {"final_gap", "fit", "agreement", "margin"});
        if (t["final_gap"]) c.tolerances.final_gap = positive(source, t["final_gap"]);
        if (t["fit"]) c.tolerances.fit = positive(source, t["fit"]);
        if (t["agreement"]) c.tolerances.agreement = positive(source, t["agreement"]);
        if (t["margin"]) c.tolerances.margin = positive(source, t["margin"]);
    }

    if (!root["scenarios"] || !root["scenarios"].IsSequence())
        fail(source, root, "'scenarios' must be a list");
    std::set<std::string> ids;
    for (const auto& n : root["scenarios"]) {
        check_keys(source, n, {"id", "I", "J", "method", "schedule", "grid_schedule"});
        if (!n["id"] || !n["I"] || !n["J"]) fail(source, n, "scenario needs id, I and J");
        experiments::Scenario s;
        s.id = scalar(source, n["id"]);
        if (!ids.insert(s.id).second) fail(source, n["id"], "duplicate scenario id '" + s.id + "'");
        s.domain = c.domain;
        s.i = at_node(source, n["I"], [&] { return parse_arc(c.domain, strings(source, n["I"])); });
        s.j = at_node(source, n["J"], [&] { return parse_arc(c.domain, strings(source, n["J"])); });
        s.method = n["method"]
                       ? at_node(source, n["method"], [&] { return experiments::parse_method(scalar(source, n["method"])); })
                       : method;
        s.epsilons = n["schedule"] ? schedule(source, n["schedule"]) : sched;
        s.grid_epsilons = n["grid_schedule"] ? schedule(source, n["grid_schedule"]) : grid_sched;
        s.grid = grid;
        // classification errors surface at load time with the scenario line
        at_node(source, n, [&] {
            return c.domain == DomainTag::strip ? experiments::classify_strip(s.i, s.j)
                                                : experiments::classify_chimney(s.i, s.j);
        });
        c.scenarios.push_back(std::move(s));
    }

    if (const auto& b = root["boxes"]) {
        if (c.domain == DomainTag::strip) {
            check_keys(source, b, {"shrink", "stretch"});
            if (b["shrink"]) c.shrink_boxes = boxes(source, c.domain, b["shrink"]);
            if (b["stretch"]) c.stretch_boxes = boxes(source, c.domain, b["stretch"]);
        } else {
            check_keys(source, b, {"currents"});
            if (b["currents"]) c.chimney_boxes = boxes(source, c.domain, b["currents"]);
        }
    }
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

Config default_config(DomainTag d) {
    Config c;
    c.domain = d;
    if (d == DomainTag::strip) {
        c.scenarios = experiments::default_strip_scenarios();
        c.shrink_boxes = experiments::default_shrink_boxes();
        c.stretch_boxes = experiments::default_stretch_boxes();
        c.currents_schedule = experiments::default_strip_schedule();
        c.output_dir = "out/strip";
    } else {
        c.scenarios = experiments::default_chimney_scenarios();
        c.chimney_boxes = experiments::default_chimney_boxes();
        c.currents_schedule = experiments::default_chimney_schedule();
        c.tolerances.final_gap = 0.1;
        c.output_dir = "out/chimney";
    }
    return c;
}

}  // namespace confmod::config
