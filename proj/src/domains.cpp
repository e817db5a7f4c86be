#include "confmod/domains.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "confmod/errors.hpp"
#include "confmod/numerics.hpp"

namespace confmod::domains {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();
const double log2v = std::log(2.0);

std::string fmt_double(double v) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

/// log(2 atan(e^a))
double log_two_atan_exp(double a) {
    if (a < -18.0) return log2v + a + std::log1p(-std::exp(2.0 * a) / 3.0);
    return std::log(2.0 * std::atan(std::exp(a)));
}

/// log(tan(h / 2)) for h = exp(log_h)
double log_tan_half(double log_h) {
    double lh = log_h - log2v;
    if (lh < -18.0) {
        double h = std::exp(lh);
        return lh + std::log1p(h * h / 3.0);
    }
    return std::log(std::tan(std::exp(lh)));
}

/// log(sech u)
double log_sech(double u) { return log2v - u - std::log1p(std::exp(-2.0 * u)); }

/// Gudermannian
double gd(double u) { return 2.0 * std::atan(std::tanh(0.5 * u)); }

// sinh s - gd s = s^3 (c0 + c1 s^2 + ...)
constexpr std::array<double, 9> ray_series = {
    1.0 / 3.0,          -1.0 / 30.0,          31.0 / 2520.0,
    -173.0 / 45360.0,   25261.0 / 19958400.0, -675691.0 / 1556755200.0,
    99680491.0 / 653837184000.0, -1211969509.0 / 22230464256000.0,
    1202439837721.0 / 60822550204416000.0};

// u - tanh u = u^3 (c0 + c1 u^2 + ...)
constexpr std::array<double, 9> wall_series = {
    1.0 / 3.0,        -2.0 / 15.0,          17.0 / 315.0,
    -62.0 / 2835.0,   1382.0 / 155925.0,    -21844.0 / 6081075.0,
    929569.0 / 638512875.0, -6404582.0 / 10854718875.0,
    443861162.0 / 1856156927625.0};

double sinh_minus_gd(double s) {
    if (s < 0.25) return s * s * s * numerics::horner(ray_series, s * s);
    return std::sinh(s) - gd(s);
}

double u_minus_tanh(double u) {
    if (u < 0.25) return u * u * u * numerics::horner(wall_series, u * u);
    return u - std::tanh(u);
}

CirclePoint strip_bottom_point(double x) {
    const double u = pi * x;
    const double u0 = std::log1p(std::sqrt(2.0));
    if (u >= u0) return CirclePoint::from_log_offset(0, -1, log_two_atan_exp(-u));
    if (u <= -u0) return CirclePoint::from_log_offset(2, 1, log_two_atan_exp(u));
    return CirclePoint::from_offset(3, gd(u));
}

bool in_lower_half(const CirclePoint& p) {
    const int k = p.anchor(), s = p.sign();
    return k == 3 || (k == 0 && s < 0) || (k == 2 && s > 0);
}

double strip_bottom_x(const CirclePoint& q) {
    switch (q.anchor()) {
        case 3:
            return std::asinh(std::tan(q.offset())) / pi;
        case 0:
            return -log_tan_half(q.log_abs_offset()) / pi;
        default:
            return log_tan_half(q.log_abs_offset()) / pi;
    }
}

CirclePoint right_ray_point(double sigma) {
    if (std::cosh(sigma) <= 1.0 + std::sqrt(2.0)) {
        double t = std::tanh(0.5 * sigma);
        return CirclePoint::from_offset(0, -2.0 * std::atan(t * t));
    }
    return CirclePoint::from_log_offset(3, 1, log_two_atan_exp(log_sech(sigma)));
}

CirclePoint right_wall_point(double u) {
    if (1.0 / std::cosh(u) > std::sqrt(2.0) - 1.0) {
        double t = std::tanh(0.5 * u);
        return CirclePoint::from_offset(0, 2.0 * std::atan(t * t));
    }
    return CirclePoint::from_log_offset(1, -1, log_two_atan_exp(log_sech(u)));
}

/// Inverse of sech from log(sech u).
double asech_from_log(double log_t) {
    double t = std::exp(log_t);
    return std::log1p(std::sqrt((1.0 - t) * (1.0 + t))) - log_t;
}

bool on_right_side(const CirclePoint& p) {
    const int k = p.anchor(), s = p.sign();
    return k == 0 || (k == 1 && s < 0) || (k == 3 && s > 0);
}

std::string angle_text(const CirclePoint& p) {
    std::ostringstream os;
    os << "anchor " << p.anchor() << ", offset " << p.offset() << " (theta " << p.theta() << ")";
    return os.str();
}

template <class PE>
std::vector<ArcComponent> chain_pieces(const std::vector<std::pair<PE, PE>>& ends) {
    const std::size_t n = ends.size();
    if (n == 0) throw validation_error("arc needs at least one piece");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (ends[i].first == ends[j].first || ends[i].second == ends[j].second)
                throw validation_error("arc pieces overlap");
    std::vector<bool> used(n, false);
    std::vector<ArcComponent> comps;
    for (std::size_t h = 0; h < n; ++h) {
        bool is_head = true;
        for (std::size_t j = 0; j < n; ++j)
            if (j != h && ends[j].second == ends[h].first) is_head = false;
        if (!is_head) continue;
        used[h] = true;
        PE start = ends[h].first;
        PE cur = ends[h].second;
        for (bool grew = true; grew;) {
            grew = false;
            for (std::size_t j = 0; j < n; ++j) {
                if (!used[j] && ends[j].first == cur) {
                    used[j] = true;
                    cur = ends[j].second;
                    grew = true;
                }
            }
        }
        comps.push_back({start, cur});
    }
    if (std::find(used.begin(), used.end(), false) != used.end())
        throw validation_error("arc covers the whole boundary");
    return comps;
}

void check_epsilon(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw validation_error("deformation parameter must be positive and finite");
}

struct XInterval {
    double lo, hi;
};

std::vector<XInterval> bottom_preimage(const CirclePoint& s, const CirclePoint& e) {
    const bool sl = in_lower_half(s), el = in_lower_half(e);
    if (sl && el) {
        double xs = strip_bottom_x(s), xe = strip_bottom_x(e);
        if (xs <= xe) return {{xs, xe}};
        return {{-inf, xe}, {xs, inf}};
    }
    if (sl) return {{strip_bottom_x(s), inf}};
    if (el) return {{-inf, strip_bottom_x(e)}};
    if (currents::arc_contains(s, e, CirclePoint::from_offset(3, 0.0))) return {{-inf, inf}};
    return {};
}

double overlap_length(const std::vector<XInterval>& a, const std::vector<XInterval>& b) {
    double total = 0.0;
    for (const auto& p : a)
        for (const auto& q : b) {
            double lo = std::max(p.lo, q.lo), hi = std::min(p.hi, q.hi);
            if (hi > lo) total += hi - lo;
        }
    return total;
}

}  // namespace

std::string to_string(DomainTag d) { return d == DomainTag::strip ? "strip" : "chimney"; }

double Bound::as_extended() const {
    switch (kind) {
        case Kind::minus_infinity:
            return -inf;
        case Kind::plus_infinity:
            return inf;
        default:
            return value;
    }
}

std::string to_string(const Bound& b) {
    switch (b.kind) {
        case Bound::Kind::minus_infinity:
            return "-inf";
        case Bound::Kind::plus_infinity:
            return "inf";
        default:
            return fmt_double(b.value);
    }
}

// ---------------------------------------------------------------- strip

StripArc::StripArc(StripSide side_, Bound lo_, Bound hi_) : side(side_), lo(lo_), hi(hi_) {
    if ((lo.is_finite() && !std::isfinite(lo.value)) || (hi.is_finite() && !std::isfinite(hi.value)))
        throw validation_error("strip interval endpoints must be finite or symbolic");
    if (lo.kind == Bound::Kind::plus_infinity || hi.kind == Bound::Kind::minus_infinity ||
        !(lo.as_extended() < hi.as_extended()))
        throw validation_error("strip interval must be nonempty");
}

StripPrimeEnd StripArc::ccw_start() const {
    const Bound& b = side == StripSide::bottom ? lo : hi;
    if (!b.is_finite())
        return side == StripSide::bottom ? StripPrimeEnd::minus_infinity()
                                         : StripPrimeEnd::plus_infinity();
    return side == StripSide::bottom ? StripPrimeEnd::bottom(b.value) : StripPrimeEnd::top(b.value);
}

StripPrimeEnd StripArc::ccw_end() const {
    const Bound& b = side == StripSide::bottom ? hi : lo;
    if (!b.is_finite())
        return side == StripSide::bottom ? StripPrimeEnd::plus_infinity()
                                         : StripPrimeEnd::minus_infinity();
    return side == StripSide::bottom ? StripPrimeEnd::bottom(b.value) : StripPrimeEnd::top(b.value);
}

std::complex<double> strip_map(std::complex<double> z) {
    if (!(z.imag() >= -1e-15 && z.imag() <= 1.0 + 1e-15) || !std::isfinite(z.real()))
        throw validation_error("point outside the closed strip");
    const std::complex<double> i(0.0, 1.0);
    if (z.real() > 0.0) {
        std::complex<double> e = std::exp(-pi * z);
        return (1.0 - i * e) / (1.0 + i * e);
    }
    std::complex<double> e = std::exp(pi * z);
    return (e - i) / (e + i);
}

CirclePoint strip_map_boundary(const StripPrimeEnd& p) {
    switch (p.kind) {
        case StripPrimeEnd::Kind::plus_infinity:
            return CirclePoint::from_offset(0, 0.0);
        case StripPrimeEnd::Kind::minus_infinity:
            return CirclePoint::from_offset(2, 0.0);
        case StripPrimeEnd::Kind::bottom:
            return strip_bottom_point(p.x);
        case StripPrimeEnd::Kind::top:
            return strip_bottom_point(p.x).conjugate();
    }
    throw validation_error("unknown strip prime end");
}

StripPrimeEnd strip_map_inverse(const CirclePoint& w) {
    if (w.sign() == 0 && w.anchor() == 0) return StripPrimeEnd::plus_infinity();
    if (w.sign() == 0 && w.anchor() == 2) return StripPrimeEnd::minus_infinity();
    if (in_lower_half(w)) return StripPrimeEnd::bottom(strip_bottom_x(w));
    return StripPrimeEnd::top(strip_bottom_x(w.conjugate()));
}

// -------------------------------------------------------------- chimney

ChimneyPrimeEnd ChimneyPrimeEnd::right_ray(double x) {
    if (!(x >= 1.0) || !std::isfinite(x)) throw validation_error("right ray needs finite x >= 1");
    return {Kind::right_ray, x - 1.0};
}

ChimneyPrimeEnd ChimneyPrimeEnd::left_ray(double x) {
    if (!(x <= -1.0) || !std::isfinite(x)) throw validation_error("left ray needs finite x <= -1");
    return {Kind::left_ray, -x - 1.0};
}

ChimneyPrimeEnd ChimneyPrimeEnd::right_ray_from_corner(double d) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw validation_error("ray distance must be finite and >= 0");
    return {Kind::right_ray, d};
}

ChimneyPrimeEnd ChimneyPrimeEnd::left_ray_from_corner(double d) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw validation_error("ray distance must be finite and >= 0");
    return {Kind::left_ray, d};
}

double ChimneyPrimeEnd::x() const {
    if (kind == Kind::right_ray) return 1.0 + t;
    if (kind == Kind::left_ray) return -1.0 - t;
    throw validation_error("only ray points have an x coordinate");
}

ChimneyPrimeEnd ChimneyPrimeEnd::right_wall(double y) {
    if (!(y >= 0.0) || !std::isfinite(y)) throw validation_error("wall needs finite y >= 0");
    if (y == 0.0) return right_ray(1.0);
    return {Kind::right_wall, y};
}

ChimneyPrimeEnd ChimneyPrimeEnd::left_wall(double y) {
    if (!(y >= 0.0) || !std::isfinite(y)) throw validation_error("wall needs finite y >= 0");
    if (y == 0.0) return left_ray(-1.0);
    return {Kind::left_wall, y};
}

ChimneyPrimeEnd ChimneyPrimeEnd::mirror() const {
    switch (kind) {
        case Kind::right_ray:
            return {Kind::left_ray, t};
        case Kind::left_ray:
            return {Kind::right_ray, t};
        case Kind::right_wall:
            return {Kind::left_wall, t};
        case Kind::left_wall:
            return {Kind::right_wall, t};
        default:
            return *this;
    }
}

ChimneyArc::ChimneyArc(ChimneySide side_, Bound lo_, Bound hi_) : side(side_), lo(lo_), hi(hi_) {
    if ((lo.is_finite() && !std::isfinite(lo.value)) || (hi.is_finite() && !std::isfinite(hi.value)))
        throw validation_error("chimney interval endpoints must be finite or symbolic");
    if (lo.kind == Bound::Kind::plus_infinity || hi.kind == Bound::Kind::minus_infinity ||
        !(lo.as_extended() < hi.as_extended()))
        throw validation_error("chimney interval must be nonempty");
    switch (side) {
        case ChimneySide::right_ray:
            if (!lo.is_finite() || lo.value < 1.0)
                throw validation_error("right ray interval must lie in [1, inf)");
            break;
        case ChimneySide::left_ray:
            if (!hi.is_finite() || hi.value > -1.0)
                throw validation_error("left ray interval must lie in (-inf, -1]");
            break;
        default:
            if (!lo.is_finite() || lo.value < 0.0)
                throw validation_error("wall interval must lie in [0, inf)");
    }
}

namespace {

ChimneyPrimeEnd chimney_end_of(ChimneySide side, const Bound& b) {
    switch (side) {
        case ChimneySide::right_ray:
            return b.is_finite() ? ChimneyPrimeEnd::right_ray(b.value)
                                 : ChimneyPrimeEnd::lower_infinity();
        case ChimneySide::left_ray:
            return b.is_finite() ? ChimneyPrimeEnd::left_ray(b.value)
                                 : ChimneyPrimeEnd::lower_infinity();
        case ChimneySide::right_wall:
            return b.is_finite() ? ChimneyPrimeEnd::right_wall(b.value)
                                 : ChimneyPrimeEnd::chimney_top();
        case ChimneySide::left_wall:
            return b.is_finite() ? ChimneyPrimeEnd::left_wall(b.value)
                                 : ChimneyPrimeEnd::chimney_top();
    }
    throw validation_error("unknown chimney side");
}

}  // namespace

ChimneyPrimeEnd ChimneyArc::ccw_start() const {
    bool from_lo = side == ChimneySide::right_wall;
    return chimney_end_of(side, from_lo ? lo : hi);
}

ChimneyPrimeEnd ChimneyArc::ccw_end() const {
    bool from_lo = side == ChimneySide::right_wall;
    return chimney_end_of(side, from_lo ? hi : lo);
}

double chimney_ray_distance(double sigma) {
    if (!(sigma >= 0.0)) throw validation_error("ray parameter must be nonnegative");
    return (2.0 / pi) * sinh_minus_gd(sigma);
}

double chimney_ray_sigma(double distance) {
    if (!(distance >= 0.0) || !std::isfinite(distance))
        throw validation_error("ray point needs a finite distance >= 0");
    const double s = 0.5 * pi * distance;
    if (s == 0.0) return 0.0;
    return numerics::bracketed_root([s](double g) { return sinh_minus_gd(g) - s; },
                                    std::min(std::asinh(s), 0.9 * std::cbrt(3.0 * s)),
                                    std::asinh(s + 0.5 * pi));
}

double chimney_wall_y(double u) {
    if (!(u >= 0.0)) throw validation_error("wall parameter must be nonnegative");
    return (2.0 / pi) * u_minus_tanh(u);
}

double chimney_wall_u(double y) {
    if (!(y >= 0.0) || !std::isfinite(y)) throw validation_error("wall point needs finite y >= 0");
    const double s = 0.5 * pi * y;
    if (s == 0.0) return 0.0;
    return numerics::bracketed_root([s](double u) { return u_minus_tanh(u) - s; },
                                    0.9 * std::cbrt(3.0 * s), s + 1.0);
}

ChimneyMap::ChimneyMap() {
    // preimage of -i lies on the imaginary axis: w = i v
    auto g = [](double v) {
        double r = std::sqrt(1.0 + v * v);
        return r + std::log(v / (r + 1.0)) - 0.5 * pi;
    };
    double v = numerics::bracketed_root(g, 1e-6, 10.0);
    w_base_ = {0.0, v};
}

std::complex<double> ChimneyMap::sc(std::complex<double> w) const {
    const std::complex<double> i(0.0, 1.0);
    std::complex<double> t = std::sqrt(w - 1.0) * std::sqrt(w + 1.0);
    // (1 + i t) / w = w / (1 - i t) since t^2 = w^2 - 1
    return -1.0 - (2.0 / pi) * (t + i * std::log(w / (1.0 - i * t)));
}

std::complex<double> ChimneyMap::sc_derivative(std::complex<double> w) const {
    std::complex<double> t = std::sqrt(w - 1.0) * std::sqrt(w + 1.0);
    return -(2.0 / pi) * t / w;
}

std::complex<double> ChimneyMap::sc_inverse(std::complex<double> z) const {
    const bool inside = z.imag() < 0.0 || std::abs(z.real()) < 1.0;
    if (!inside || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw validation_error("point outside the open chimney");
    const std::complex<double> z0(0.0, -1.0);
    auto newton = [this](std::complex<double> w, std::complex<double> target,
                         bool& ok) -> std::complex<double> {
        ok = false;
        for (int it = 0; it < 60; ++it) {
            std::complex<double> step = (sc(w) - target) / sc_derivative(w);
            std::complex<double> next = w - step;
            int halvings = 0;
            while (!(next.imag() > 0.0) && halvings < 40) {
                step *= 0.5;
                next = w - step;
                ++halvings;
            }
            if (!(next.imag() > 0.0)) return w;
            w = next;
            if (std::abs(step) <= 1e-15 * std::abs(w)) {
                ok = true;
                return w;
            }
        }
        ok = std::abs(sc(w) - target) <= 1e-12 * (1.0 + std::abs(target));
        return w;
    };
    for (int n = 16; n <= 4096; n *= 2) {
        std::complex<double> w = w_base_;
        bool ok = true;
        for (int k = 1; k <= n && ok; ++k) {
            double s = static_cast<double>(k) / n;
            w = newton(w, (1.0 - s) * z0 + s * z, ok);
        }
        if (ok && std::abs(sc(w) - z) <= 1e-10 * (1.0 + std::abs(z))) return w;
    }
    std::ostringstream os;
    os << "chimney map inversion failed at z = " << z;
    throw numerical_error(os.str());
}

CirclePoint ChimneyMap::boundary(const ChimneyPrimeEnd& p) const {
    using K = ChimneyPrimeEnd::Kind;
    switch (p.kind) {
        case K::chimney_top:
            return CirclePoint::from_offset(1, 0.0);
        case K::lower_infinity:
            return CirclePoint::from_offset(3, 0.0);
        case K::right_ray:
            return right_ray_point(chimney_ray_sigma(p.t));
        case K::right_wall:
            return right_wall_point(chimney_wall_u(p.t));
        default:
            return boundary(p.mirror()).mirror();
    }
}

ChimneyPrimeEnd ChimneyMap::inverse(const CirclePoint& w) const {
    const int k = w.anchor(), s = w.sign();
    if (k == 1 && s == 0) return ChimneyPrimeEnd::chimney_top();
    if (k == 3 && s == 0) return ChimneyPrimeEnd::lower_infinity();
    if (!on_right_side(w)) return inverse(w.mirror()).mirror();
    if (k == 0) {
        double tt = s == 0 ? 0.0 : std::sqrt(std::exp(log_tan_half(w.log_abs_offset())));
        double par = 2.0 * std::atanh(tt);
        if (s <= 0) return ChimneyPrimeEnd::right_ray_from_corner(chimney_ray_distance(par));
        return ChimneyPrimeEnd::right_wall(chimney_wall_y(par));
    }
    double par = asech_from_log(log_tan_half(w.log_abs_offset()));
    if (k == 1) return ChimneyPrimeEnd::right_wall(chimney_wall_y(par));
    double d = chimney_ray_distance(par);
    if (!std::isfinite(d))
        throw numerical_error("chimney boundary inversion failed near the lower infinity at " +
                              angle_text(w));
    return ChimneyPrimeEnd::right_ray_from_corner(d);
}

std::complex<double> ChimneyMap::interior(std::complex<double> z) const {
    const std::complex<double> i(0.0, 1.0);
    std::complex<double> w = sc_inverse(z);
    return -i * (w - i) / (w + i);
}

std::optional<double> ChimneyMap::prevertex(const ChimneyPrimeEnd& p) const {
    using K = ChimneyPrimeEnd::Kind;
    switch (p.kind) {
        case K::chimney_top:
            return 0.0;
        case K::lower_infinity:
            return std::nullopt;
        case K::right_ray:
            return -std::cosh(chimney_ray_sigma(p.t));
        case K::right_wall:
            return -1.0 / std::cosh(chimney_wall_u(p.t));
        default:
            return -*prevertex(p.mirror());
    }
}

const ChimneyMap& chimney() {
    static const ChimneyMap map;
    return map;
}

std::complex<double> chimney_map(std::complex<double> z) { return chimney().interior(z); }

CirclePoint chimney_map_boundary(const ChimneyPrimeEnd& p) { return chimney().boundary(p); }

ChimneyPrimeEnd chimney_map_inverse(const CirclePoint& w) { return chimney().inverse(w); }

// ------------------------------------------------------------ arcs

std::string to_string(const PrimeEnd& p) {
    if (const auto* s = std::get_if<StripPrimeEnd>(&p)) {
        switch (s->kind) {
            case StripPrimeEnd::Kind::bottom:
                return "bottom " + fmt_double(s->x);
            case StripPrimeEnd::Kind::top:
                return "top " + fmt_double(s->x);
            case StripPrimeEnd::Kind::plus_infinity:
                return "+inf";
            case StripPrimeEnd::Kind::minus_infinity:
                return "-inf";
        }
    }
    const auto& c = std::get<ChimneyPrimeEnd>(p);
    using K = ChimneyPrimeEnd::Kind;
    switch (c.kind) {
        case K::right_ray:
            return "right-ray " + fmt_double(c.x());
        case K::left_ray:
            return "left-ray " + fmt_double(c.x());
        case K::right_wall:
            return "right-wall " + fmt_double(c.t);
        case K::left_wall:
            return "left-wall " + fmt_double(c.t);
        case K::chimney_top:
            return "chimney-top";
        case K::lower_infinity:
            return "lower-inf";
    }
    return "?";
}

CirclePoint map_prime_end(const PrimeEnd& p) {
    if (const auto* s = std::get_if<StripPrimeEnd>(&p)) return strip_map_boundary(*s);
    return chimney_map_boundary(std::get<ChimneyPrimeEnd>(p));
}

namespace {

void check_components_disjoint(const PrimeEndArc& arc) {
    const auto& comps = arc.components();
    for (std::size_t i = 0; i < comps.size(); ++i)
        for (std::size_t j = i + 1; j < comps.size(); ++j) {
            auto [s1, e1] = arc.disk_arc(i);
            auto [s2, e2] = arc.disk_arc(j);
            if (!currents::ccw_ordered(s1, e1, s2, e2))
                throw validation_error("arc pieces overlap");
        }
}

}  // namespace

PrimeEndArc PrimeEndArc::strip(std::vector<StripArc> pieces) {
    std::vector<std::pair<StripPrimeEnd, StripPrimeEnd>> ends;
    for (const auto& p : pieces) ends.emplace_back(p.ccw_start(), p.ccw_end());
    PrimeEndArc arc;
    arc.domain_ = DomainTag::strip;
    arc.strip_pieces_ = std::move(pieces);
    arc.components_ = chain_pieces(ends);
    check_components_disjoint(arc);
    return arc;
}

PrimeEndArc PrimeEndArc::chimney(std::vector<ChimneyArc> pieces) {
    std::vector<std::pair<ChimneyPrimeEnd, ChimneyPrimeEnd>> ends;
    for (const auto& p : pieces) ends.emplace_back(p.ccw_start(), p.ccw_end());
    PrimeEndArc arc;
    arc.domain_ = DomainTag::chimney;
    arc.chimney_pieces_ = std::move(pieces);
    arc.components_ = chain_pieces(ends);
    check_components_disjoint(arc);
    return arc;
}

std::pair<CirclePoint, CirclePoint> PrimeEndArc::disk_arc(std::size_t component) const {
    const auto& c = components_.at(component);
    return {map_prime_end(c.start), map_prime_end(c.end)};
}

bool PrimeEndArc::contains_disk_point(const CirclePoint& p) const {
    for (std::size_t i = 0; i < components_.size(); ++i) {
        auto [s, e] = disk_arc(i);
        if (currents::arc_contains(s, e, p)) return true;
    }
    return false;
}

std::string PrimeEndArc::describe() const {
    std::string out;
    auto add = [&](const std::string& s) {
        if (!out.empty()) out += " + ";
        out += s;
    };
    for (const auto& p : strip_pieces_)
        add(std::string(p.side == StripSide::bottom ? "bottom" : "top") + "(" + to_string(p.lo) +
            "," + to_string(p.hi) + ")");
    for (const auto& p : chimney_pieces_) {
        static const std::array<const char*, 4> names = {"right-ray", "right-wall", "left-wall",
                                                         "left-ray"};
        add(std::string(names[static_cast<int>(p.side)]) + "(" + to_string(p.lo) + "," +
            to_string(p.hi) + ")");
    }
    return out;
}

Deformation::Deformation(Kind kind_, double epsilon_) : kind(kind_), epsilon(epsilon_) {
    check_epsilon(epsilon);
}

DomainTag Deformation::domain() const {
    return kind == Kind::horizontal_shrink ? DomainTag::strip : DomainTag::chimney;
}

StripPrimeEnd deform(const Deformation& d, const StripPrimeEnd& p) {
    if (d.domain() != DomainTag::strip) throw validation_error("deformation does not act on the strip");
    StripPrimeEnd q = p;
    if (q.kind == StripPrimeEnd::Kind::bottom || q.kind == StripPrimeEnd::Kind::top)
        q.x *= d.epsilon;
    return q;
}

ChimneyPrimeEnd deform(const Deformation& d, const ChimneyPrimeEnd& p) {
    if (d.domain() != DomainTag::chimney)
        throw validation_error("deformation does not act on the chimney");
    ChimneyPrimeEnd q = p;
    if (q.kind == ChimneyPrimeEnd::Kind::right_wall || q.kind == ChimneyPrimeEnd::Kind::left_wall)
        q.t *= d.epsilon;
    return q;
}

PrimeEndArc deform_arc(const Deformation& d, const PrimeEndArc& arc) {
    if (d.domain() != arc.domain()) throw validation_error("deformation and arc domains differ");
    auto scale = [&](Bound b) {
        if (b.is_finite()) b.value *= d.epsilon;
        return b;
    };
    if (arc.domain() == DomainTag::strip) {
        std::vector<StripArc> out;
        for (const auto& p : arc.strip_pieces()) out.emplace_back(p.side, scale(p.lo), scale(p.hi));
        return PrimeEndArc::strip(std::move(out));
    }
    std::vector<ChimneyArc> out;
    for (const auto& p : arc.chimney_pieces()) {
        bool wall = p.side == ChimneySide::right_wall || p.side == ChimneySide::left_wall;
        out.emplace_back(p.side, wall ? scale(p.lo) : p.lo, wall ? scale(p.hi) : p.hi);
    }
    return PrimeEndArc::chimney(std::move(out));
}

currents::BoundaryMap boundary_map_h(const Deformation& d) {
    std::ostringstream name;
    name << "h[" << to_string(d.domain()) << ", eps=" << d.epsilon << "]";
    if (d.domain() == DomainTag::strip) {
        return currents::BoundaryMap(
            [d](const CirclePoint& p) {
                return strip_map_boundary(deform(d, strip_map_inverse(p)));
            },
            name.str());
    }
    return currents::BoundaryMap(
        [d](const CirclePoint& p) {
            return chimney_map_boundary(deform(d, chimney_map_inverse(p)));
        },
        name.str());
}

double strip_vertical_measure(const GeodesicBox& box) {
    auto a_bot = bottom_preimage(box.a(), box.b());
    auto b_bot = bottom_preimage(box.c(), box.d());
    auto a_top = bottom_preimage(box.b().conjugate(), box.a().conjugate());
    auto b_top = bottom_preimage(box.d().conjugate(), box.c().conjugate());
    return overlap_length(a_bot, b_top) + overlap_length(b_bot, a_top);
}

currents::MeasuredLamination strip_vertical_lamination() {
    return currents::StripVertical{[](const GeodesicBox& b) { return strip_vertical_measure(b); }};
}

CanonicalArcs canonical_arcs(DomainTag d) {
    using B = Bound;
    if (d == DomainTag::strip) {
        return {PrimeEndArc::strip({StripArc(StripSide::bottom, B::minus_infinity(), B::at(0.0)),
                                    StripArc(StripSide::top, B::minus_infinity(), B::at(0.0))}),
                PrimeEndArc::strip({StripArc(StripSide::bottom, B::at(1.0), B::plus_infinity()),
                                    StripArc(StripSide::top, B::at(1.0), B::plus_infinity())})};
    }
    return {PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_wall, B::at(1.0), B::plus_infinity())}),
            PrimeEndArc::chimney({ChimneyArc(ChimneySide::right_ray, B::at(1.0), B::at(2.0))})};
}

GeodesicBox family_box(const PrimeEndArc& i, const PrimeEndArc& j) {
    if (i.domain() != j.domain()) throw validation_error("arcs belong to different domains");
    if (!i.connected() || !j.connected())
        throw validation_error("elliptic path needs connected arcs");
    auto [a, b] = i.disk_arc();
    auto [c, d] = j.disk_arc();
    if (!currents::ccw_ordered(a, b, c, d)) throw validation_error("arcs I and J must be disjoint");
    return {a, b, c, d};
}

conformal::Modulus family_modulus(const PrimeEndArc& i, const PrimeEndArc& j) {
    return conformal::quad_modulus_box(family_box(i, j));
}

conformal::Modulus chimney_half_modulus(const PrimeEndArc& i, const PrimeEndArc& j) {
    if (i.domain() != DomainTag::chimney || j.domain() != DomainTag::chimney)
        throw validation_error("half modulus is defined for chimney arcs");
    if (!i.connected() || !j.connected()) throw validation_error("half modulus needs connected arcs");
    family_box(i, j);
    std::array<double, 4> z{};
    std::array<PrimeEnd, 4> ends = {i.components()[0].start, i.components()[0].end,
                                    j.components()[0].start, j.components()[0].end};
    for (int k = 0; k < 4; ++k) {
        const auto& p = std::get<ChimneyPrimeEnd>(ends[k]);
        using K = ChimneyPrimeEnd::Kind;
        if (p.kind != K::right_ray && p.kind != K::right_wall && p.kind != K::chimney_top &&
            p.kind != K::lower_infinity)
            throw validation_error("half modulus arcs must lie on the right half of the boundary");
        auto w = chimney().prevertex(p);
        z[k] = w ? *w * *w : inf;
    }
    // factors containing the point at infinity cancel between numerator and denominator
    auto gap = [&](int p, int q) {
        return std::isinf(z[p]) || std::isinf(z[q]) ? 1.0 : std::abs(z[p] - z[q]);
    };
    double num = gap(0, 2) * gap(1, 3);
    double den = gap(0, 3) * gap(1, 2);
    return conformal::quad_modulus_log(std::log(num / den));
}

PrimeEndArc mirror_arc(const PrimeEndArc& arc) {
    if (arc.domain() != DomainTag::chimney) throw validation_error("mirror is defined for chimney arcs");
    auto neg = [](const Bound& b) {
        if (b.kind == Bound::Kind::minus_infinity) return Bound::plus_infinity();
        if (b.kind == Bound::Kind::plus_infinity) return Bound::minus_infinity();
        return Bound::at(-b.value);
    };
    std::vector<ChimneyArc> out;
    for (const auto& p : arc.chimney_pieces()) {
        switch (p.side) {
            case ChimneySide::right_ray:
                out.emplace_back(ChimneySide::left_ray, neg(p.hi), neg(p.lo));
                break;
            case ChimneySide::left_ray:
                out.emplace_back(ChimneySide::right_ray, neg(p.hi), neg(p.lo));
                break;
            case ChimneySide::right_wall:
                out.emplace_back(ChimneySide::left_wall, p.lo, p.hi);
                break;
            case ChimneySide::left_wall:
                out.emplace_back(ChimneySide::right_wall, p.lo, p.hi);
                break;
        }
    }
    return PrimeEndArc::chimney(std::move(out));
}

}  // namespace confmod::domains
