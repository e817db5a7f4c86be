#include "confmod/currents.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "confmod/errors.hpp"
#include "confmod/numerics.hpp"

namespace confmod::currents {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double quarter = pi / 2;
const double log_max_offset = std::log(pi / 4);

int mod4(int k) { return ((k % 4) + 4) % 4; }

/// log(e^x - e^y) for x > y
double log_diff_exp(double x, double y) { return x + std::log(-std::expm1(y - x)); }

/// log(e^x + e^y)
double log_sum_exp(double x, double y) {
    double m = std::max(x, y);
    return m + std::log1p(std::exp(std::min(x, y) - m));
}

/// log |p_offset - q_offset| for points sharing an anchor; -inf if equal.
double log_offset_gap(const CirclePoint& p, const CirclePoint& q) {
    const int sp = p.sign(), sq = q.sign();
    if (sp == 0 && sq == 0) return -std::numeric_limits<double>::infinity();
    if (sp == 0) return q.log_abs_offset();
    if (sq == 0) return p.log_abs_offset();
    if (sp != sq) return log_sum_exp(p.log_abs_offset(), q.log_abs_offset());
    double x = p.log_abs_offset(), y = q.log_abs_offset();
    if (x == y) return -std::numeric_limits<double>::infinity();
    return x > y ? log_diff_exp(x, y) : log_diff_exp(y, x);
}

}  // namespace

CirclePoint CirclePoint::from_angle(double theta) {
    if (!std::isfinite(theta)) throw validation_error("circle point: non-finite angle");
    double t = std::fmod(theta, 2 * pi);
    if (t < 0) t += 2 * pi;
    int k = static_cast<int>(std::lround(t / quarter));
    double o = t - k * quarter;
    if (o >= pi / 4) {
        ++k;
        o -= quarter;
    } else if (o < -pi / 4) {
        --k;
        o += quarter;
    }
    return from_offset(mod4(k), o);
}

CirclePoint CirclePoint::from_offset(int anchor, double offset) {
    if (offset == 0.0) return from_log_offset(anchor, 0, 0.0);
    return from_log_offset(anchor, offset > 0 ? 1 : -1, std::log(std::abs(offset)));
}

CirclePoint CirclePoint::from_log_offset(int anchor, int sign, double log_abs_offset) {
    CirclePoint p;
    p.anchor_ = mod4(anchor);
    if (sign == 0 || log_abs_offset == -std::numeric_limits<double>::infinity()) return p;
    if (std::isnan(log_abs_offset)) throw validation_error("circle point: NaN offset");
    if (log_abs_offset > log_max_offset || (sign > 0 && log_abs_offset >= log_max_offset)) {
        return from_angle(anchor * quarter + sign * std::exp(log_abs_offset));
    }
    p.sign_ = sign > 0 ? 1 : -1;
    p.log_abs_ = log_abs_offset;
    return p;
}

CirclePoint CirclePoint::from_complex(std::complex<double> z) {
    if (z == 0.0) throw validation_error("circle point: zero has no direction");
    // rotate into the sector |arg| <= pi/4 to read the offset accurately
    int k = 0;
    std::complex<double> w = z;
    if (std::abs(w.imag()) > std::abs(w.real())) {
        if (w.imag() > 0) {
            k = 1;
            w = std::complex<double>(w.imag(), -w.real());
        } else {
            k = 3;
            w = std::complex<double>(-w.imag(), w.real());
        }
    } else if (w.real() < 0) {
        k = 2;
        w = -w;
    }
    return from_offset(k, std::atan2(w.imag(), w.real()));
}

double CirclePoint::offset() const { return sign_ == 0 ? 0.0 : sign_ * std::exp(log_abs_); }

double CirclePoint::theta() const {
    double t = anchor_ * quarter + offset();
    if (t < 0) t += 2 * pi;
    if (t >= 2 * pi) t -= 2 * pi;
    return t;
}

std::complex<double> CirclePoint::value() const {
    const double o = offset();
    std::complex<double> u(std::cos(o), std::sin(o));
    static const std::array<std::complex<double>, 4> turns = {
        std::complex<double>(1, 0), std::complex<double>(0, 1), std::complex<double>(-1, 0),
        std::complex<double>(0, -1)};
    const auto& r = turns[anchor_];
    return {r.real() * u.real() - r.imag() * u.imag(), r.real() * u.imag() + r.imag() * u.real()};
}

CirclePoint CirclePoint::conjugate() const {
    return from_log_offset(mod4(-anchor_), -sign_, log_abs_);
}

CirclePoint CirclePoint::mirror() const {
    return from_log_offset(mod4(2 - anchor_), -sign_, log_abs_);
}

bool operator==(const CirclePoint& p, const CirclePoint& q) {
    if (p.anchor_ != q.anchor_ || p.sign_ != q.sign_) return false;
    return p.sign_ == 0 || p.log_abs_ == q.log_abs_;
}

bool operator<(const CirclePoint& p, const CirclePoint& q) {
    if (p.anchor_ != q.anchor_) return p.anchor_ < q.anchor_;
    if (p.sign_ != q.sign_) return p.sign_ < q.sign_;
    if (p.sign_ == 0) return false;
    return p.sign_ > 0 ? p.log_abs_ < q.log_abs_ : p.log_abs_ > q.log_abs_;
}

double log_chord(const CirclePoint& p, const CirclePoint& q) {
    if (p.anchor() == q.anchor()) {
        double lg = log_offset_gap(p, q);
        if (lg == -std::numeric_limits<double>::infinity()) return lg;
        double gap = std::exp(lg);
        double half = 0.5 * gap;
        // |p - q| = 2 sin(gap / 2) = gap * sinc(gap / 2)
        double sinc = half > 1e-8 ? std::sin(half) / half : 1.0 - half * half / 6.0;
        return lg + std::log(sinc);
    }
    double delta = (p.anchor() - q.anchor()) * quarter + (p.offset() - q.offset());
    return std::log(2.0 * std::abs(std::sin(0.5 * delta)));
}

bool ccw_ordered(const CirclePoint& a, const CirclePoint& b, const CirclePoint& c,
                 const CirclePoint& d) {
    if (a == b || a == c || a == d || b == c || b == d || c == d) return false;
    int descents = !(a < b) + !(b < c) + !(c < d) + !(d < a);
    return descents == 1;
}

bool arc_contains(const CirclePoint& s, const CirclePoint& e, const CirclePoint& p) {
    if (s == e) return p == s;
    if (s < e) return s <= p && p <= e;
    return p >= s || p <= e;
}

DiskMobius::DiskMobius(std::complex<double> a, double alpha)
    : a_(a), rot_(std::polar(1.0, alpha)) {
    if (!(std::abs(a) < 1.0)) throw validation_error("disk Mobius map needs |a| < 1");
}

std::complex<double> DiskMobius::operator()(std::complex<double> z) const {
    return rot_ * (z - a_) / (1.0 - std::conj(a_) * z);
}

CirclePoint DiskMobius::operator()(const CirclePoint& p) const {
    return CirclePoint::from_complex((*this)(p.value()));
}

Geodesic::Geodesic(CirclePoint p, CirclePoint q) : p_(p), q_(q) {
    if (p == q) throw validation_error("geodesic endpoints must differ");
}

GeodesicBox::GeodesicBox(CirclePoint a, CirclePoint b, CirclePoint c, CirclePoint d)
    : a_(a), b_(b), c_(c), d_(d) {
    if (!ccw_ordered(a, b, c, d))
        throw validation_error("box corners must be distinct and counterclockwise");
}

GeodesicBox GeodesicBox::from_angles(double a, double b, double c, double d) {
    return {CirclePoint::from_angle(a), CirclePoint::from_angle(b), CirclePoint::from_angle(c),
            CirclePoint::from_angle(d)};
}

bool GeodesicBox::separates(const Geodesic& g) const {
    auto in_ab = [&](const CirclePoint& p) { return arc_contains(a_, b_, p); };
    auto in_cd = [&](const CirclePoint& p) { return arc_contains(c_, d_, p); };
    return (in_ab(g.p()) && in_cd(g.q())) || (in_ab(g.q()) && in_cd(g.p()));
}

double liouville_box(const GeodesicBox& box) {
    const auto& a = box.a();
    const auto& b = box.b();
    const auto& c = box.c();
    const auto& d = box.d();
    return log_chord(a, c) + log_chord(b, d) - log_chord(a, d) - log_chord(b, c);
}

BoundaryMap::BoundaryMap(Fn fn, std::string name, std::size_t certificate_samples)
    : fn_(std::move(fn)), name_(std::move(name)) {
    if (certificate_samples > 0 && !verify_monotone(certificate_samples))
        throw invalid_boundary_map("boundary map '" + name_ + "' is not monotone");
}

BoundaryMap BoundaryMap::identity() {
    return BoundaryMap([](const CirclePoint& p) { return p; }, "identity", 0);
}

BoundaryMap BoundaryMap::mobius(const DiskMobius& m) {
    return BoundaryMap([m](const CirclePoint& p) { return m(p); }, "mobius");
}

bool BoundaryMap::is_monotone_on(std::span<const CirclePoint> samples) const {
    const std::size_t n = samples.size();
    if (n < 2) return true;
    std::vector<CirclePoint> img;
    img.reserve(n);
    for (const auto& p : samples) img.push_back(fn_(p));
    std::size_t descents = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& u = img[i];
        const auto& v = img[(i + 1) % n];
        if (u == v) return false;
        if (!(u < v)) ++descents;
    }
    return descents == 1;
}

bool BoundaryMap::verify_monotone(std::size_t samples) const {
    auto pts = monotonicity_samples(samples);
    return is_monotone_on(pts);
}

BoundaryMap BoundaryMap::then(const BoundaryMap& outer) const {
    Fn inner = fn_;
    Fn out = outer.fn_;
    return BoundaryMap([inner, out](const CirclePoint& p) { return out(inner(p)); },
                       outer.name_ + " o " + name_, 0);
}

std::vector<CirclePoint> monotonicity_samples(std::size_t n) {
    std::vector<CirclePoint> pts;
    pts.reserve(n + 4 * 2 * 6 + 4);
    for (std::size_t j = 0; j < n; ++j)
        pts.push_back(CirclePoint::from_angle(2 * pi * (j + 0.5) / static_cast<double>(n)));
    for (int k = 0; k < 4; ++k) {
        pts.push_back(CirclePoint::from_offset(k, 0.0));
        for (int e = 2; e <= 12; e += 2) {
            double lo = -e * std::log(10.0);
            pts.push_back(CirclePoint::from_log_offset(k, 1, lo));
            pts.push_back(CirclePoint::from_log_offset(k, -1, lo));
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

double pullback_liouville(const BoundaryMap& h, const GeodesicBox& box) {
    CirclePoint a = h(box.a()), b = h(box.b()), c = h(box.c()), d = h(box.d());
    if (!ccw_ordered(a, b, c, d))
        throw invalid_boundary_map("boundary map '" + h.name() + "' reversed a box");
    return liouville_box(GeodesicBox(a, b, c, d));
}

DiracSum::DiracSum(std::vector<DiracAtom> atoms) : atoms_(std::move(atoms)) {
    for (const auto& at : atoms_)
        if (!(at.mass >= 0.0) || !std::isfinite(at.mass))
            throw validation_error("Dirac atom masses must be finite and nonnegative");
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        for (std::size_t j = i + 1; j < atoms_.size(); ++j) {
            const auto& g = atoms_[i].geodesic;
            const auto& h = atoms_[j].geodesic;
            // geodesics cross iff endpoints strictly interleave
            auto strictly_inside = [&](const CirclePoint& p) {
                return arc_contains(g.p(), g.q(), p) && !(p == g.p()) && !(p == g.q());
            };
            auto on_g = [&](const CirclePoint& p) { return p == g.p() || p == g.q(); };
            if (on_g(h.p()) || on_g(h.q())) continue;
            if (strictly_inside(h.p()) != strictly_inside(h.q()))
                throw validation_error("Dirac lamination geodesics must be disjoint");
        }
    }
}

double lamination_box_measure(const MeasuredLamination& lam, const GeodesicBox& box) {
    if (const auto* ds = std::get_if<DiracSum>(&lam)) {
        double s = 0.0;
        for (const auto& at : ds->atoms())
            if (box.separates(at.geodesic)) s += at.mass;
        return s;
    }
    return std::get<StripVertical>(lam).box_measure(box);
}

WeakStarTable weakstar_report(std::span<const ScaledMeasure> scaled,
                              const MeasuredLamination& target,
                              std::span<const NamedBox> boxes, double target_scale) {
    if (scaled.empty()) throw validation_error("weak* report needs at least one measure");
    for (std::size_t i = 1; i < scaled.size(); ++i)
        if (!(scaled[i].epsilon < scaled[i - 1].epsilon))
            throw validation_error("epsilon schedule must be strictly decreasing");

    WeakStarTable table;
    for (const auto& nb : boxes) {
        WeakStarRow row;
        row.box_id = nb.id;
        std::vector<double> ts;
        for (const auto& sm : scaled) {
            row.epsilons.push_back(sm.epsilon);
            row.values.push_back(sm.measure(nb.box));
            ts.push_back(sm.rate_variable);
        }
        const std::size_t n = row.values.size();
        const std::size_t m = std::min<std::size_t>(3, n);
        row.limit = numerics::neville_at_zero(std::span(ts).last(m),
                                              std::span(row.values).last(m));
        row.target = target_scale * lamination_box_measure(target, nb.box);
        row.gap = std::abs(row.limit - row.target);

        std::vector<double> lx, ly;
        const double floor = 1e-13 * std::max(1.0, std::abs(row.limit));
        for (std::size_t i = 0; i < n; ++i) {
            double diff = std::abs(row.values[i] - row.limit);
            if (diff > floor && ts[i] > 0) {
                lx.push_back(std::log(ts[i]));
                ly.push_back(std::log(diff));
            }
        }
        if (lx.size() >= 2) row.rate = numerics::least_squares_line(lx, ly).slope;
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace confmod::currents
