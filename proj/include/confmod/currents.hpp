#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace confmod::currents {

/// A point of the unit circle.
///
/// Stored as a quarter-turn anchor k (angle k*pi/2) plus a signed offset in
/// [-pi/4, pi/4) kept in log form, so points exponentially close to 1, i, -1
/// or -i stay distinguishable from the anchor and from each other.
class CirclePoint {
public:
    CirclePoint() = default;

    static CirclePoint from_angle(double theta);
    static CirclePoint from_offset(int anchor, double offset);
    /// offset = sign * exp(log_abs_offset)
    static CirclePoint from_log_offset(int anchor, int sign, double log_abs_offset);
    static CirclePoint from_complex(std::complex<double> z);

    /// Angle in [0, 2*pi).
    double theta() const;
    std::complex<double> value() const;

    int anchor() const { return anchor_; }
    int sign() const { return sign_; }
    double log_abs_offset() const { return log_abs_; }
    double offset() const;

    /// Reflection z -> conj(z).
    CirclePoint conjugate() const;
    /// Reflection z -> -conj(z), i.e. theta -> pi - theta.
    CirclePoint mirror() const;

    friend bool operator==(const CirclePoint& p, const CirclePoint& q);
    /// Total order by the lifted angle in [-pi/4, 7*pi/4).
    friend bool operator<(const CirclePoint& p, const CirclePoint& q);
    friend bool operator>(const CirclePoint& p, const CirclePoint& q) { return q < p; }
    friend bool operator<=(const CirclePoint& p, const CirclePoint& q) { return !(q < p); }
    friend bool operator>=(const CirclePoint& p, const CirclePoint& q) { return !(p < q); }

private:
    int anchor_ = 0;
    int sign_ = 0;
    double log_abs_ = -std::numeric_limits<double>::infinity();
};

/// log |p - q|, accurate for nearly coincident points near an anchor.
double log_chord(const CirclePoint& p, const CirclePoint& q);

/// True when a, b, c, d are pairwise distinct and in counterclockwise order.
bool ccw_ordered(const CirclePoint& a, const CirclePoint& b, const CirclePoint& c,
                 const CirclePoint& d);

/// Membership of p in the closed counterclockwise arc from s to e.
bool arc_contains(const CirclePoint& s, const CirclePoint& e, const CirclePoint& p);

/// Disk automorphism z -> e^{i alpha} (z - a) / (1 - conj(a) z).
class DiskMobius {
public:
    DiskMobius(std::complex<double> a, double alpha);
    std::complex<double> operator()(std::complex<double> z) const;
    CirclePoint operator()(const CirclePoint& p) const;

private:
    std::complex<double> a_;
    std::complex<double> rot_;
};

/// Unordered pair of distinct endpoints.
class Geodesic {
public:
    Geodesic(CirclePoint p, CirclePoint q);
    const CirclePoint& p() const { return p_; }
    const CirclePoint& q() const { return q_; }

private:
    CirclePoint p_, q_;
};

/// Counterclockwise quadruple (a, b, c, d): geodesics with one end in [a, b]
/// and the other in [c, d].
class GeodesicBox {
public:
    GeodesicBox(CirclePoint a, CirclePoint b, CirclePoint c, CirclePoint d);
    static GeodesicBox from_angles(double a, double b, double c, double d);

    const CirclePoint& a() const { return a_; }
    const CirclePoint& b() const { return b_; }
    const CirclePoint& c() const { return c_; }
    const CirclePoint& d() const { return d_; }

    /// Whether the geodesic has one endpoint in each arc.
    bool separates(const Geodesic& g) const;

private:
    CirclePoint a_, b_, c_, d_;
};

/// log((a-c)(b-d) / ((a-d)(b-c)))
double liouville_box(const GeodesicBox& box);

/// Orientation-preserving circle homeomorphism, certified by sampling at
/// construction.
class BoundaryMap {
public:
    using Fn = std::function<CirclePoint(const CirclePoint&)>;

    BoundaryMap(Fn fn, std::string name, std::size_t certificate_samples = 2048);
    static BoundaryMap identity();
    static BoundaryMap mobius(const DiskMobius& m);

    CirclePoint operator()(const CirclePoint& p) const { return fn_(p); }
    const std::string& name() const { return name_; }

    /// Images of the sample points are cyclically ordered and distinct.
    bool is_monotone_on(std::span<const CirclePoint> samples) const;
    bool verify_monotone(std::size_t samples) const;

    BoundaryMap then(const BoundaryMap& outer) const;

private:
    Fn fn_;
    std::string name_;
};

/// Sample grid of n uniform angles plus points clustered at the anchors.
std::vector<CirclePoint> monotonicity_samples(std::size_t n);

class invalid_boundary_map : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Liouville measure of the image box h(B).
double pullback_liouville(const BoundaryMap& h, const GeodesicBox& box);

struct DiracAtom {
    Geodesic geodesic;
    double mass;
};

class DiracSum {
public:
    explicit DiracSum(std::vector<DiracAtom> atoms);
    const std::vector<DiracAtom>& atoms() const { return atoms_; }

private:
    std::vector<DiracAtom> atoms_;
};

/// Absolutely continuous lamination given through its box functional.
struct StripVertical {
    std::function<double(const GeodesicBox&)> box_measure;
};

using MeasuredLamination = std::variant<DiracSum, StripVertical>;

double lamination_box_measure(const MeasuredLamination& lam, const GeodesicBox& box);

struct NamedBox {
    std::string id;
    GeodesicBox box;
};

struct ScaledMeasure {
    double epsilon;
    /// Variable in which the values converge; epsilon or epsilon-star.
    double rate_variable;
    std::function<double(const GeodesicBox&)> measure;
};

struct WeakStarRow {
    std::string box_id;
    std::vector<double> epsilons;
    std::vector<double> values;
    double limit = 0.0;
    double target = 0.0;
    double gap = 0.0;
    /// Fitted exponent p in |value - limit| ~ t^p; NaN when not fittable.
    double rate = std::numeric_limits<double>::quiet_NaN();
};

struct WeakStarTable {
    std::vector<WeakStarRow> rows;
};

WeakStarTable weakstar_report(std::span<const ScaledMeasure> scaled,
                              const MeasuredLamination& target,
                              std::span<const NamedBox> boxes,
                              double target_scale = 1.0);

}  // namespace confmod::currents
