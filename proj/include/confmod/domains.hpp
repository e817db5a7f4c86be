#pragma once

#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "confmod/conformal.hpp"
#include "confmod/currents.hpp"

namespace confmod::domains {

using currents::CirclePoint;
using currents::GeodesicBox;

enum class DomainTag { strip, chimney };

std::string to_string(DomainTag d);

/// Interval endpoint: a finite value or a symbolic infinity.
struct Bound {
    enum class Kind { finite, minus_infinity, plus_infinity };
    Kind kind = Kind::finite;
    double value = 0.0;

    static Bound at(double v) { return {Kind::finite, v}; }
    static Bound minus_infinity() { return {Kind::minus_infinity, 0.0}; }
    static Bound plus_infinity() { return {Kind::plus_infinity, 0.0}; }
    bool is_finite() const { return kind == Kind::finite; }
    /// For ordering only; never stored.
    double as_extended() const;
};

std::string to_string(const Bound& b);

// ---------------------------------------------------------------- strip

struct StripPrimeEnd {
    enum class Kind { bottom, plus_infinity, top, minus_infinity };
    Kind kind = Kind::bottom;
    double x = 0.0;

    static StripPrimeEnd bottom(double x) { return {Kind::bottom, x}; }
    static StripPrimeEnd top(double x) { return {Kind::top, x}; }
    static StripPrimeEnd plus_infinity() { return {Kind::plus_infinity, 0.0}; }
    static StripPrimeEnd minus_infinity() { return {Kind::minus_infinity, 0.0}; }

    friend bool operator==(const StripPrimeEnd&, const StripPrimeEnd&) = default;
};

enum class StripSide { bottom, top };

struct StripArc {
    StripSide side;
    Bound lo, hi;

    StripArc(StripSide side, Bound lo, Bound hi);
    StripPrimeEnd ccw_start() const;
    StripPrimeEnd ccw_end() const;
};

/// (e^{pi z} - i) / (e^{pi z} + i) on the closed strip 0 <= Im z <= 1.
std::complex<double> strip_map(std::complex<double> z);
CirclePoint strip_map_boundary(const StripPrimeEnd& p);
StripPrimeEnd strip_map_inverse(const CirclePoint& w);

// -------------------------------------------------------------- chimney

/// Prime end of the chimney {Im z < 0} U {|Re z| < 1}; t is the distance
/// |x| - 1 from the corner on rays and y on walls. Corners are stored on the
/// rays (t = 0).
struct ChimneyPrimeEnd {
    enum class Kind { right_ray, right_wall, chimney_top, left_wall, left_ray, lower_infinity };
    Kind kind = Kind::right_ray;
    double t = 0.0;

    static ChimneyPrimeEnd right_ray(double x);
    static ChimneyPrimeEnd left_ray(double x);
    static ChimneyPrimeEnd right_ray_from_corner(double d);
    static ChimneyPrimeEnd left_ray_from_corner(double d);
    static ChimneyPrimeEnd right_wall(double y);
    static ChimneyPrimeEnd left_wall(double y);
    static ChimneyPrimeEnd chimney_top() { return {Kind::chimney_top, 0.0}; }
    static ChimneyPrimeEnd lower_infinity() { return {Kind::lower_infinity, 0.0}; }

    ChimneyPrimeEnd mirror() const;
    /// Real coordinate of a ray point.
    double x() const;
    friend bool operator==(const ChimneyPrimeEnd&, const ChimneyPrimeEnd&) = default;
};

enum class ChimneySide { right_ray, right_wall, left_wall, left_ray };

/// Interval on one side: x for rays, y for walls.
struct ChimneyArc {
    ChimneySide side;
    Bound lo, hi;

    ChimneyArc(ChimneySide side, Bound lo, Bound hi);
    ChimneyPrimeEnd ccw_start() const;
    ChimneyPrimeEnd ccw_end() const;
};

/// Schwarz-Christoffel map f(w) = -1 - (2/pi) (t + i log((1 + i t) / w)),
/// t = sqrt(w^2 - 1), from the upper half-plane onto the chimney, followed by
/// the Cayley map w -> -i (w - i) / (w + i) onto the disk.
class ChimneyMap {
public:
    ChimneyMap();

    std::complex<double> sc(std::complex<double> w) const;
    std::complex<double> sc_derivative(std::complex<double> w) const;
    /// Preimage in the upper half-plane of an interior point, by Newton
    /// continuation from the preimage of -i.
    std::complex<double> sc_inverse(std::complex<double> z) const;

    CirclePoint boundary(const ChimneyPrimeEnd& p) const;
    ChimneyPrimeEnd inverse(const CirclePoint& w) const;
    std::complex<double> interior(std::complex<double> z) const;
    /// Real prevertex; empty for the lower infinity.
    std::optional<double> prevertex(const ChimneyPrimeEnd& p) const;

private:
    std::complex<double> w_base_;
};

const ChimneyMap& chimney();
std::complex<double> chimney_map(std::complex<double> z);
CirclePoint chimney_map_boundary(const ChimneyPrimeEnd& p);
ChimneyPrimeEnd chimney_map_inverse(const CirclePoint& w);

/// Distance x - 1 from the corner along the right ray as a function of the
/// prevertex parameter sigma >= 0 (w = -cosh sigma), and its inverse.
double chimney_ray_distance(double sigma);
double chimney_ray_sigma(double distance);
/// y on the right wall as a function of u > 0 (w = -sech u), and its inverse.
double chimney_wall_y(double u);
double chimney_wall_u(double y);

// ------------------------------------------------------------ arcs

using PrimeEnd = std::variant<StripPrimeEnd, ChimneyPrimeEnd>;

std::string to_string(const PrimeEnd& p);

struct ArcComponent {
    PrimeEnd start;
    PrimeEnd end;
};

/// Finite union of side intervals, grouped into connected components, each
/// traversed counterclockwise from start to end.
class PrimeEndArc {
public:
    static PrimeEndArc strip(std::vector<StripArc> pieces);
    static PrimeEndArc chimney(std::vector<ChimneyArc> pieces);

    DomainTag domain() const { return domain_; }
    const std::vector<StripArc>& strip_pieces() const { return strip_pieces_; }
    const std::vector<ChimneyArc>& chimney_pieces() const { return chimney_pieces_; }
    const std::vector<ArcComponent>& components() const { return components_; }
    bool connected() const { return components_.size() == 1; }

    /// Image arc on the circle of one component: (phi(start), phi(end)).
    std::pair<CirclePoint, CirclePoint> disk_arc(std::size_t component = 0) const;
    bool contains_disk_point(const CirclePoint& p) const;
    std::string describe() const;

private:
    DomainTag domain_ = DomainTag::strip;
    std::vector<StripArc> strip_pieces_;
    std::vector<ChimneyArc> chimney_pieces_;
    std::vector<ArcComponent> components_;
};

CirclePoint map_prime_end(const PrimeEnd& p);

struct Deformation {
    enum class Kind { horizontal_shrink, vertical_shrink };
    Kind kind;
    double epsilon;

    Deformation(Kind kind, double epsilon);
    DomainTag domain() const;
};

/// Image of the arc under H_eps (strip) or T_eps (chimney).
PrimeEndArc deform_arc(const Deformation& d, const PrimeEndArc& arc);
StripPrimeEnd deform(const Deformation& d, const StripPrimeEnd& p);
ChimneyPrimeEnd deform(const Deformation& d, const ChimneyPrimeEnd& p);

/// phi o d o phi^{-1} on the circle.
currents::BoundaryMap boundary_map_h(const Deformation& d);

/// Lebesgue measure of the leaves x with phi(x) and phi(x + i) in opposite
/// arcs of the box.
double strip_vertical_measure(const GeodesicBox& box);
currents::MeasuredLamination strip_vertical_lamination();

struct CanonicalArcs {
    PrimeEndArc i0;
    PrimeEndArc j0;
};

CanonicalArcs canonical_arcs(DomainTag d);

struct CurveFamilySpec {
    DomainTag domain;
    PrimeEndArc i;
    PrimeEndArc j;
};

/// Box (phi(I.start), phi(I.end), phi(J.start), phi(J.end)) of a family of
/// two connected arcs; rejects overlapping or touching arcs.
GeodesicBox family_box(const PrimeEndArc& i, const PrimeEndArc& j);

/// Elliptic-path modulus of a connected family.
conformal::Modulus family_modulus(const PrimeEndArc& i, const PrimeEndArc& j);

/// Modulus of the family joining I and J inside the right half of the
/// chimney, the imaginary axis being free. Arcs must lie on the right side.
conformal::Modulus chimney_half_modulus(const PrimeEndArc& i, const PrimeEndArc& j);

/// Mirror image x -> -x of a chimney arc.
PrimeEndArc mirror_arc(const PrimeEndArc& arc);

}  // namespace confmod::domains
