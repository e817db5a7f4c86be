#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "confmod/conformal.hpp"
#include "confmod/domains.hpp"
#include "confmod/kernels.hpp"

namespace confmod::delgrid {

using cplx = std::complex<double>;

struct Segment {
    cplx a, b;
};

struct Rect {
    double x0, y0, x1, y1;
};

enum class Label : std::uint8_t { free, arc_i, arc_j };

/// Triangulation with straight edges.
struct Mesh {
    std::vector<cplx> nodes;
    std::vector<std::array<int, 3>> triangles;
};

/// Mesh with Dirichlet labels for the primal family and, when available, for
/// the conjugate family.
struct LabeledMesh {
    Mesh mesh;
    std::vector<Label> primal;
    std::vector<Label> dual;
    double h = 0.0;

    bool has_dual() const { return !dual.empty(); }
};

/// A domain description that can be meshed at any resolution h.
class MeshDomain {
public:
    using Builder = std::function<LabeledMesh(double h)>;

    /// order: expected convergence order of the energy in h.
    MeshDomain(std::string name, double h, Builder builder, double order = 2.0);

    const std::string& name() const { return name_; }
    double h() const { return h_; }
    double order() const { return order_; }
    LabeledMesh build(double h) const;
    LabeledMesh build() const { return build(h_); }
    MeshDomain with_h(double h) const;

private:
    std::string name_;
    double h_;
    Builder builder_;
    double order_;
};

/// Union of axis-aligned rectangles tiled by square base cells, refined as a
/// 2:1 balanced quadtree. Local cell size at resolution h is
/// clamp(grading * s * dist(p, refine_points), h_min * s^2, h_max * s), with
/// s = h / h_max; every leaf is split into a fan of right triangles around
/// its center.
struct QuadtreeSpec {
    std::vector<Rect> rects;
    double cell = 1.0;
    std::vector<Segment> arc_i, arc_j;
    std::vector<Segment> dual_i, dual_j;
    std::vector<cplx> refine_points;
    double h_max = 0.25;
    double h_min = 0.25;
    double grading = 0.0;
};

MeshDomain quadtree_domain(std::string name, QuadtreeSpec spec, double order = 2.0);

/// Rectangle [0,W]x[0,H]; the family joins the two vertical sides.
MeshDomain rectangle_domain(double width, double height, double h);
/// Round annulus r < |z| < R; the family joins the two circles.
MeshDomain annulus_domain(double r, double big_r, double h);
/// Unit disk; the family joins the circle arcs [a,b] and [c,d] of the box.
MeshDomain disk_quadrilateral_domain(const currents::GeodesicBox& box, double h);

struct GridOptions {
    double radius = 16.0;
    double height = 8.0;
    /// Largest cell; cells near arc endpoints and corners shrink as
    /// grading * distance.
    double h = 1.0;
    double grading = 0.25;
};

/// Truncated strip or chimney with the connecting family of two prime-end
/// arcs; infinite sides are cut at the radius (or height) and the cut edges
/// are insulated.
MeshDomain family_domain(const domains::PrimeEndArc& i, const domains::PrimeEndArc& j,
                         const GridOptions& opts = {});
/// Right half of the chimney, imaginary axis insulated.
MeshDomain chimney_half_domain(const domains::PrimeEndArc& i, const domains::PrimeEndArc& j,
                               const GridOptions& opts = {});
/// Box [-window, window]^2 with insulated sides and two axis-parallel
/// polylines held at 0 and 1.
MeshDomain continua_domain(const conformal::Continua& e, const conformal::Continua& f,
                           double window, double h);

struct SolverOptions {
    double tolerance = 1e-10;
    int max_iterations = 500000;
    kernels::Backend backend = kernels::Backend::parallel;
};

struct PotentialSolution {
    std::vector<double> u;
    double energy = 0.0;
    double residual = 0.0;
    double h = 0.0;
    int iterations = 0;
    /// Largest excursion of u outside [0,1].
    double max_principle_violation = 0.0;
};

/// u = 0 on arc I, u = 1 on arc J (or on the conjugate arcs), insulated
/// elsewhere; energy is the discrete Dirichlet integral.
PotentialSolution solve_potential(const LabeledMesh& m, bool dual = false,
                                  const SolverOptions& opts = {});

/// Energies at h and h/2 combined by Richardson extrapolation.
conformal::Modulus grid_modulus(const MeshDomain& dom, const SolverOptions& opts = {});
conformal::Modulus grid_modulus_dual(const MeshDomain& dom, const SolverOptions& opts = {});

/// Energies at h, h/2, ..., h/2^(levels-1).
std::vector<double> grid_energies(const MeshDomain& dom, int levels, const SolverOptions& opts = {});

struct TruncationRow {
    double radius;
    double modulus;
    double difference;  // from the previous radius, NaN on the first row
};

struct TruncationTable {
    std::vector<TruncationRow> rows;
    /// Relative change at the final radius below 0.5%.
    bool certified() const;
};

TruncationTable truncation_study(const std::function<MeshDomain(double radius)>& make,
                                 std::span<const double> radii, const SolverOptions& opts = {});

struct PropertyCase {
    enum class Kind { monotone, overflow, subadditive, symmetry };
    Kind kind;
    std::string name;
    /// monotone: {smaller, larger}; overflow: {overflowing, overflowed};
    /// subadditive: {whole, part1, part2}; symmetry: {full, half}.
    std::vector<MeshDomain> domains;
};

std::string to_string(PropertyCase::Kind k);

struct PropertyRow {
    std::string name;
    PropertyCase::Kind kind;
    std::vector<double> moduli;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

struct PropertyReport {
    std::vector<PropertyRow> rows;
    bool all_hold() const;
};

PropertyReport family_property_check(std::span<const PropertyCase> cases, double slack = 0.02,
                                     const SolverOptions& opts = {});
std::vector<PropertyCase> default_property_corpus();

/// Columns x,y,u,label; one line per node.
void write_solution_csv(std::ostream& os, const LabeledMesh& m, const PotentialSolution& s);

}  // namespace confmod::delgrid
