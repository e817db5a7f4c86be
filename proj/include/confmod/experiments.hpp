#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "confmod/currents.hpp"
#include "confmod/delgrid.hpp"
#include "confmod/domains.hpp"

namespace confmod::experiments {

using domains::DomainTag;
using domains::PrimeEndArc;

inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

enum class Method { elliptic, grid, both };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct Scenario {
    std::string id;
    DomainTag domain;
    PrimeEndArc i;
    PrimeEndArc j;
    /// Strictly decreasing; used by the elliptic path.
    std::vector<double> epsilons;
    Method method = Method::elliptic;
    /// Schedule of the grid path; the elliptic schedule when empty.
    std::vector<double> grid_epsilons;
    delgrid::GridOptions grid;
};

/// Geometric schedule 2^-first, ..., 2^-last.
std::vector<double> dyadic_schedule(int first, int last, int step = 1);

/// Deformation H_eps on the strip or T_eps on the chimney.
domains::Deformation deformation(DomainTag d, double epsilon);

/// Elliptic-path modulus of the deformed family. Disconnected arcs are
/// accepted for mirror-symmetric chimney pairs through the symmetry rule.
conformal::Modulus elliptic_modulus(DomainTag d, const PrimeEndArc& i, const PrimeEndArc& j, double epsilon);
conformal::Modulus grid_family_modulus(DomainTag d, const PrimeEndArc& i, const PrimeEndArc& j, double epsilon,
                                       const delgrid::GridOptions& opts);

/// Expected ratio limit: 1 if the two ends of the strip are split between
/// I and J, 0 otherwise. Rejects arcs ending at an end of the strip.
int classify_strip(const PrimeEndArc& i, const PrimeEndArc& j);
/// Number of corners covered by J (from the ray side) whose wall I climbs all
/// the way to the chimney top; 0 when the top is not in I. Rejects arcs that
/// contain a corner in I or end at a corner from the wall in J.
int classify_chimney(const PrimeEndArc& i, const PrimeEndArc& j);

struct RatioRow {
    double epsilon;
    conformal::ModulusMethod method;
    double modulus_i0j0;
    double modulus_ij;
    double ratio;
};

struct RatioTable {
    std::string scenario_id;
    DomainTag domain;
    int expected_limit = 0;
    std::vector<RatioRow> elliptic;
    std::vector<RatioRow> grid;
    /// Limits extrapolated to 1/mod(I0,J0) = 0 from the last three points.
    double elliptic_limit = nan;
    double elliptic_gap = nan;
    double elliptic_final_gap = nan;
    /// |ratio - expected| strictly decreasing over the last eight points.
    bool gap_monotone = false;
    double grid_limit = nan;
    double grid_gap = nan;
    double grid_final_gap = nan;
    /// Largest relative difference of mod(I,J) between the paths.
    double agreement = nan;
};

RatioTable ratio_table_strip(const Scenario& s);
RatioTable ratio_table_chimney(const Scenario& s);
RatioTable ratio_table(const Scenario& s);

/// Box of the geodesics from bottom [p,q] to top [p,q] of the strip.
currents::NamedBox strip_parameter_box(std::string id, double p, double q);
currents::NamedBox angle_box(std::string id, double a, double b, double c, double d);

struct CurrentsTable {
    std::string pipeline;
    std::vector<double> epsilons;
    std::vector<double> rate_variables;
    currents::WeakStarTable table;
    /// Least-squares constant c in limit = c * target over all boxes.
    double constant = nan;
    /// (limit - c * target) / c per box.
    std::vector<double> residuals;
    double max_residual = nan;
    bool flagged = false;
};

struct CurrentsOptions {
    /// Smallest allowed angular distance from box corners to atom or
    /// support endpoints.
    double margin = 1e-3;
    /// Residual tolerance for the fit flag.
    double tolerance = 0.02;
};

/// epsilon (T_eps)^* L on the strip, realized as the horizontal stretch
/// H_{1/eps}; target the vertical lamination.
CurrentsTable strip_shrink_currents(std::span<const currents::NamedBox> boxes, std::span<const double> schedule,
                                    const CurrentsOptions& o = {});
/// eps* (H_eps)^* L; target the Dirac lamination on the geodesic (-1, 1).
CurrentsTable strip_stretch_currents(std::span<const currents::NamedBox> boxes, std::span<const double> schedule,
                                     const CurrentsOptions& o = {});
/// eps* (T_eps)^* L on the chimney; target Dirac masses on (i, 1) and (i, -1).
CurrentsTable chimney_currents(std::span<const currents::NamedBox> boxes, std::span<const double> schedule,
                               const CurrentsOptions& o = {});

/// eps* = 1 / mod of the deformed canonical family.
double epsilon_star(DomainTag d, double epsilon);

struct ConvergenceSeries {
    std::string id;
    std::vector<double> t;
    std::vector<double> values;
    double limit;
};

struct RateFit {
    std::string id;
    double slope = nan;
    double intercept = nan;
    std::size_t points = 0;
};

/// Log-log fit of |value - limit| against t per series; series with fewer
/// than four usable points get a NaN slope. Rejects schedules shorter than
/// four points.
std::vector<RateFit> rate_report(std::span<const ConvergenceSeries> series);
std::vector<ConvergenceSeries> series_of(const CurrentsTable& t);
std::vector<ConvergenceSeries> series_of(const RatioTable& t);

/// Default schedules, scenario corpora and box lists.
std::vector<double> default_strip_schedule();
std::vector<double> default_chimney_schedule();
std::vector<double> default_chimney_grid_schedule();
std::vector<Scenario> default_strip_scenarios();
std::vector<Scenario> default_chimney_scenarios();
std::vector<currents::NamedBox> default_shrink_boxes();
std::vector<currents::NamedBox> default_stretch_boxes();
std::vector<currents::NamedBox> default_chimney_boxes();

/// Shared CSV schema: scenario_id,epsilon,modulus_I0J0,modulus_IJ,ratio,
/// expected_limit,box_id,scaled_measure,target,gap,method.
void write_csv_header(std::ostream& os);
void write_csv(std::ostream& os, const RatioTable& t);
void write_csv(std::ostream& os, const CurrentsTable& t, const std::string& scenario_id);

struct CsvRecord {
    std::string scenario_id;
    double epsilon = nan;
    double modulus_i0j0 = nan;
    double modulus_ij = nan;
    double ratio = nan;
    double expected_limit = nan;
    std::string box_id;
    double scaled_measure = nan;
    double target = nan;
    double gap = nan;
    std::string method;
};

std::vector<CsvRecord> read_csv(std::istream& is);

}  // namespace confmod::experiments
