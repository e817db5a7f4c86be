#pragma once

#include <string>
#include <vector>

#include "confmod/experiments.hpp"

namespace confmod::config {

struct Tolerances {
    /// Largest allowed |ratio - expected| at the final epsilon.
    double final_gap = 0.05;
    /// Relative residual of the fitted currents constant.
    double fit = 0.02;
    /// Largest relative difference between the elliptic and grid paths.
    double agreement = 0.02;
    /// Angular distance of box corners from atoms and support endpoints.
    double margin = 1e-3;
};

/// One run of strip-limits or chimney-limits.
struct Config {
    domains::DomainTag domain = domains::DomainTag::strip;
    std::vector<experiments::Scenario> scenarios;
    /// Strip only.
    std::vector<currents::NamedBox> shrink_boxes;
    std::vector<currents::NamedBox> stretch_boxes;
    /// Chimney only.
    std::vector<currents::NamedBox> chimney_boxes;
    std::vector<double> currents_schedule;
    /// Radii of an optional truncation study of the canonical family.
    std::vector<double> truncation_radii;
    Tolerances tolerances;
    std::string output_dir = "out";
};

/// Parses YAML text. Errors carry the source name and line number; unknown
/// keys are rejected.
Config parse_config(const std::string& text, const std::string& source = "<config>");
Config load_config(const std::string& path);

/// Built-in configuration matching the experiments defaults.
Config default_config(domains::DomainTag d);

/// Literal forms used by the config files:
/// arcs "bottom(-inf,0.5)", "right-wall(1,chimney-top)", "left-ray(lower-inf,-1)";
/// prime ends "bottom 2", "right-wall 1.5", "chimney-top", "lower-inf", "+inf".
domains::PrimeEndArc parse_arc(domains::DomainTag d, const std::vector<std::string>& pieces);
domains::PrimeEnd parse_prime_end(domains::DomainTag d, const std::string& s);

}  // namespace confmod::config
