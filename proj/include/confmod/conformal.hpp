#pragma once

#include <complex>
#include <string>
#include <vector>

#include "confmod/currents.hpp"

namespace confmod::conformal {

enum class ModulusMethod { elliptic, grid };

std::string to_string(ModulusMethod m);

struct Modulus {
    double value = 0.0;
    ModulusMethod method = ModulusMethod::elliptic;
    double error_estimate = 0.0;
};

/// Arithmetic-geometric mean, tolerance 1e-14, at most 40 iterations.
double agm(double a, double b);

/// Complete elliptic integral of the first kind, 0 <= k < 1.
double elliptic_K(double k);

/// Modulus of the connecting family of a disk quadrilateral with cross-ratio
/// lambda = exp(Liouville measure). Rejects lambda - 1 < 1e-9 and lambda > 1e12.
Modulus quad_modulus(double lambda);

/// Same function parameterized by L = log(lambda); valid for any L >= 1e-9,
/// used for boxes whose cross-ratio overflows a double.
Modulus quad_modulus_log(double liouville);

Modulus quad_modulus_box(const currents::GeodesicBox& box);

/// Box of the complementary arc pair: (b, c, d, a).
currents::GeodesicBox conjugate_box(const currents::GeodesicBox& box);

/// Planar compact connected set given as a polyline (a single point allowed).
struct Continua {
    std::vector<std::complex<double>> vertices;
};

double diameter(const Continua& e);
double distance(const Continua& e, const Continua& f);

/// dist(E, F) / min(diam E, diam F)
double rel_distance(const Continua& e, const Continua& f);

/// pi (1 + 1 / (2 delta))^2, +inf at delta = 0.
double mod_upper_bound(double delta);

/// 2 pi / log(R / r)
double annulus_modulus(double r, double big_r);

}  // namespace confmod::conformal
