#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace confmod::delgrid::kernels {

/// Compressed sparse row matrix.
struct CsrMatrix {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;
};

namespace serial {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = x + beta y
void xpby(std::span<const double> x, double beta, std::span<double> y);
/// z = d .* r
void scale(std::span<const double> d, std::span<const double> r, std::span<double> z);
}  // namespace serial

namespace parallel {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);
void scale(std::span<const double> d, std::span<const double> r, std::span<double> z);
}  // namespace parallel

enum class Backend { serial, parallel };

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite matrix; x holds the initial guess and receives the solution.
CgResult pcg(const CsrMatrix& a, std::span<const double> b, std::span<double> x, double tol,
             int max_iter, Backend backend = Backend::parallel);

}  // namespace confmod::delgrid::kernels
