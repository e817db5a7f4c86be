#include "confmod/kernels.hpp"

#include <cmath>

namespace confmod::delgrid::kernels {

namespace serial {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < a.n; ++i) {
        double s = 0.0;
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.val[k] * x[a.col[k]];
        y[i] = s;
    }
}

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * y[i];
}

void scale(std::span<const double> d, std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < d.size(); ++i) z[i] = d[i] * r[i];
}

}  // namespace serial

namespace parallel {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.n; ++i) {
        double s = 0.0;
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.val[k] * x[a.col[k]];
        y[i] = s;
    }
}

double dot(std::span<const double> x, std::span<const double> y) {
    const long n = static_cast<long>(x.size());
    double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static)
    for (long i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
    const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void scale(std::span<const double> d, std::span<const double> r, std::span<double> z) {
    const long n = static_cast<long>(d.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) z[i] = d[i] * r[i];
}

}  // namespace parallel

namespace {

template <class Ops>
CgResult pcg_impl(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                  double tol, int max_iter) {
    const std::size_t n = static_cast<std::size_t>(a.n);
    CgResult res;
    std::vector<double> dinv(n, 1.0), r(n), z(n), p(n), q(n);
    for (int i = 0; i < a.n; ++i)
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            if (a.col[k] == i && a.val[k] != 0.0) dinv[i] = 1.0 / a.val[k];

    const double bnorm = std::sqrt(Ops::dot(b, b));
    if (bnorm == 0.0) {
        for (auto& v : x) v = 0.0;
        res.converged = true;
        return res;
    }
    Ops::spmv(a, x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    Ops::scale(dinv, r, z);
    p = z;
    double rz = Ops::dot(r, z);
    double rnorm = std::sqrt(Ops::dot(r, r));
    for (int it = 0; it < max_iter; ++it) {
        if (rnorm <= tol * bnorm) {
            res.converged = true;
            break;
        }
        Ops::spmv(a, p, q);
        double alpha = rz / Ops::dot(p, q);
        Ops::axpy(alpha, p, x);
        Ops::axpy(-alpha, q, r);
        Ops::scale(dinv, r, z);
        double rz_new = Ops::dot(r, z);
        Ops::xpby(z, rz_new / rz, p);
        rz = rz_new;
        rnorm = std::sqrt(Ops::dot(r, r));
        res.iterations = it + 1;
    }
    res.relative_residual = rnorm / bnorm;
    res.converged = res.relative_residual <= tol;
    return res;
}

struct SerialOps {
    static void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
        serial::spmv(a, x, y);
    }
    static double dot(std::span<const double> x, std::span<const double> y) { return serial::dot(x, y); }
    static void axpy(double al, std::span<const double> x, std::span<double> y) { serial::axpy(al, x, y); }
    static void xpby(std::span<const double> x, double be, std::span<double> y) { serial::xpby(x, be, y); }
    static void scale(std::span<const double> d, std::span<const double> r, std::span<double> z) {
        serial::scale(d, r, z);
    }
};

struct ParallelOps {
    static void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
        parallel::spmv(a, x, y);
    }
    static double dot(std::span<const double> x, std::span<const double> y) { return parallel::dot(x, y); }
    static void axpy(double al, std::span<const double> x, std::span<double> y) { parallel::axpy(al, x, y); }
    static void xpby(std::span<const double> x, double be, std::span<double> y) { parallel::xpby(x, be, y); }
    static void scale(std::span<const double> d, std::span<const double> r, std::span<double> z) {
        parallel::scale(d, r, z);
    }
};

}  // namespace

CgResult pcg(const CsrMatrix& a, std::span<const double> b, std::span<double> x, double tol,
             int max_iter, Backend backend) {
    if (backend == Backend::serial) return pcg_impl<SerialOps>(a, b, x, tol, max_iter);
    return pcg_impl<ParallelOps>(a, b, x, tol, max_iter);
}

}  // namespace confmod::delgrid::kernels
