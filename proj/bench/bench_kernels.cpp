#include <benchmark/benchmark.h>

#include <vector>

#include "confmod/delgrid.hpp"
#include "confmod/kernels.hpp"

using namespace confmod::delgrid;

namespace {

/// Five-point Laplacian on an n x n grid with Dirichlet boundary.
kernels::CsrMatrix grid_laplacian(int n) {
    kernels::CsrMatrix a;
    a.n = n * n;
    a.row_ptr.push_back(0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            int r = j * n + i;
            if (j > 0) a.col.push_back(r - n), a.val.push_back(-1.0);
            if (i > 0) a.col.push_back(r - 1), a.val.push_back(-1.0);
            a.col.push_back(r), a.val.push_back(4.0);
            if (i + 1 < n) a.col.push_back(r + 1), a.val.push_back(-1.0);
            if (j + 1 < n) a.col.push_back(r + n), a.val.push_back(-1.0);
            a.row_ptr.push_back(static_cast<int>(a.col.size()));
        }
    return a;
}

template <kernels::Backend B>
void bm_spmv(benchmark::State& state) {
    auto a = grid_laplacian(static_cast<int>(state.range(0)));
    std::vector<double> x(a.n, 1.0), y(a.n);
    for (auto _ : state) {
        if constexpr (B == kernels::Backend::serial)
            kernels::serial::spmv(a, x, y);
        else
            kernels::parallel::spmv(a, x, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(a.val.size()));
}

template <kernels::Backend B>
void bm_pcg(benchmark::State& state) {
    auto a = grid_laplacian(static_cast<int>(state.range(0)));
    std::vector<double> b(a.n, 1.0);
    for (auto _ : state) {
        std::vector<double> x(a.n, 0.0);
        auto r = kernels::pcg(a, b, x, 1e-8, 100000, B);
        benchmark::DoNotOptimize(r.iterations);
    }
}

template <kernels::Backend B>
void bm_chimney_solve(benchmark::State& state) {
    auto c = confmod::domains::canonical_arcs(confmod::domains::DomainTag::chimney);
    auto lm = family_domain(c.i0, c.j0).build();
    SolverOptions o;
    o.backend = B;
    for (auto _ : state) benchmark::DoNotOptimize(solve_potential(lm, false, o).energy);
}

}  // namespace

BENCHMARK(bm_spmv<kernels::Backend::serial>)->Arg(256)->Arg(1024);
BENCHMARK(bm_spmv<kernels::Backend::parallel>)->Arg(256)->Arg(1024);
BENCHMARK(bm_pcg<kernels::Backend::serial>)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_pcg<kernels::Backend::parallel>)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_chimney_solve<kernels::Backend::serial>)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_chimney_solve<kernels::Backend::parallel>)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
