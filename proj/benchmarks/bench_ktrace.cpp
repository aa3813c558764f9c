#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "ktrace/estimators.hpp"

namespace {

using namespace ktrace;

void BM_SpinApply(benchmark::State& state) {
  const SparseSymmetric a = build_spin_chain(static_cast<int>(state.range(0)), 0.3);
  const Eigen::Index b = state.range(1);
  const Eigen::MatrixXd x = SampleStream(1).block(a.dim(), b);
  for (auto _ : state) benchmark::DoNotOptimize(a.apply(x));
  state.SetItemsProcessed(state.iterations() * b);
  state.counters["nnz"] = static_cast<double>(a.nnz());
}
BENCHMARK(BM_SpinApply)->Args({12, 1})->Args({12, 8})->Args({16, 1})->Args({16, 8});

void BM_BlockLanczos(benchmark::State& state) {
  const SparseSymmetric a = build_spin_chain(12, 0.3);
  const Eigen::Index b = state.range(0);
  const Eigen::Index q = state.range(1);
  const Eigen::MatrixXd omega = SampleStream(2).block(a.dim(), b);
  for (auto _ : state) benchmark::DoNotOptimize(block_lanczos(a, omega, q, 50));
  state.counters["matvecs"] = static_cast<double>(b * (q + 50));
}
BENCHMARK(BM_BlockLanczos)->Args({4, 10})->Args({8, 30})->Unit(benchmark::kMillisecond);

void BM_KrylovTrace(benchmark::State& state) {
  const SparseSymmetric a = build_spin_chain(10, 0.3);
  std::vector<SpectralFunction> fs;
  for (int i = 0; i < state.range(0); ++i) fs.push_back(SpectralFunction::exp_neg_beta(0.1 * (i + 1), -15.0));
  EstimatorConfig cfg;
  cfg.b = 4;
  cfg.q = 30;
  cfg.m = 6;
  cfg.n = 50;
  for (auto _ : state) benchmark::DoNotOptimize(krylov_trace(a, fs, cfg));
}
BENCHMARK(BM_KrylovTrace)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_AdaTrace(benchmark::State& state) {
  const DiagonalOperator a = build_power_law_diagonal(2500, 1.5);
  const auto f = SpectralFunction::sqrt();
  EstimatorConfig cfg;
  cfg.b = 2;
  cfg.n = 50;
  cfg.eps = std::ldexp(1.0, -static_cast<int>(state.range(0))) * a.trace_of(f);
  for (auto _ : state) benchmark::DoNotOptimize(ada_trace(a, f, cfg));
}
BENCHMARK(BM_AdaTrace)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
