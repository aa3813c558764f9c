#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ktrace/estimators.hpp"

namespace ktrace::cli {

/// Column order of every trace-style CSV (trace, spin, adaptive).
inline constexpr std::array<std::string_view, 15> kResultColumns{
    "experiment", "config", "trial", "beta", "target", "estimate", "exact", "rel_error", "matvecs",
    "deflation_matvecs", "sampling_matvecs", "deflation_rank", "samples", "remainder_path", "wall_ms"};

inline constexpr std::array<std::string_view, 9> kProjectionColumns{
    "experiment", "spectrum", "q", "b", "r", "krylov_residual", "naive_residual", "deflation_rank", "wall_ms"};

struct ResultRow {
  std::string experiment;
  std::string config;
  std::string trial;  ///< trial index, or "p90" / "mean" on summary rows
  std::optional<double> beta;
  std::optional<double> target;
  std::optional<double> estimate;
  std::optional<double> exact;
  std::optional<double> rel_error;
  double matvecs = 0;
  double deflation_matvecs = 0;
  double sampling_matvecs = 0;
  double deflation_rank = 0;
  double samples = 0;
  std::string remainder_path;
  double wall_ms = 0;

  // Not written to CSV.
  double t_defl = 0;
  double t_rem = 0;
};

struct ProjectionRow {
  std::string spectrum;
  Eigen::Index q = 0;
  Eigen::Index b = 0;
  Eigen::Index r = 0;
  double krylov_residual = 0;
  double naive_residual = 0;
  Eigen::Index deflation_rank = 0;
  double wall_ms = 0;
};

void write_header(std::ostream& out, std::span<const std::string_view> columns);
void write_rows(std::ostream& out, std::span<const ResultRow> rows);
void write_rows(std::ostream& out, std::span<const ProjectionRow> rows);
/// %.16e, or a plain integer when the value is integral.
std::string format_number(double v);

/// One estimator configuration, written "alg:key=value,...", e.g. "krylov:b=8,q=30,m=0,n=50".
/// Keys: b q m n r seed dist eps delta qmax filter_beta. "girard" is krylov with b = 0.
struct RunSpec {
  std::string text;
  Algorithm alg = Algorithm::krylov;
  EstimatorConfig cfg;
  double filter_beta = 10.0;
};
RunSpec parse_run(const std::string& text);

/// Dispatches to the core estimator. Adaptive algorithms accept exactly one function.
TraceEstimate run_estimator(const MatrixOracle& a, std::span<const SpectralFunction> fs, const RunSpec& run);

/// KTRACE_WORKERS, else the hardware concurrency (at least 1).
int worker_count();

/// Calls job(i) for i in [0, count) on `workers` threads and returns results in index order.
/// The first exception thrown by any job is rethrown.
std::vector<std::vector<ResultRow>> for_each_index(int count, int workers,
                                                   const std::function<std::vector<ResultRow>(int)>& job);

struct TraceOptions {
  std::string problem;
  std::string function;
  double beta = 1.0;
  bool shift_min = false;
  RunSpec run;
  int trials = 1;
};
std::vector<ResultRow> run_trace(const TraceOptions& opt, int workers);

struct SpinOptions {
  int spins = 10;
  double field = 0.3;
  int trials = 100;
  std::vector<double> betas;
  std::vector<RunSpec> runs;
  std::uint64_t seed = 0;
};
std::vector<std::string> default_spin_runs();
/// Trial rows for every (trial, run, beta), then one p90 row per (run, beta).
std::vector<ResultRow> run_spin(const SpinOptions& opt, int workers);

struct ProjectionOptions {
  std::string spectrum = "slow";
  Eigen::Index d = 2000;
  double kappa = 1000.0;
  double rho = 0.95;
  std::string function = "inverse";
  std::vector<Eigen::Index> qs{1, 2, 4, 8, 16, 32};
  std::vector<Eigen::Index> bs{1, 2, 4, 8, 16};
  std::vector<Eigen::Index> rs{0};
  std::uint64_t seed = 0;
  double filter_beta = 10.0;
  Eigen::Index max_qb = 1024;
};
/// Cells with q b > max_qb are skipped.
std::vector<ProjectionRow> run_projection(const ProjectionOptions& opt, int workers);

struct AdaptiveOptions {
  std::string problem = "powerlaw:d=2500,c=1.5";
  std::string function = "sqrt";
  int p_min = 2;
  int p_max = 7;
  int trials = 10;
  std::vector<Algorithm> algs{Algorithm::ada, Algorithm::ahutchpp};
  Eigen::Index b = 2;
  Eigen::Index n = 50;
  double delta = 0.05;
  Eigen::Index q_max = -1;
  std::uint64_t seed = 0;
  bool exact_eps = false;  ///< eps = 2^-p |tr| from the exact trace instead of the pilot
};
/// Trial rows for every (alg, p, trial), then one mean row per (alg, p).
std::vector<ResultRow> run_adaptive(const AdaptiveOptions& opt, int workers);

}  // namespace ktrace::cli
