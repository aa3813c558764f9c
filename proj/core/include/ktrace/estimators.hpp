#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ktrace/lanczos.hpp"
#include "ktrace/matfun.hpp"
#include "ktrace/operators.hpp"
#include "ktrace/spectral_function.hpp"
#include "ktrace/stats.hpp"

namespace ktrace {

struct EstimatorConfig {
  Eigen::Index b = 0;  ///< block size of the deflation sketch (0: no deflation)
  Eigen::Index q = 0;  ///< reorthogonalized block Lanczos depth
  Eigen::Index m = 0;  ///< residual samples
  Eigen::Index n = 1;  ///< quadrature depth
  Eigen::Index r = 0;  ///< restart cycles
  Distribution dist = Distribution::gaussian;  ///< residual probe distribution; sketches are always Gaussian
  std::uint64_t seed = 0;
  /// Seed for the residual probes only; defaults to `seed`. Fixing `seed` and varying this
  /// resamples the residual stage over a fixed deflation basis.
  std::optional<std::uint64_t> probe_seed;

  double eps = 0.0;  ///< adaptive error target, absolute unless relative_eps
  double delta = 0.05;
  bool relative_eps = false;
  Eigen::Index q_max = -1;  ///< adaptive basis cap in blocks; < 0 means floor(d / (2b))
  Eigen::Index max_samples = 100000;

  Eigen::Index batch_width = 16;  ///< residual probes per block apply

  /// Throws ContractError on an invalid combination.
  void validate() const;
};

enum class Algorithm { krylov, hutchpp, restart, ada, ahutchpp };

std::string_view to_string(Algorithm alg);
Algorithm parse_algorithm(std::string_view name);

struct TraceValue {
  double t_defl = 0.0;
  double t_rem = 0.0;
  double total = 0.0;
};

struct TraceEstimate {
  std::vector<TraceValue> values;  ///< one per requested function
  Eigen::Index samples = 0;
  std::uint64_t matvecs = 0;
  std::uint64_t deflation_matvecs = 0;
  std::uint64_t sampling_matvecs = 0;
  Eigen::Index deflation_rank = 0;

  // Adaptive runs.
  Eigen::Index q_used = 0;
  bool q_max_reached = false;
  bool sample_cap_reached = false;
  double eps_used = 0.0;
  double t_fro = 0.0;  ///< estimate of ||remainder||_F^2 (first function)

  // Restarted runs.
  Eigen::Index restarts_used = 0;

  std::string_view remainder_path = "fixed";

  double t_defl() const { return values.front().t_defl; }
  double t_rem() const { return values.front().t_rem; }
  double total() const { return values.front().total; }
};

struct CostBreakdown {
  std::uint64_t matvecs = 0;
  std::uint64_t deflation = 0;
  std::uint64_t sampling = 0;
  Eigen::Index basis_columns = 0;
};

/// Matvec counts for the non-adaptive algorithms:
/// krylov b(q+n) + mn, restart b(qr+q+n) + mn, hutchpp 2bn + mn.
CostBreakdown cost_model(Algorithm alg, const EstimatorConfig& cfg);

/// Single-sample quadratic forms psi_i^T B psi_i for i = 0..m-1.
std::vector<double> quadratic_samples(const MatrixOracle& b, Eigen::Index m, Distribution dist, std::uint64_t seed);

/// (1/m) sum_i psi_i^T B psi_i with B available as an operator.
TraceEstimate girard_hutchinson(const MatrixOracle& b, Eigen::Index m, Distribution dist, std::uint64_t seed);

/// Hutch++-style baseline: Q = orth(f(A) Omega) with every f(A) product by n-step Lanczos.
TraceEstimate hutchpp_baseline(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg);

/// Krylov-aware deflation from block_lanczos(Omega, q, n) plus the deflated quadratic estimator.
/// Every function in `fs` reuses the same T and the same residual Lanczos runs.
TraceEstimate krylov_trace(const MatrixOracle& a, std::span<const SpectralFunction> fs, const EstimatorConfig& cfg);
TraceEstimate krylov_trace(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg);

/// Filter for restart cycle `cycle` (0-based) given T_q of that cycle.
using FilterProvider = std::function<FilterPolynomial(Eigen::Index cycle, const BlockTridiagonal& t_q)>;
/// Called after each restart cycle; returning true ends the restart loop early.
using RestartMonitor = std::function<bool(Eigen::Index cycle, const BlockTridiagonal& t_q)>;

/// Chebyshev interpolants of exp(-beta0 (x - a)) on each cycle's filter interval, degree q.
FilterProvider exp_filter_provider(double beta0);

/// Low-memory variant: r filter cycles of depth q, then the krylov_trace tail.
TraceEstimate restart_trace(const MatrixOracle& a, std::span<const SpectralFunction> fs, const EstimatorConfig& cfg,
                            const FilterProvider& filters, const RestartMonitor& monitor = {});
TraceEstimate restart_trace(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg,
                            const FilterProvider& filters, const RestartMonitor& monitor = {});

/// q b - n C (2 ||[f(T)]_{:,1:(q+1)b}||_F^2 - ||[f(T)]_{1:(q+1)b,1:(q+1)b}||_F^2) using the first q+n blocks of T.
double objective_mtilde(const BlockTridiagonal& t, Eigen::Index q, const SpectralFunction& f, Eigen::Index n, double c);

struct RemainderResult {
  double t_rem = 0.0;  ///< already divided by k
  double t_fro = 0.0;  ///< already divided by k
  Eigen::Index samples = 0;
  bool capped = false;
};

/// Sequential adaptive sampling of the deflated remainder shared by ada_trace and ahutchpp:
/// stop at the first k with C t_fro / (k alpha_k) <= k.
RemainderResult adaptive_remainder(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& qbar,
                                   const SpectralFunction& f, const EstimatorConfig& cfg, double c);

/// Adaptive Krylov-aware estimator: grow q until M~(q) > M~(q-1) > M~(q-2) or q_max, then sample adaptively.
TraceEstimate ada_trace(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg);

/// Adaptive Hutch++ baseline: one deflation column at a time, 2n matvecs per column.
TraceEstimate ahutchpp(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg);

/// ||(I - QQ^T) F (I - QQ^T)||_F / ||F||_F for a dense F. Throws CapacityError for d > 4000.
double projection_residual(const Eigen::Ref<const Eigen::MatrixXd>& fa, const Eigen::Ref<const Eigen::MatrixXd>& q);
double projection_residual(const MatrixOracle& a, const SpectralFunction& f, const Eigen::Ref<const Eigen::MatrixXd>& q);

/// f(A) from a dense eigendecomposition of the materialized operator. Throws CapacityError for d > 4000.
Eigen::MatrixXd dense_matrix_function(const MatrixOracle& a, const SpectralFunction& f);

/// Eigenvalues of the materialized operator. Throws CapacityError for d > 4096.
Eigen::VectorXd dense_eigenvalues(const MatrixOracle& a);

/// Random streams derived from one seed.
SampleStream sketch_stream(std::uint64_t seed);
SampleStream probe_stream(std::uint64_t seed, Distribution dist);

}  // namespace ktrace
