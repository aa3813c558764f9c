#include "ktrace/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "ktrace/errors.hpp"

namespace ktrace {

namespace {

constexpr std::uint64_t kSketchStream = 1;
constexpr std::uint64_t kProbeStream = 2;
constexpr std::uint64_t kRepairStream = 3;
constexpr std::uint64_t kResidualRepairStream = 4;
constexpr std::uint64_t kRestartRepairBase = 1000;

constexpr Eigen::Index kDenseFunctionLimit = 4000;
constexpr Eigen::Index kDenseEigenLimit = 4096;

std::uint64_t repair_seed(std::uint64_t seed, std::uint64_t stream) { return SampleStream(seed).split(stream).seed(); }

std::uint64_t to_u64(Eigen::Index v) { return static_cast<std::uint64_t>(v); }

// y_c = (I - Q Q^T) psi_c, one column at a time so results do not depend on the batch width.
void deflate(const Eigen::Ref<const Eigen::MatrixXd>& qbar, Eigen::MatrixXd& y) {
  if (qbar.cols() == 0) return;
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const Eigen::VectorXd coeffs = qbar.transpose() * y.col(c);
    y.col(c).noalias() -= qbar * coeffs;
  }
}

struct ResidualTerms {
  Eigen::MatrixXd quad;  // functions × samples: ||y||^2 [f(T)]_11
  Eigen::MatrixXd fro;   // functions × samples: ||y||^2 ||f(T) e_1||^2
};

ResidualTerms residual_terms(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& y,
                             std::span<const SpectralFunction> fs, Eigen::Index n, std::uint64_t scalar_seed,
                             std::uint64_t first_sample) {
  const auto batch = scalar_lanczos(a, y, n, scalar_seed, first_sample);
  const auto nf = static_cast<Eigen::Index>(fs.size());
  ResidualTerms out{Eigen::MatrixXd::Zero(nf, y.cols()), Eigen::MatrixXd::Zero(nf, y.cols())};
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const double norm2 = batch.start_norms(c) * batch.start_norms(c);
    if (norm2 == 0.0) continue;
    const QuadratureRule rule = quadrature_rule(batch.alpha.col(c), batch.beta.col(c));
    for (Eigen::Index i = 0; i < nf; ++i) {
      const Eigen::VectorXd fv = eval_values(rule.nodes, fs[static_cast<std::size_t>(i)]);
      out.quad(i, c) = norm2 * rule.first_entry(fv);
      out.fro(i, c) = norm2 * rule.first_column_norm2(fv);
    }
  }
  return out;
}

// Fixed-m tail shared by krylov_trace, restart_trace and hutchpp_baseline. Writes t_rem per function.
void fixed_remainder(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& qbar,
                     std::span<const SpectralFunction> fs, const EstimatorConfig& cfg, TraceEstimate& est) {
  const Eigen::Index m = cfg.m;
  est.samples = m;
  if (m == 0) return;
  const Eigen::Index d = a.dim();
  const SampleStream probes = probe_stream(cfg.probe_seed.value_or(cfg.seed), cfg.dist);
  const std::uint64_t scalar_seed = repair_seed(cfg.seed, kResidualRepairStream);

  std::vector<std::vector<double>> quad(fs.size(), std::vector<double>(static_cast<std::size_t>(m)));
  std::vector<double> fro(static_cast<std::size_t>(m));
  for (Eigen::Index start = 0; start < m; start += cfg.batch_width) {
    const Eigen::Index width = std::min(cfg.batch_width, m - start);
    Eigen::MatrixXd y = probes.block(d, width, to_u64(start));
    deflate(qbar, y);
    const ResidualTerms terms = residual_terms(a, y, fs, cfg.n, scalar_seed, to_u64(start));
    for (std::size_t i = 0; i < fs.size(); ++i) {
      for (Eigen::Index c = 0; c < width; ++c) {
        quad[i][static_cast<std::size_t>(start + c)] = terms.quad(static_cast<Eigen::Index>(i), c);
      }
    }
    for (Eigen::Index c = 0; c < width; ++c) fro[static_cast<std::size_t>(start + c)] = terms.fro(0, c);
  }
  est.t_fro = pairwise_sum(fro) / static_cast<double>(m);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    est.values[i].t_rem = pairwise_sum(quad[i]) / static_cast<double>(m);
  }
}

void finish(TraceEstimate& est) {
  for (auto& v : est.values) v.total = v.t_defl + v.t_rem;
}

// Deflation from a finished block Lanczos run of depth q + n.
void deflation_values(const LanczosResult& res, Eigen::Index q, std::span<const SpectralFunction> fs,
                      TraceEstimate& est) {
  const KrylovSpectrum s(res.t);
  const Eigen::Index k = (q + 1) * res.t.block_size;
  for (std::size_t i = 0; i < fs.size(); ++i) est.values[i].t_defl = s.leading_trace(s.values(fs[i]), k);
  est.deflation_rank = k;
}

TraceEstimate krylov_tail(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& omega,
                          std::span<const SpectralFunction> fs, const EstimatorConfig& cfg, std::uint64_t count0) {
  TraceEstimate est;
  est.values.resize(fs.size());
  Eigen::MatrixXd qbar;
  if (cfg.b > 0) {
    const LanczosResult res = block_lanczos(a, omega, cfg.q, cfg.n, repair_seed(cfg.seed, kRepairStream));
    deflation_values(res, cfg.q, fs, est);
    qbar = res.basis.columns;
  } else {
    qbar.resize(a.dim(), 0);
  }
  const std::uint64_t count1 = a.matvec_count();
  fixed_remainder(a, qbar, fs, cfg, est);
  const std::uint64_t count2 = a.matvec_count();
  est.deflation_matvecs = count1 - count0;
  est.sampling_matvecs = count2 - count1;
  est.matvecs = count2 - count0;
  finish(est);
  return est;
}

double adaptive_c(double eps, double delta) {
  if (!(eps > 0.0) || !std::isfinite(eps)) return std::numeric_limits<double>::infinity();
  return c_eps_delta(eps, delta);
}

bool local_minimum(const std::vector<double>& mt) {
  const std::size_t j = mt.size();
  return j >= 3 && mt[j - 1] > mt[j - 2] && mt[j - 2] > mt[j - 3];
}

}  // namespace

// ---------------------------------------------------------------------------

void EstimatorConfig::validate() const {
  if (b < 0) throw ContractError("block size b must be >= 0");
  if (q < 0) throw ContractError("depth q must be >= 0");
  if (m < 0) throw ContractError("sample count m must be >= 0");
  if (n < 1) throw ContractError("quadrature depth n must be >= 1");
  if (r < 0) throw ContractError("restart count r must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("delta must lie in (0, 1)");
  if (eps < 0.0) throw ContractError("eps must be non-negative");
  if (batch_width < 1) throw ContractError("batch width must be >= 1");
  if (max_samples < 1) throw ContractError("sample cap must be >= 1");
}

std::string_view to_string(Algorithm alg) {
  switch (alg) {
    case Algorithm::krylov:
      return "krylov";
    case Algorithm::hutchpp:
      return "hutchpp";
    case Algorithm::restart:
      return "restart";
    case Algorithm::ada:
      return "ada";
    case Algorithm::ahutchpp:
      return "ahutchpp";
  }
  return "krylov";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "krylov") return Algorithm::krylov;
  if (name == "hutchpp") return Algorithm::hutchpp;
  if (name == "restart") return Algorithm::restart;
  if (name == "ada") return Algorithm::ada;
  if (name == "ahutchpp") return Algorithm::ahutchpp;
  throw ContractError("unknown algorithm '" + std::string(name) + "'");
}

SampleStream sketch_stream(std::uint64_t seed) { return SampleStream(seed, Distribution::gaussian).split(kSketchStream); }

SampleStream probe_stream(std::uint64_t seed, Distribution dist) { return SampleStream(seed, dist).split(kProbeStream); }

CostBreakdown cost_model(Algorithm alg, const EstimatorConfig& cfg) {
  cfg.validate();
  const auto b = to_u64(cfg.b);
  const auto q = to_u64(cfg.q);
  const auto n = to_u64(cfg.n);
  const auto r = to_u64(cfg.r);
  CostBreakdown c;
  c.sampling = to_u64(cfg.m) * n;
  switch (alg) {
    case Algorithm::krylov:
      c.deflation = b * (q + n);
      c.basis_columns = (cfg.q + 1) * cfg.b;
      break;
    case Algorithm::restart:
      c.deflation = b * (q * r + q + n);
      c.basis_columns = (cfg.q + 1) * cfg.b;
      break;
    case Algorithm::hutchpp:
      c.deflation = b * (n + n);
      c.basis_columns = cfg.b;
      break;
    case Algorithm::ada:
    case Algorithm::ahutchpp:
      throw ContractError("adaptive algorithms have no a priori cost");
  }
  c.matvecs = c.deflation + c.sampling;
  return c;
}

// ---------------------------------------------------------------------------

std::vector<double> quadratic_samples(const MatrixOracle& b, Eigen::Index m, Distribution dist, std::uint64_t seed) {
  if (m < 1) throw ContractError("quadratic estimator needs m >= 1");
  const SampleStream probes = probe_stream(seed, dist);
  constexpr Eigen::Index kWidth = 16;
  std::vector<double> out(static_cast<std::size_t>(m));
  for (Eigen::Index start = 0; start < m; start += kWidth) {
    const Eigen::Index width = std::min(kWidth, m - start);
    const Eigen::MatrixXd psi = probes.block(b.dim(), width, to_u64(start));
    const Eigen::MatrixXd bpsi = b.apply(psi);
    for (Eigen::Index c = 0; c < width; ++c) out[static_cast<std::size_t>(start + c)] = psi.col(c).dot(bpsi.col(c));
  }
  return out;
}

TraceEstimate girard_hutchinson(const MatrixOracle& b, Eigen::Index m, Distribution dist, std::uint64_t seed) {
  const std::uint64_t count0 = b.matvec_count();
  const std::vector<double> samples = quadratic_samples(b, m, dist, seed);
  TraceEstimate est;
  est.values.resize(1);
  est.values[0].t_rem = pairwise_sum(samples) / static_cast<double>(m);
  est.samples = m;
  est.matvecs = est.sampling_matvecs = b.matvec_count() - count0;
  finish(est);
  return est;
}

TraceEstimate hutchpp_baseline(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg) {
  cfg.validate();
  if (cfg.b < 1) throw ContractError("Hutch++ baseline needs b >= 1");
  const Eigen::Index d = a.dim();
  const std::uint64_t count0 = a.matvec_count();
  const std::span<const SpectralFunction> fs(&f, 1);

  // f(A) Omega by n-step block Lanczos: b n matvecs.
  const Eigen::MatrixXd omega = sketch_stream(cfg.seed).block(d, cfg.b);
  const LanczosResult res = block_lanczos(a, omega, cfg.n - 1, 1, repair_seed(cfg.seed, kRepairStream));
  const Eigen::MatrixXd f_omega = lanczos_apply(res.t, res.basis, f, cfg.n);

  QrcpResult qr = qrcp(f_omega);
  if (qr.rank < cfg.b) qr.q.rightCols(cfg.b - qr.rank).setZero();

  // tr(Q^T f(A) Q) column by column: another b n matvecs.
  TraceEstimate est;
  est.values.resize(1);
  const ResidualTerms defl = residual_terms(a, qr.q, fs, cfg.n, repair_seed(cfg.seed, kRepairStream + 100), 0);
  est.values[0].t_defl = defl.quad.row(0).sum();
  est.deflation_rank = qr.rank;

  const std::uint64_t count1 = a.matvec_count();
  fixed_remainder(a, qr.q, fs, cfg, est);
  const std::uint64_t count2 = a.matvec_count();
  est.deflation_matvecs = count1 - count0;
  est.sampling_matvecs = count2 - count1;
  est.matvecs = count2 - count0;
  finish(est);
  return est;
}

TraceEstimate krylov_trace(const MatrixOracle& a, std::span<const SpectralFunction> fs, const EstimatorConfig& cfg) {
  cfg.validate();
  if (fs.empty()) throw ContractError("no functions requested");
  if (cfg.b == 0 && cfg.q != 0) throw ContractError("q must be 0 when b = 0");
  const std::uint64_t count0 = a.matvec_count();
  Eigen::MatrixXd omega;
  if (cfg.b > 0) omega = sketch_stream(cfg.seed).block(a.dim(), cfg.b);
  return krylov_tail(a, omega, fs, cfg, count0);
}

TraceEstimate krylov_trace(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg) {
  return krylov_trace(a, std::span<const SpectralFunction>(&f, 1), cfg);
}

FilterProvider exp_filter_provider(double beta0) {
  return [beta0](Eigen::Index, const BlockTridiagonal& t) {
    return exp_filter(t, t.blocks(), beta0, static_cast<int>(t.blocks()));
  };
}

TraceEstimate restart_trace(const MatrixOracle& a, std::span<const SpectralFunction> fs, const EstimatorConfig& cfg,
                            const FilterProvider& filters, const RestartMonitor& monitor) {
  cfg.validate();
  if (fs.empty()) throw ContractError("no functions requested");
  if (cfg.b < 1 || cfg.q < 1) throw ContractError("restarting needs b >= 1 and q >= 1");
  if (cfg.r > 0 && !filters) throw ContractError("restarting needs a filter provider");
  const std::uint64_t count0 = a.matvec_count();

  Eigen::MatrixXd omega = sketch_stream(cfg.seed).block(a.dim(), cfg.b);
  Eigen::Index cycles = 0;
  for (Eigen::Index i = 0; i < cfg.r; ++i) {
    const LanczosResult res = block_lanczos(a, omega, cfg.q, 0, repair_seed(cfg.seed, kRestartRepairBase + to_u64(i)));
    const FilterPolynomial p = filters(i, res.t);
    omega = apply_filter(res.t, res.basis, p, cfg.q);
    ++cycles;
    if (monitor && monitor(i, res.t)) break;
  }
  TraceEstimate est = krylov_tail(a, omega, fs, cfg, count0);
  est.restarts_used = cycles;
  return est;
}

TraceEstimate restart_trace(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg,
                            const FilterProvider& filters, const RestartMonitor& monitor) {
  return restart_trace(a, std::span<const SpectralFunction>(&f, 1), cfg, filters, monitor);
}

// ---------------------------------------------------------------------------

double objective_mtilde(const BlockTridiagonal& t, Eigen::Index q, const SpectralFunction& f, Eigen::Index n, double c) {
  if (q < 0 || n < 1 || t.blocks() < q + n) throw ContractError("objective needs T with at least q + n blocks");
  const KrylovSpectrum s(t, q + n);
  const Eigen::VectorXd fv = s.values(f);
  const Eigen::Index k = (q + 1) * t.block_size;
  const double cols = s.leading_columns_norm2(fv, k);
  const double lead = s.leading_block(fv, k).squaredNorm();
  const double benefit = 2.0 * cols - lead;
  const double base = static_cast<double>(q * t.block_size);
  if (c == 0.0) return base;
  return base - static_cast<double>(n) * c * benefit;
}

RemainderResult adaptive_remainder(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& qbar,
                                   const SpectralFunction& f, const EstimatorConfig& cfg, double c) {
  const Eigen::Index d = a.dim();
  const SampleStream probes = probe_stream(cfg.probe_seed.value_or(cfg.seed), cfg.dist);
  const std::uint64_t scalar_seed = repair_seed(cfg.seed, kResidualRepairStream);
  const std::span<const SpectralFunction> fs(&f, 1);

  RemainderResult out;
  double t_rem = 0.0;
  double t_fro = 0.0;
  Eigen::Index k = 0;
  double m_k = std::numeric_limits<double>::infinity();
  while (m_k > static_cast<double>(k)) {
    if (k == cfg.max_samples) {
      out.capped = true;
      break;
    }
    Eigen::MatrixXd y = probes.block(d, 1, to_u64(k));
    deflate(qbar, y);
    const ResidualTerms terms = residual_terms(a, y, fs, cfg.n, scalar_seed, to_u64(k));
    t_rem += terms.quad(0, 0);
    t_fro += terms.fro(0, 0);
    ++k;
    m_k = c * t_fro / (static_cast<double>(k) * alpha_k(k, cfg.delta));
    if (std::isnan(m_k)) m_k = std::numeric_limits<double>::infinity();
  }
  out.samples = k;
  out.t_rem = t_rem / static_cast<double>(k);
  out.t_fro = t_fro / static_cast<double>(k);
  return out;
}

TraceEstimate ada_trace(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg) {
  cfg.validate();
  if (cfg.b < 1) throw ContractError("adaptive estimator needs b >= 1");
  if (!(cfg.eps > 0.0)) throw ContractError("adaptive estimator needs eps > 0");
  const Eigen::Index d = a.dim();
  const Eigen::Index b = cfg.b;
  const Eigen::Index n = cfg.n;
  const Eigen::Index q_max = cfg.q_max >= 0 ? cfg.q_max : std::max<Eigen::Index>(d / (2 * b), 0);
  const std::uint64_t count0 = a.matvec_count();

  BlockLanczos lanczos(a, sketch_stream(cfg.seed).block(d, b), q_max + n, q_max + n + 1,
                       repair_seed(cfg.seed, kRepairStream));
  for (Eigen::Index k = 0; k < n; ++k) lanczos.step();

  // Per q: 2 ||[f(T)]_{:,1:(q+1)b}||^2 - ||[f(T)]_{lead}||^2 and the deflated trace.
  std::vector<double> benefit;
  std::vector<double> t_defl;
  std::vector<double> mt;
  auto eps_at = [&](Eigen::Index q) {
    return cfg.relative_eps ? cfg.eps * std::abs(t_defl[static_cast<std::size_t>(q)]) : cfg.eps;
  };
  auto objective = [&](Eigen::Index q, double c) {
    const double base = static_cast<double>(q * b);
    return c == 0.0 ? base : base - static_cast<double>(n) * c * benefit[static_cast<std::size_t>(q)];
  };

  TraceEstimate est;
  est.values.resize(1);
  est.remainder_path = "adaptive";
  Eigen::Index q = 0;
  for (;; ++q) {
    const KrylovSpectrum s(lanczos.tridiagonal());
    const Eigen::VectorXd fv = s.values(f);
    const Eigen::Index k = (q + 1) * b;
    benefit.push_back(2.0 * s.leading_columns_norm2(fv, k) - s.leading_block(fv, k).squaredNorm());
    t_defl.push_back(s.leading_trace(fv, k));

    const double c = adaptive_c(eps_at(q), cfg.delta);
    mt.clear();
    for (Eigen::Index j = std::max<Eigen::Index>(q - 2, 0); j <= q; ++j) mt.push_back(objective(j, c));
    if (local_minimum(mt)) break;
    if (q >= q_max) {
      est.q_max_reached = true;
      break;
    }
    lanczos.step();
  }

  const double eps = eps_at(q);
  const double c = adaptive_c(eps, cfg.delta);
  const KrylovBasis basis = lanczos.basis();
  const auto qbar = basis.leading(q + 1);
  const std::uint64_t count1 = a.matvec_count();
  const RemainderResult rem = adaptive_remainder(a, qbar, f, cfg, c);
  const std::uint64_t count2 = a.matvec_count();

  est.values[0].t_defl = t_defl.back();
  est.values[0].t_rem = rem.t_rem;
  est.samples = rem.samples;
  est.t_fro = rem.t_fro;
  est.sample_cap_reached = rem.capped;
  est.q_used = q;
  est.eps_used = eps;
  est.deflation_rank = (q + 1) * b;
  est.deflation_matvecs = count1 - count0;
  est.sampling_matvecs = count2 - count1;
  est.matvecs = count2 - count0;
  finish(est);
  return est;
}

TraceEstimate ahutchpp(const MatrixOracle& a, const SpectralFunction& f, const EstimatorConfig& cfg) {
  cfg.validate();
  if (!(cfg.eps > 0.0)) throw ContractError("adaptive estimator needs eps > 0");
  const Eigen::Index d = a.dim();
  const Eigen::Index n = cfg.n;
  const Eigen::Index b = std::max<Eigen::Index>(cfg.b, 1);
  const Eigen::Index cap =
      std::min(d, cfg.q_max >= 0 ? (cfg.q_max + 1) * b : std::max<Eigen::Index>(d / 2, 1));
  const std::uint64_t count0 = a.matvec_count();
  const SampleStream sketch = sketch_stream(cfg.seed);
  const std::uint64_t seed_base = repair_seed(cfg.seed, kRepairStream);

  // f(A) x by an n-step Lanczos recurrence from x: n matvecs.
  auto apply_f = [&](const Eigen::VectorXd& x, std::uint64_t salt) -> Eigen::VectorXd {
    const LanczosResult res = block_lanczos(a, x, n - 1, 1, seed_base + salt);
    return lanczos_apply(res.t, res.basis, f, n);
  };

  Eigen::MatrixXd q(d, cap);
  Eigen::MatrixXd fq(d, cap);
  std::vector<double> benefit;
  std::vector<double> t_defl;
  std::vector<double> mt;
  double cols_norm2 = 0.0;
  double trace = 0.0;
  Eigen::Index j = 0;

  TraceEstimate est;
  est.values.resize(1);
  est.remainder_path = "adaptive";
  auto eps_now = [&]() { return cfg.relative_eps ? cfg.eps * std::abs(trace) : cfg.eps; };

  while (j < cap) {
    Eigen::VectorXd v = apply_f(sketch.vector(d, to_u64(j)), 2 * to_u64(j));
    const double before = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      if (j > 0) v.noalias() -= q.leftCols(j) * (q.leftCols(j).transpose() * v);
    }
    const double after = v.norm();
    if (!(after > 1e-12 * before)) break;
    q.col(j) = v / after;
    fq.col(j) = apply_f(q.col(j), 2 * to_u64(j) + 1);
    ++j;

    cols_norm2 += fq.col(j - 1).squaredNorm();
    trace += q.col(j - 1).dot(fq.col(j - 1));
    const Eigen::MatrixXd lead = q.leftCols(j).transpose() * fq.leftCols(j);
    benefit.push_back(2.0 * cols_norm2 - 0.5 * (lead + lead.transpose()).squaredNorm());
    t_defl.push_back(trace);

    const double c = adaptive_c(eps_now(), cfg.delta);
    mt.clear();
    for (Eigen::Index i = std::max<Eigen::Index>(j - 3, 0); i < j; ++i) {
      const double base = static_cast<double>(2 * n * (i + 1));
      mt.push_back(c == 0.0 ? base : base - static_cast<double>(n) * c * benefit[static_cast<std::size_t>(i)]);
    }
    if (local_minimum(mt)) break;
  }
  if (j == cap) est.q_max_reached = true;

  const double eps = eps_now();
  const std::uint64_t count1 = a.matvec_count();
  const RemainderResult rem = adaptive_remainder(a, q.leftCols(j), f, cfg, adaptive_c(eps, cfg.delta));
  const std::uint64_t count2 = a.matvec_count();

  est.values[0].t_defl = trace;
  est.values[0].t_rem = rem.t_rem;
  est.samples = rem.samples;
  est.t_fro = rem.t_fro;
  est.sample_cap_reached = rem.capped;
  est.q_used = j;
  est.eps_used = eps;
  est.deflation_rank = j;
  est.deflation_matvecs = count1 - count0;
  est.sampling_matvecs = count2 - count1;
  est.matvecs = count2 - count0;
  finish(est);
  return est;
}

// ---------------------------------------------------------------------------

double projection_residual(const Eigen::Ref<const Eigen::MatrixXd>& fa, const Eigen::Ref<const Eigen::MatrixXd>& q) {
  const Eigen::Index d = fa.rows();
  if (d > kDenseFunctionLimit) throw CapacityError("projection residual is dense-only; d = " + std::to_string(d) + " exceeds 4000");
  if (q.rows() != d) throw DimensionError("basis has " + std::to_string(q.rows()) + " rows, expected d = " + std::to_string(d));
  const double norm = fa.norm();
  if (norm == 0.0) return 0.0;
  if (q.cols() == 0) return 1.0;
  Eigen::MatrixXd x = fa;
  x.noalias() -= q * (q.transpose() * fa);
  const Eigen::MatrixXd xq = x * q;
  x.noalias() -= xq * q.transpose();
  return x.norm() / norm;
}

double projection_residual(const MatrixOracle& a, const SpectralFunction& f, const Eigen::Ref<const Eigen::MatrixXd>& q) {
  return projection_residual(dense_matrix_function(a, f), q);
}

Eigen::MatrixXd dense_matrix_function(const MatrixOracle& a, const SpectralFunction& f) {
  if (a.dim() > kDenseFunctionLimit) {
    throw CapacityError("dense matrix function limited to d <= 4000, got d = " + std::to_string(a.dim()));
  }
  return eval_matrix_function(a.materialize(), f);
}

Eigen::VectorXd dense_eigenvalues(const MatrixOracle& a) {
  if (a.dim() > kDenseEigenLimit) {
    throw CapacityError("dense eigendecomposition limited to d <= 4096, got d = " + std::to_string(a.dim()));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.materialize(), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error("symmetric eigensolver did not converge");
  return eig.eigenvalues();
}

}  // namespace ktrace
