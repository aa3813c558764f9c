#include "ktrace/matfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "ktrace/errors.hpp"

namespace ktrace {

Eigen::VectorXd eval_values(const Eigen::Ref<const Eigen::VectorXd>& x, const SpectralFunction& f) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = f(x(i));
  return out;
}

Eigen::MatrixXd eval_matrix_function(const Eigen::Ref<const Eigen::MatrixXd>& t, const SpectralFunction& f) {
  const KrylovSpectrum s(t);
  return s.leading_block(s.values(f), s.size());
}

// ---------------------------------------------------------------------------

KrylovSpectrum::KrylovSpectrum(const BlockTridiagonal& t, Eigen::Index blocks) {
  const Eigen::MatrixXd full = t.assemble(blocks);
  size_ = full.rows();
  active_.reserve(static_cast<std::size_t>(size_));
  auto dead = t.inactive.begin();
  for (Eigen::Index i = 0; i < size_; ++i) {
    while (dead != t.inactive.end() && *dead < i) ++dead;
    if (dead != t.inactive.end() && *dead == i) continue;
    active_.push_back(i);
  }
  if (static_cast<Eigen::Index>(active_.size()) == size_) {
    decompose(full);
  } else {
    decompose(full(active_, active_));
  }
}

KrylovSpectrum::KrylovSpectrum(const Eigen::Ref<const Eigen::MatrixXd>& t) {
  if (t.rows() != t.cols()) throw DimensionError("matrix function needs a square matrix");
  size_ = t.rows();
  active_.resize(static_cast<std::size_t>(size_));
  for (Eigen::Index i = 0; i < size_; ++i) active_[static_cast<std::size_t>(i)] = i;
  decompose(0.5 * (t + t.transpose()));
}

void KrylovSpectrum::decompose(const Eigen::MatrixXd& compressed) {
  if (compressed.rows() == 0) {
    theta_.resize(0);
    v_.resize(0, 0);
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(compressed);
  if (eig.info() != Eigen::Success) throw Error("symmetric eigensolver did not converge");
  theta_ = eig.eigenvalues();
  v_ = eig.eigenvectors();
}

Eigen::Index KrylovSpectrum::active_before(Eigen::Index k) const {
  if (k < 0 || k > size_) throw ContractError("leading size " + std::to_string(k) + " outside 0.." + std::to_string(size_));
  return std::lower_bound(active_.begin(), active_.end(), k) - active_.begin();
}

double KrylovSpectrum::leading_trace(const Eigen::VectorXd& fvals, Eigen::Index k) const {
  const Eigen::Index ka = active_before(k);
  if (ka == 0) return 0.0;
  const Eigen::VectorXd w = v_.topRows(ka).cwiseAbs2().colwise().sum().transpose();
  return fvals.dot(w);
}

double KrylovSpectrum::leading_columns_norm2(const Eigen::VectorXd& fvals, Eigen::Index k) const {
  const Eigen::Index ka = active_before(k);
  if (ka == 0) return 0.0;
  const Eigen::VectorXd w = v_.topRows(ka).cwiseAbs2().colwise().sum().transpose();
  return fvals.cwiseAbs2().dot(w);
}

Eigen::MatrixXd KrylovSpectrum::leading_block(const Eigen::VectorXd& fvals, Eigen::Index k) const {
  const Eigen::Index ka = active_before(k);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
  if (ka == 0) return out;
  const auto top = v_.topRows(ka);
  Eigen::MatrixXd compact = top * fvals.asDiagonal() * top.transpose();
  compact = 0.5 * (compact + compact.transpose()).eval();
  for (Eigen::Index i = 0; i < ka; ++i) {
    for (Eigen::Index j = 0; j < ka; ++j) out(active_[static_cast<std::size_t>(i)], active_[static_cast<std::size_t>(j)]) = compact(i, j);
  }
  return out;
}

Eigen::MatrixXd KrylovSpectrum::leading_columns(const Eigen::VectorXd& fvals, Eigen::Index k) const {
  const Eigen::Index ka = active_before(k);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size_, k);
  if (ka == 0) return out;
  const Eigen::MatrixXd compact = v_ * fvals.asDiagonal() * v_.topRows(ka).transpose();
  for (Eigen::Index i = 0; i < compact.rows(); ++i) {
    for (Eigen::Index j = 0; j < ka; ++j) out(active_[static_cast<std::size_t>(i)], active_[static_cast<std::size_t>(j)]) = compact(i, j);
  }
  return out;
}

// ---------------------------------------------------------------------------

QuadratureRule quadrature_rule(const Eigen::Ref<const Eigen::VectorXd>& alpha, const Eigen::Ref<const Eigen::VectorXd>& beta) {
  if (beta.size() + 1 != alpha.size()) throw DimensionError("Jacobi matrix needs n diagonals and n-1 off-diagonals");
  QuadratureRule rule;
  if (alpha.size() == 1) {
    rule.nodes = alpha;
    rule.weights = Eigen::VectorXd::Ones(1);
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(alpha, beta, Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) throw Error("tridiagonal eigensolver did not converge");
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).cwiseAbs2().transpose();
  return rule;
}

Eigen::MatrixXd lanczos_quadratic_form(const BlockTridiagonal& t, const SpectralFunction& f, Eigen::Index depth) {
  if (depth < 0) depth = t.blocks();
  if (depth < 1) throw ContractError("quadratic form needs at least one block of T");
  const KrylovSpectrum s(t, depth);
  const Eigen::MatrixXd head = s.leading_block(s.values(f), t.block_size);
  Eigen::MatrixXd out = t.r1.transpose() * head * t.r1;
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd lanczos_apply(const BlockTridiagonal& t, const KrylovBasis& basis, const SpectralFunction& f,
                              Eigen::Index depth) {
  if (depth < 1 || depth > t.blocks()) throw ContractError("apply depth must lie in 1..blocks of T");
  if (basis.blocks() < depth) {
    throw ContractError("basis holds " + std::to_string(basis.blocks()) + " blocks, apply depth is " + std::to_string(depth));
  }
  const KrylovSpectrum s(t, depth);
  const Eigen::MatrixXd cols = s.leading_columns(s.values(f), t.block_size);
  return basis.leading(depth) * (cols * t.r1);
}

Eigen::MatrixXd krylov_aware_quadratic(const BlockTridiagonal& t, Eigen::Index q, const SpectralFunction& f) {
  if (q < 0 || q + 1 > t.blocks()) throw ContractError("Krylov-aware quadratic needs at least q + 1 blocks of T");
  const KrylovSpectrum s(t);
  return s.leading_block(s.values(f), (q + 1) * t.block_size);
}

// ---------------------------------------------------------------------------

FilterPolynomial chebyshev_filter(const std::function<double(double)>& target, double lower, double upper, int degree) {
  if (!(lower < upper)) throw ContractError("Chebyshev interval must satisfy lower < upper");
  if (degree < 1) throw ContractError("filter degree must be at least 1");

  FilterPolynomial p;
  p.lower = lower;
  p.upper = upper;
  const int nodes = degree + 1;
  std::vector<double> fx(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    const double t = std::cos(std::numbers::pi * (j + 0.5) / nodes);
    fx[static_cast<std::size_t>(j)] = target(0.5 * (upper - lower) * t + 0.5 * (upper + lower));
  }
  p.coeffs.assign(static_cast<std::size_t>(nodes), 0.0);
  for (int k = 0; k < nodes; ++k) {
    double acc = 0.0;
    for (int j = 0; j < nodes; ++j) acc += fx[static_cast<std::size_t>(j)] * std::cos(std::numbers::pi * k * (j + 0.5) / nodes);
    p.coeffs[static_cast<std::size_t>(k)] = 2.0 * acc / nodes;
  }
  p.coeffs[0] *= 0.5;

  const int grid = 10 * degree;
  double worst = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double x = lower + (upper - lower) * i / (grid - 1);
    worst = std::max(worst, std::abs(p(x) - target(x)));
  }
  p.max_error = worst;
  return p;
}

std::pair<double, double> filter_interval(const BlockTridiagonal& t, Eigen::Index q) {
  const KrylovSpectrum s(t, q);
  if (s.eigenvalues().size() == 0) throw DegenerateInputError("T_q has no active rows");
  const double lo = s.eigenvalues().minCoeff();
  const double hi = s.eigenvalues().maxCoeff();
  double spread = hi - lo;
  if (spread <= 0.0) spread = std::max(std::abs(hi), 1.0);
  return {lo - 0.01 * spread, hi + 0.01 * spread};
}

FilterPolynomial exp_filter(const BlockTridiagonal& t, Eigen::Index q, double beta0, int degree) {
  const auto [a, b] = filter_interval(t, q);
  return chebyshev_filter([beta0, a = a](double x) { return std::exp(-beta0 * (x - a)); }, a, b, degree);
}

Eigen::MatrixXd apply_filter(const BlockTridiagonal& t, const KrylovBasis& basis, const FilterPolynomial& p,
                             Eigen::Index q) {
  if (p.degree() > q) {
    throw ContractError("filter degree " + std::to_string(p.degree()) + " exceeds the stored depth q = " + std::to_string(q));
  }
  if (q < 1 || q > t.blocks() || basis.blocks() < q) throw ContractError("filter depth must lie within T and the basis");
  const Eigen::Index b = t.block_size;
  const Eigen::Index size = q * b;
  const double scale = 2.0 / (p.upper - p.lower);
  const double offset = (p.upper + p.lower) / (p.upper - p.lower);
  const Eigen::MatrixXd tq = t.assemble(q);
  auto mapped = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return scale * (tq * x) - offset * x; };

  const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(size, b);
  Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(size, b);
  Eigen::MatrixXd b2 = Eigen::MatrixXd::Zero(size, b);
  for (int k = p.degree(); k >= 1; --k) {
    Eigen::MatrixXd b0 = p.coeffs[static_cast<std::size_t>(k)] * e + 2.0 * mapped(b1) - b2;
    b2 = std::move(b1);
    b1 = std::move(b0);
  }
  const Eigen::MatrixXd y = p.coeffs[0] * e + mapped(b1) - b2;
  return basis.leading(q) * (y * t.r1);
}

}  // namespace ktrace
