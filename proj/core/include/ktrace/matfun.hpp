#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ktrace/lanczos.hpp"
#include "ktrace/spectral_function.hpp"

namespace ktrace {

/// f(T) = V f(D) V^T for a small symmetric T, symmetrized.
/// Throws DomainError naming the first eigenvalue outside the domain of f.
Eigen::MatrixXd eval_matrix_function(const Eigen::Ref<const Eigen::MatrixXd>& t, const SpectralFunction& f);

/// f applied to every entry of `x`.
Eigen::VectorXd eval_values(const Eigen::Ref<const Eigen::VectorXd>& x, const SpectralFunction& f);

/// Eigendecomposition of the leading blocks of a block-tridiagonal T with inactive (zero)
/// rows removed, cached so many functions can reuse it.
///
/// "Leading k columns" always refers to the original indexing of T; inactive positions
/// contribute nothing.
class KrylovSpectrum {
 public:
  explicit KrylovSpectrum(const BlockTridiagonal& t, Eigen::Index blocks = -1);
  /// Plain symmetric matrix, every index active.
  explicit KrylovSpectrum(const Eigen::Ref<const Eigen::MatrixXd>& t);

  Eigen::Index size() const noexcept { return size_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return theta_; }

  /// f at the eigenvalues.
  Eigen::VectorXd values(const SpectralFunction& f) const { return eval_values(theta_, f); }

  /// tr([f(T)]_{1:k,1:k}).
  double leading_trace(const Eigen::VectorXd& fvals, Eigen::Index k) const;
  /// ||[f(T)]_{:,1:k}||_F^2.
  double leading_columns_norm2(const Eigen::VectorXd& fvals, Eigen::Index k) const;
  /// [f(T)]_{1:k,1:k}, k×k.
  Eigen::MatrixXd leading_block(const Eigen::VectorXd& fvals, Eigen::Index k) const;
  /// [f(T)]_{:,1:k}, size()×k.
  Eigen::MatrixXd leading_columns(const Eigen::VectorXd& fvals, Eigen::Index k) const;

 private:
  void decompose(const Eigen::MatrixXd& compressed);
  Eigen::Index active_before(Eigen::Index k) const;

  Eigen::Index size_ = 0;
  std::vector<Eigen::Index> active_;  // original index of each compressed row
  Eigen::VectorXd theta_;
  Eigen::MatrixXd v_;  // compressed eigenvectors
};

/// Gauss quadrature rule of a scalar Jacobi matrix: nodes theta_j and weights (e_1^T v_j)^2.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  /// [f(T)]_{11} = sum_j f(theta_j) w_j.
  double first_entry(const Eigen::VectorXd& fvals) const { return fvals.dot(weights); }
  /// ||f(T) e_1||^2 = sum_j f(theta_j)^2 w_j.
  double first_column_norm2(const Eigen::VectorXd& fvals) const { return fvals.cwiseAbs2().dot(weights); }
};

QuadratureRule quadrature_rule(const Eigen::Ref<const Eigen::VectorXd>& alpha, const Eigen::Ref<const Eigen::VectorXd>& beta);

/// R_1^T [f(T_q)]_{1:b,1:b} R_1, approximating Z^T f(A) Z. depth < 0 uses every block of T.
Eigen::MatrixXd lanczos_quadratic_form(const BlockTridiagonal& t, const SpectralFunction& f, Eigen::Index depth = -1);

/// Q_q [f(T_q)]_{:,1:b} R_1, approximating f(A) Z. The basis must hold at least q blocks.
Eigen::MatrixXd lanczos_apply(const BlockTridiagonal& t, const KrylovBasis& basis, const SpectralFunction& f,
                              Eigen::Index depth);

/// [f(T_{q+n})]_{1:(q+1)b, 1:(q+1)b}, approximating Q_{q+1}^T f(A) Q_{q+1}.
Eigen::MatrixXd krylov_aware_quadratic(const BlockTridiagonal& t, Eigen::Index q, const SpectralFunction& f);

/// Degree-`degree` interpolant of `target` at the Chebyshev points of [lower, upper].
FilterPolynomial chebyshev_filter(const std::function<double(double)>& target, double lower, double upper, int degree);

/// [lambda_min - 0.01 s, lambda_max + 0.01 s] for the eigenvalues of T_q, s = spread.
std::pair<double, double> filter_interval(const BlockTridiagonal& t, Eigen::Index q);

/// Chebyshev interpolant of x -> exp(-beta0 (x - a)) on the filter interval [a, b] of T_q.
FilterPolynomial exp_filter(const BlockTridiagonal& t, Eigen::Index q, double beta0, int degree);

/// Q_q [p(T_q)]_{:,1:b} R_1: the filtered start block for the next restart cycle.
/// No matvecs. Throws ContractError when deg p > q.
Eigen::MatrixXd apply_filter(const BlockTridiagonal& t, const KrylovBasis& basis, const FilterPolynomial& p,
                             Eigen::Index q);

}  // namespace ktrace
