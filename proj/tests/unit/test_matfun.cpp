#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ktrace/errors.hpp"
#include "ktrace/matfun.hpp"

using namespace ktrace;
using ktrace::testing::matrix_power;
using ktrace::testing::random_matrix;
using ktrace::testing::random_sparse;
using ktrace::testing::random_symmetric;

namespace {

double rel(const Eigen::MatrixXd& got, const Eigen::MatrixXd& expect) { return (got - expect).norm() / expect.norm(); }

Eigen::MatrixXd dense_exp_neg(const Eigen::MatrixXd& a, double beta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd fx = (-beta * eig.eigenvalues().array()).exp();
  return eig.eigenvectors() * fx.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

TEST_CASE("matrix functions of small matrices") {
  const auto expf = SpectralFunction::exp_neg_beta(-1.0);
  CHECK((eval_matrix_function(Eigen::MatrixXd::Zero(2, 2), expf) - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);

  Eigen::Matrix2d swap;
  swap << 0, 1, 1, 0;
  Eigen::Matrix2d expect;
  expect << std::cosh(1.0), std::sinh(1.0), std::sinh(1.0), std::cosh(1.0);
  CHECK((eval_matrix_function(swap, expf) - expect).cwiseAbs().maxCoeff() < 1e-14);

  const Eigen::MatrixXd t = random_symmetric(9, 3);
  CHECK((eval_matrix_function(t, SpectralFunction::monomial(2)) - t * t).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd ft = eval_matrix_function(t, SpectralFunction::exp_neg_beta(0.7));
  CHECK((ft - ft.transpose()).isZero(0.0));
}

TEST_CASE("domain errors report the eigenvalue") {
  Eigen::Matrix2d t;
  t << -1, 0, 0, 2;
  try {
    eval_matrix_function(t, SpectralFunction::log());
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.value() == doctest::Approx(-1.0));
  }
  CHECK_THROWS_AS(eval_matrix_function(t, SpectralFunction::sqrt()), DomainError);
}

TEST_CASE("matrix functions commute with orthogonal similarity") {
  const Eigen::MatrixXd t = random_symmetric(12, 5);
  const Eigen::MatrixXd v = ktrace::testing::random_orthogonal(12, 6);
  const auto f = SpectralFunction::exp_neg_beta(1.3);
  const Eigen::MatrixXd lhs = eval_matrix_function(v.transpose() * t * v, f);
  const Eigen::MatrixXd rhs = v.transpose() * eval_matrix_function(t, f) * v;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("quadratic form approximation") {
  const SparseSymmetric a = random_sparse(64, 2, 7);
  const Eigen::MatrixXd dense = a.materialize();
  const Eigen::MatrixXd z = random_matrix(64, 2, 8);
  const LanczosResult res = block_lanczos(a, z, 6, 1);

  CHECK(rel(lanczos_quadratic_form(res.t, SpectralFunction::constant(1.0), 6), z.transpose() * z) < 1e-13);
  CHECK(rel(lanczos_quadratic_form(res.t, SpectralFunction::identity(), 1), z.transpose() * dense * z) < 1e-12);
  const Eigen::MatrixXd expect = z.transpose() * matrix_power(dense, 9) * z;
  CHECK(rel(lanczos_quadratic_form(res.t, SpectralFunction::monomial(9), 6), expect) < 1e-8);
  // Degree 2q is past the exactness range.
  const Eigen::MatrixXd past = z.transpose() * matrix_power(dense, 12) * z;
  CHECK(rel(lanczos_quadratic_form(res.t, SpectralFunction::monomial(12), 6), past) > 1e-6);
}

TEST_CASE("apply approximation") {
  const Eigen::MatrixXd dense = random_symmetric(128, 9);
  DenseSymmetric a(dense);
  const Eigen::MatrixXd z = random_matrix(128, 2, 10);
  const LanczosResult res = block_lanczos(a, z, 40, 1);

  CHECK(rel(lanczos_apply(res.t, res.basis, SpectralFunction::constant(1.0), 40), z) < 1e-13);
  CHECK(rel(lanczos_apply(res.t, res.basis, SpectralFunction::identity(), 2), dense * z) < 1e-12);
  const Eigen::MatrixXd expect = dense_exp_neg(dense, 1.0) * z;
  CHECK(rel(lanczos_apply(res.t, res.basis, SpectralFunction::exp_neg_beta(1.0), 40), expect) < 1e-10);
  CHECK_THROWS_AS(lanczos_apply(res.t, res.basis, SpectralFunction::identity(), 45), ContractError);
}

TEST_CASE("Krylov-aware quadratic form") {
  const Eigen::MatrixXd dense = random_symmetric(256, 11);
  DenseSymmetric a(dense);
  const Eigen::Index b = 2, q = 5, n = 8;
  const LanczosResult res = block_lanczos(a, random_matrix(256, b, 12), q, n);
  const Eigen::MatrixXd qbar = res.basis.columns;
  REQUIRE(qbar.cols() == (q + 1) * b);

  const Eigen::MatrixXd one = krylov_aware_quadratic(res.t, q, SpectralFunction::constant(1.0));
  CHECK((one - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(rel(krylov_aware_quadratic(res.t, q, SpectralFunction::identity()), qbar.transpose() * dense * qbar) < 1e-10);
  const Eigen::MatrixXd expect = qbar.transpose() * matrix_power(dense, 15) * qbar;
  CHECK(rel(krylov_aware_quadratic(res.t, q, SpectralFunction::monomial(15)), expect) < 1e-7);
}

TEST_CASE("polynomial exactness ladder") {
  for (std::uint64_t trial = 0; trial < 4; ++trial) {
    const Eigen::Index d = 60 + 15 * static_cast<Eigen::Index>(trial);
    const Eigen::MatrixXd dense = random_symmetric(d, 100 + trial);
    DenseSymmetric a(dense);
    const Eigen::Index b = 1 + static_cast<Eigen::Index>(trial % 3), q = 4, n = 5;
    const Eigen::MatrixXd z = random_matrix(d, b, 200 + trial);
    const LanczosResult res = block_lanczos(a, z, q, n);
    const Eigen::MatrixXd qbar = res.basis.columns;
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      const auto f = SpectralFunction::monomial(deg);
      const Eigen::MatrixXd ad = matrix_power(dense, deg);
      if (deg <= q - 1) CHECK(rel(lanczos_apply(res.t, res.basis, f, q), ad * z) < 1e-7);
      if (deg <= 2 * q - 1) CHECK(rel(lanczos_quadratic_form(res.t, f, q), z.transpose() * ad * z) < 1e-7);
      CHECK(rel(krylov_aware_quadratic(res.t, q, f), qbar.transpose() * ad * qbar) < 1e-7);
    }
  }
}

TEST_CASE("Krylov-aware low-rank approximation beats Rayleigh-Ritz on f") {
  // Dominant eigenvalues of A (large x) are the smallest of exp(-x).
  Eigen::VectorXd lambda(200);
  for (int i = 0; i < 200; ++i) lambda(i) = 0.05 * i;
  DiagonalOperator a(lambda);
  const auto f = SpectralFunction::exp_neg_beta(2.0);
  const Eigen::MatrixXd fa = eval_values(lambda, f).asDiagonal();
  const Eigen::Index q = 4, b = 2;
  const LanczosResult res = block_lanczos(a, random_matrix(200, b, 3), q, 10);
  const Eigen::MatrixXd qbar = res.basis.columns;
  const Eigen::MatrixXd ka = qbar * krylov_aware_quadratic(res.t, q, f) * qbar.transpose();
  const Eigen::MatrixXd rr = qbar * eval_matrix_function(qbar.transpose() * a.materialize() * qbar, f) * qbar.transpose();
  CHECK((fa - ka).norm() <= (fa - rr).norm());
}

TEST_CASE("Chebyshev interpolation") {
  const FilterPolynomial lin = chebyshev_filter([](double x) { return x; }, -3.0, 5.0, 1);
  for (double x : {-3.0, 0.0, 1.7, 5.0}) CHECK(lin(x) == doctest::Approx(x).epsilon(1e-14));

  const FilterPolynomial e = chebyshev_filter([](double x) { return std::exp(-x); }, 0.0, 1.0, 8);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = i / 99.0;
    worst = std::max(worst, std::abs(e(x) - std::exp(-x)));
  }
  CHECK(worst <= 1e-8);
  CHECK(e.max_error <= 1e-8);
  CHECK(e.degree() == 8);

  const FilterPolynomial one = chebyshev_filter([](double) { return 1.0; }, 2.0, 4.0, 5);
  CHECK(one.coeffs[0] == doctest::Approx(1.0).epsilon(1e-15));
  for (int k = 1; k <= 5; ++k) CHECK(std::abs(one.coeffs[static_cast<std::size_t>(k)]) < 1e-15);

  CHECK_THROWS_AS(chebyshev_filter([](double x) { return x; }, 1.0, 1.0, 3), ContractError);
  CHECK_THROWS_AS(chebyshev_filter([](double x) { return x; }, 0.0, 1.0, 0), ContractError);
}

TEST_CASE("restart filter application") {
  const SparseSymmetric a = random_sparse(90, 2, 17);
  const Eigen::MatrixXd omega = random_matrix(90, 3, 18);
  const LanczosResult res = block_lanczos(a, omega, 6, 0);
  const std::uint64_t before = a.matvec_count();

  const auto [lo, hi] = filter_interval(res.t, 6);
  const FilterPolynomial one = chebyshev_filter([](double) { return 1.0; }, lo, hi, 1);
  CHECK(rel(apply_filter(res.t, res.basis, one, 6), omega) < 1e-12);

  const FilterPolynomial lin = chebyshev_filter([](double x) { return x; }, lo, hi, 1);
  const Eigen::MatrixXd direct = a.materialize() * omega;
  CHECK(rel(apply_filter(res.t, res.basis, lin, 6), direct) < 1e-12);

  // Degree q - 1 polynomial through the stored recurrence matches p(A) Omega.
  const FilterPolynomial cubic = chebyshev_filter([](double x) { return x * x * x - 2 * x; }, lo, hi, 5);
  const Eigen::MatrixXd dense = a.materialize();
  CHECK(rel(apply_filter(res.t, res.basis, cubic, 6), (dense * dense * dense - 2 * dense) * omega) < 1e-10);
  CHECK(a.matvec_count() == before);

  const FilterPolynomial high = chebyshev_filter([](double x) { return std::exp(-x); }, lo, hi, 7);
  CHECK_THROWS_AS(apply_filter(res.t, res.basis, high, 6), ContractError);

  const FilterPolynomial ef = exp_filter(res.t, 6, 0.5, 6);
  CHECK(ef.degree() == 6);
  CHECK(ef.lower < lo + 1e-9);
  CHECK(std::abs(ef(ef.lower) - 1.0) <= ef.max_error + 1e-12);
  CHECK(ef.max_error < 1e-3);
}

TEST_CASE("Krylov spectrum skips inactive rows") {
  Eigen::VectorXd lambda(6);
  lambda << 1, 2, 3, 4, 5, 6;
  DiagonalOperator a(lambda);
  const LanczosResult res = block_lanczos(a, random_matrix(6, 2, 4), 3, 2);
  REQUIRE(!res.t.inactive.empty());
  const KrylovSpectrum s(res.t);
  const auto logf = SpectralFunction::log();
  const Eigen::VectorXd fv = s.values(logf);  // no zero eigenvalue, so log is defined
  CHECK(s.leading_trace(fv, 8) == doctest::Approx(lambda.array().log().sum()).epsilon(1e-10));
  CHECK(s.leading_block(fv, 8).rows() == 8);
}
