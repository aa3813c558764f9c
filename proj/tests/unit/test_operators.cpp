#include <doctest.h>

#include <cmath>
#include <sstream>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "ktrace/errors.hpp"
#include "ktrace/operators.hpp"

using namespace ktrace;
using ktrace::testing::random_matrix;

TEST_CASE("identity apply counts matvecs") {
  IdentityOperator id(3);
  const Eigen::MatrixXd e1 = Eigen::MatrixXd::Identity(3, 1);
  CHECK(id.apply(e1) == e1);
  CHECK(id.matvec_count() == 1);
  id.apply(Eigen::MatrixXd::Ones(3, 4));
  CHECK(id.matvec_count() == 5);
}

TEST_CASE("diagonal apply scales rows") {
  DiagonalOperator diag(Eigen::Vector3d(1, 2, 3));
  const Eigen::MatrixXd y = diag.apply(Eigen::MatrixXd::Ones(3, 2));
  for (int j = 0; j < 2; ++j) CHECK(y.col(j) == Eigen::Vector3d(1, 2, 3));
  CHECK(diag.matvec_count() == 2);
  CHECK(diag.trace_of(SpectralFunction::identity()) == 6.0);
}

TEST_CASE("dimension mismatch names the expected size") {
  DiagonalOperator diag(Eigen::Vector3d(1, 2, 3));
  try {
    diag.apply(Eigen::MatrixXd::Ones(4, 1));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("d = 3") != std::string::npos);
  }
  CHECK(diag.matvec_count() == 0);
}

TEST_CASE("two-site spin chain") {
  const SparseSymmetric a = build_spin_chain(2, 0.0);
  CHECK(a.nnz() == 2);
  CHECK(a.coeff(1, 2) == 4.0);
  CHECK(a.coeff(2, 1) == 4.0);
  Eigen::MatrixXd e2 = Eigen::MatrixXd::Zero(4, 1);
  e2(1) = 1.0;
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(4, 1);
  expect(2) = 4.0;
  CHECK(a.apply(e2) == expect);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.materialize());
  CHECK(eig.eigenvalues().isApprox(Eigen::Vector4d(-4, 0, 0, 4)));

  const SparseSymmetric ah = build_spin_chain(2, 0.3);
  CHECK(ah.coeff(0, 0) == doctest::Approx(0.6));
  CHECK(ah.coeff(1, 1) == 0.0);
  CHECK(ah.coeff(2, 2) == 0.0);
  CHECK(ah.coeff(3, 3) == doctest::Approx(-0.6));
  CHECK(ah.coeff(1, 2) == 4.0);
}

TEST_CASE("spin chain matches a dense complex Kronecker construction") {
  for (int spins = 2; spins <= 6; ++spins) {
    for (double h : {0.0, 0.3, -1.7}) {
      const SparseSymmetric a = build_spin_chain(spins, h);
      const Eigen::MatrixXcd dense = ktrace::testing::dense_spin_chain(spins, h);
      REQUIRE(dense.imag().cwiseAbs().maxCoeff() == 0.0);
      const Eigen::MatrixXd x = random_matrix(a.dim(), 3, 100 + spins);
      const Eigen::MatrixXd expect = dense.real() * x;
      const Eigen::MatrixXd got = a.apply(x);
      CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-13 * expect.cwiseAbs().maxCoeff());
      CHECK(std::abs(a.trace()) < 1e-12);
    }
  }
}

TEST_CASE("spin chain size guard") {
  CHECK_THROWS_AS(build_spin_chain(1, 0.0), CapacityError);
  CHECK_THROWS_AS(build_spin_chain(25, 0.0), CapacityError);
}

TEST_CASE("oracles are symmetric under random probes") {
  const SparseSymmetric a = build_spin_chain(7, 0.4);
  const Eigen::MatrixXd u = random_matrix(a.dim(), 1, 1);
  const Eigen::MatrixXd v = random_matrix(a.dim(), 1, 2);
  const double norm_est = a.apply(u).norm() / u.norm();
  const double lhs = u.col(0).dot(a.apply(v).col(0));
  const double rhs = v.col(0).dot(a.apply(u).col(0));
  CHECK(std::abs(lhs - rhs) <= 1e-12 * norm_est * u.norm() * v.norm());
}

TEST_CASE("CSR rows are sorted and duplicates summed") {
  const SparseSymmetric a = SparseSymmetric::from_triplets(3, {{0, 2, 1.0}, {2, 0, 1.0}, {0, 0, 1.0}, {0, 0, 2.0}, {1, 1, 5.0}});
  CHECK(a.coeff(0, 0) == 3.0);
  CHECK(a.coeff(0, 2) == 1.0);
  const auto& off = a.row_offsets();
  const auto& col = a.col_indices();
  for (std::size_t r = 0; r + 1 < off.size(); ++r) {
    for (auto k = off[r] + 1; k < off[r + 1]; ++k) CHECK(col[static_cast<std::size_t>(k - 1)] < col[static_cast<std::size_t>(k)]);
  }
  CHECK_THROWS_AS(SparseSymmetric::from_triplets(2, {{0, 1, 1.0}}), ContractError);
}

TEST_CASE("synthetic spectra") {
  const auto inv = SpectralFunction::inverse();
  auto s = build_synthetic_spectrum(SpectrumKind::slow, 2, 1000, 0.95, inv);
  CHECK(s.f_values(0) == 1.0);
  CHECK(s.f_values(1) == doctest::Approx(1000.0));
  CHECK(s.op.eigenvalues()(1) == doctest::Approx(1e-3));

  s = build_synthetic_spectrum(SpectrumKind::slow, 3, 1000, 0.95, inv);
  CHECK(s.f_values(1) == doctest::Approx(250.75));

  s = build_synthetic_spectrum(SpectrumKind::fast, 2, 1000, 0.95, inv);
  CHECK(s.f_values(0) == 1.0);
  CHECK(s.f_values(1) == doctest::Approx(1000.0));

  s = build_synthetic_spectrum(SpectrumKind::fast, 500, 1000, 0.95, inv);
  const Eigen::MatrixXd dense = s.op.materialize();
  const double dense_trace = dense.diagonal().cwiseInverse().sum();
  CHECK(std::abs(s.exact_trace - dense_trace) <= 1e-13 * std::abs(dense_trace));
  CHECK(std::abs(s.op.trace_of(inv) - s.exact_trace) <= 1e-13 * s.exact_trace);

  FilterPolynomial p;
  p.coeffs = {1.0, 1.0};
  CHECK_THROWS_AS(build_synthetic_spectrum(SpectrumKind::slow, 4, 10, 0.9, SpectralFunction::chebyshev(p)),
                  UnsupportedFunctionError);
}

TEST_CASE("power-law diagonal") {
  const DiagonalOperator a = build_power_law_diagonal(4, 1.5);
  CHECK(a.eigenvalues()(0) == 1.0);
  CHECK(a.eigenvalues()(3) == doctest::Approx(std::pow(4.0, -1.5)));
}

TEST_CASE("matrix market general files are symmetrized") {
  std::istringstream in("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 1\n1 2 2.0\n");
  const SparseSymmetric a = read_matrix_market(in);
  CHECK(a.coeff(0, 1) == 1.0);
  CHECK(a.coeff(1, 0) == 1.0);
  CHECK(a.coeff(0, 0) == 0.0);
}

TEST_CASE("matrix market symmetric files are mirrored") {
  std::istringstream in("%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 4\n3 1 -2\n2 2 1\n");
  const SparseSymmetric a = read_matrix_market(in);
  const Eigen::MatrixXd dense = a.materialize();
  Eigen::Matrix3d expect;
  expect << 4, 0, -2, 0, 1, 0, -2, 0, 0;
  CHECK(dense == expect);
}

TEST_CASE("matrix market integer fields and duplicates") {
  std::istringstream in("%%MatrixMarket matrix coordinate integer symmetric\n2 2 3\n1 1 1\n1 1 2\n2 1 5\n");
  const SparseSymmetric a = read_matrix_market(in);
  CHECK(a.coeff(0, 0) == 3.0);
  CHECK(a.coeff(0, 1) == 5.0);
}

TEST_CASE("matrix market errors") {
  {
    std::istringstream in("%%MatrixMarket matrx coordinate real general\n2 2 0\n");
    try {
      read_matrix_market(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
      CHECK(std::string(e.what()).rfind("line 1:", 0) == 0);
    }
  }
  {
    std::istringstream in("%%MatrixMarket matrix coordinate complex general\n2 2 1\n1 1 1 0\n");
    CHECK_THROWS_AS(read_matrix_market(in), ParseError);
  }
  {
    std::istringstream in("%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n");
    CHECK_THROWS_AS(read_matrix_market(in), ParseError);
  }
  {
    std::istringstream in("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n");
    try {
      read_matrix_market(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
  }
  CHECK_THROWS(load_matrix_market("/nonexistent/file.mtx"));
}

TEST_CASE("counter is exact under concurrent applies") {
  const SparseSymmetric a = build_spin_chain(8, 0.1);
  const Eigen::MatrixXd x = random_matrix(a.dim(), 2, 5);
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) pool.emplace_back([&] { for (int i = 0; i < 25; ++i) a.apply(x); });
  for (auto& t : pool) t.join();
  CHECK(a.matvec_count() == 200);
}
