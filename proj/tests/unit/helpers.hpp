#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ktrace/operators.hpp"

namespace ktrace::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(gen);
  return m;
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index d, std::uint64_t seed) {
  const Eigen::MatrixXd g = random_matrix(d, d, seed);
  return 0.5 * (g + g.transpose()) / std::sqrt(static_cast<double>(d));
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index d, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(d, d, seed));
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& a, int k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (int i = 0; i < k; ++i) out = out * a;
  return out;
}

// sum_k c_k A^k by Horner.
inline Eigen::MatrixXd matrix_polynomial(const Eigen::MatrixXd& a, const std::vector<double>& c) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    acc = acc * a;
    acc.diagonal().array() += *it;
  }
  return acc;
}

inline Eigen::MatrixXd orth(const Eigen::MatrixXd& x, double tol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > tol * s(0)) ++r;
  return svd.matrixU().leftCols(r);
}

// sin of the largest principal angle between two subspaces of equal dimension.
inline double max_principal_sine(const Eigen::MatrixXd& u1, const Eigen::MatrixXd& u2) {
  const Eigen::MatrixXd resid = u2 - u1 * (u1.transpose() * u2);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Dense complex construction of 2 sum (sx sx + sy sy) + h sum sz with Pauli matrices.
inline Eigen::MatrixXcd dense_spin_chain(int spins, double field) {
  using C = std::complex<double>;
  Eigen::MatrixXcd sx(2, 2), sy(2, 2), sz(2, 2), id = Eigen::MatrixXcd::Identity(2, 2);
  sx << 0, 1, 1, 0;
  sy << 0, C(0, -1), C(0, 1), 0;
  sz << 1, 0, 0, -1;
  auto site_op = [&](const Eigen::MatrixXcd& op, int site) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int s = 0; s < spins; ++s) out = kron(out, s == site ? op : id);
    return out;
  };
  const Eigen::Index d = Eigen::Index{1} << spins;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i + 1 < spins; ++i) {
    a += 2.0 * (site_op(sx, i) * site_op(sx, i + 1) + site_op(sy, i) * site_op(sy, i + 1));
  }
  for (int i = 0; i < spins; ++i) a += field * site_op(sz, i);
  return a;
}

inline SparseSymmetric random_sparse(Eigen::Index d, int per_row, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<Eigen::Index> col(0, d - 1);
  std::normal_distribution<double> val;
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < d; ++i) {
    t.push_back({i, i, val(gen)});
    for (int k = 0; k < per_row; ++k) {
      const Eigen::Index j = col(gen);
      const double v = val(gen);
      t.push_back({i, j, v});
      t.push_back({j, i, v});
    }
  }
  return SparseSymmetric::from_triplets(d, std::move(t));
}

}  // namespace ktrace::testing
