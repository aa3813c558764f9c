#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "ktrace/spectral_function.hpp"

namespace ktrace {

/// Symmetric linear operator accessed only through block products.
///
/// `apply` validates the shape and adds k to the matvec counter for a d×k block.
/// Oracles are immutable after construction; concurrent applies are safe and the
/// counter stays exact.
class MatrixOracle {
 public:
  virtual ~MatrixOracle() = default;

  Eigen::Index dim() const noexcept { return dim_; }
  bool symmetric() const noexcept { return true; }

  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  std::uint64_t matvec_count() const noexcept { return count_.load(std::memory_order_relaxed); }

  /// Dense copy, for diagnostics and small reference computations. Not counted.
  Eigen::MatrixXd materialize() const;

 protected:
  explicit MatrixOracle(Eigen::Index dim);
  MatrixOracle(const MatrixOracle& other);
  MatrixOracle& operator=(const MatrixOracle& other);

  virtual void apply_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const = 0;

 private:
  Eigen::Index dim_;
  mutable std::atomic<std::uint64_t> count_{0};
};

class IdentityOperator final : public MatrixOracle {
 public:
  explicit IdentityOperator(Eigen::Index d) : MatrixOracle(d) {}

 protected:
  void apply_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const override;
};

class DiagonalOperator final : public MatrixOracle {
 public:
  explicit DiagonalOperator(Eigen::VectorXd eigenvalues);

  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

  /// sum_i f(lambda_i).
  double trace_of(const SpectralFunction& f) const;

 protected:
  void apply_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const override;

 private:
  Eigen::VectorXd eigenvalues_;
};

/// Dense symmetric matrix; the input is symmetrized on construction.
class DenseSymmetric final : public MatrixOracle {
 public:
  explicit DenseSymmetric(const Eigen::MatrixXd& a);

  const Eigen::MatrixXd& matrix() const noexcept { return a_; }

 protected:
  void apply_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const override;

 private:
  Eigen::MatrixXd a_;
};

struct Triplet {
  Eigen::Index row;
  Eigen::Index col;
  double value;
};

/// Symmetric matrix in compressed-row storage, both triangles stored.
class SparseSymmetric final : public MatrixOracle {
 public:
  /// Duplicates are summed. Throws ContractError if the pattern or values are not symmetric.
  static SparseSymmetric from_triplets(Eigen::Index d, std::vector<Triplet> entries);

  std::size_t nnz() const noexcept { return values_.size(); }
  const std::vector<std::int64_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<std::int64_t>& col_indices() const noexcept { return col_indices_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Entry (i, j), zero when not stored.
  double coeff(Eigen::Index i, Eigen::Index j) const;

  /// Sum of diagonal entries.
  double trace() const;

 protected:
  void apply_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const override;

 private:
  SparseSymmetric(Eigen::Index d, std::vector<std::int64_t> offsets, std::vector<std::int64_t> cols,
                  std::vector<double> vals);

  std::vector<std::int64_t> row_offsets_;
  std::vector<std::int64_t> col_indices_;
  std::vector<double> values_;
};

/// Isotropic XY spin chain with N spin-1/2 sites and a z field of strength h:
/// A = 2 sum_i (s^x_i s^x_{i+1} + s^y_i s^y_{i+1}) + h sum_i s^z_i, assembled as a real
/// 2^N × 2^N sparse matrix. Requires 2 <= N <= 24.
SparseSymmetric build_spin_chain(int spins, double field);

enum class SpectrumKind { slow, fast };

struct SyntheticSpectrum {
  DiagonalOperator op;
  Eigen::VectorXd f_values;
  double exact_trace;
};

/// Diagonal matrix whose f-values follow the algebraic (slow) or geometric (fast) profiles
/// f_i = 1 + ((i-1)/(d-1))^2 (kappa-1) or f_i = 1 + ((i-1)/(d-1)) (kappa-1) rho^(d-i).
SyntheticSpectrum build_synthetic_spectrum(SpectrumKind kind, Eigen::Index d, double kappa, double rho,
                                           const SpectralFunction& f);

/// diag(1^-c, 2^-c, ..., d^-c).
DiagonalOperator build_power_law_diagonal(Eigen::Index d, double exponent);

/// Reads a real coordinate Matrix Market file. General matrices are symmetrized as (A + A^T)/2;
/// symmetric ones are mirrored. Duplicate entries are summed.
SparseSymmetric load_matrix_market(const std::filesystem::path& path);
SparseSymmetric read_matrix_market(std::istream& in);

}  // namespace ktrace
