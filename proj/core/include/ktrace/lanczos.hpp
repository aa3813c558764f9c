#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ktrace/operators.hpp"
#include "ktrace/stats.hpp"

namespace ktrace {

/// Block-tridiagonal Jacobi matrix produced by block Lanczos.
///
/// diag[j] holds M_{j+1}; offdiag[j] holds R_{j+2}, the factor coupling block j+1 to block
/// j+2. After k iterations there are k diagonal blocks and k off-diagonal blocks: the last
/// one, R_{k+1}, is the residual factor of the recurrence and is not part of T_k itself.
struct BlockTridiagonal {
  Eigen::Index block_size = 0;
  std::vector<Eigen::MatrixXd> diag;
  std::vector<Eigen::MatrixXd> offdiag;
  /// Factor of the starting block, Z = Q_1 R_1.
  Eigen::MatrixXd r1;
  /// Sorted global column indices whose basis vector is zero because the space was exhausted.
  /// Their rows and columns of T are exactly zero and carry no spectral information.
  std::vector<Eigen::Index> inactive;

  Eigen::Index blocks() const noexcept { return static_cast<Eigen::Index>(diag.size()); }

  /// Dense symmetric kb×kb matrix T_k for the leading k blocks (all blocks when k < 0).
  Eigen::MatrixXd assemble(Eigen::Index k = -1) const;
};

/// Orthonormal block Krylov basis [Q_1, ..., Q_j] stored as one d×(j·b) matrix.
struct KrylovBasis {
  Eigen::Index block_size = 0;
  Eigen::MatrixXd columns;

  Eigen::Index dim() const noexcept { return columns.rows(); }
  Eigen::Index blocks() const noexcept { return block_size == 0 ? 0 : columns.cols() / block_size; }
  auto block(Eigen::Index j) const { return columns.middleCols(j * block_size, block_size); }
  /// First k blocks.
  auto leading(Eigen::Index k) const { return columns.leftCols(k * block_size); }

  /// max |Q^T Q - I| entry.
  double orthogonality_error() const;
};

struct QrcpResult {
  Eigen::MatrixXd q;  ///< d×b, orthonormal in its first `rank` columns
  Eigen::MatrixXd r;  ///< b×b with the pivoting folded back (Z = Q R); rows past `rank` are zero
  Eigen::Index rank = 0;
};

/// Householder QR with column pivoting. The numerical rank counts |R_ii| above
/// max(d, b) · u · max(|R_11|, reference_scale).
QrcpResult qrcp(const Eigen::Ref<const Eigen::MatrixXd>& z, double reference_scale = 0.0);

/// Incremental block Lanczos with selective reorthogonalization and rank-deficient block repair.
///
/// Iterations 2..reorth_depth are fully reorthogonalized (two classical Gram-Schmidt passes)
/// against the stored basis. Only the first `stored_blocks` basis blocks are kept; later
/// blocks live only while the three-term recurrence needs them. When a new block loses rank
/// its dependent columns are replaced by fresh Gaussian directions orthogonal to everything
/// available, and the matching rows of R are zeroed, so the block size never shrinks.
class BlockLanczos {
 public:
  BlockLanczos(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& start, Eigen::Index reorth_depth,
               Eigen::Index stored_blocks, std::uint64_t repair_seed = 0);

  /// One iteration: b matvecs.
  void step();

  Eigen::Index iterations() const noexcept { return t_.blocks(); }
  Eigen::Index block_size() const noexcept { return b_; }
  const BlockTridiagonal& tridiagonal() const noexcept { return t_; }
  /// Stored basis blocks (at most `stored_blocks`).
  KrylovBasis basis() const;
  /// Columns replaced by fresh directions so far.
  Eigen::Index repairs() const noexcept { return repairs_; }
  /// Columns that could not be replaced because the stored basis already spans the space.
  Eigen::Index exhausted_columns() const noexcept { return exhausted_; }

 private:
  void repair(Eigen::MatrixXd& q_next, Eigen::Index rank, Eigen::Index block_index);

  const MatrixOracle& a_;
  Eigen::Index d_;
  Eigen::Index b_;
  Eigen::Index reorth_depth_;
  Eigen::Index stored_limit_;
  SampleStream repair_stream_;
  std::uint64_t repair_counter_ = 0;

  BlockTridiagonal t_;
  Eigen::MatrixXd stored_;  // grows up to d × (stored_limit · b); first stored_count_ blocks valid
  Eigen::Index stored_count_ = 0;
  Eigen::MatrixXd q_prev_;
  Eigen::MatrixXd q_cur_;
  Eigen::Index repairs_ = 0;
  Eigen::Index exhausted_ = 0;
};

struct LanczosResult {
  BlockTridiagonal t;   ///< q + n blocks
  KrylovBasis basis;    ///< q + 1 blocks
  Eigen::Index repairs = 0;
};

/// Runs q + n block Lanczos iterations from `start`, reorthogonalizing during the first q and
/// keeping the first q + 1 basis blocks. Throws DegenerateInputError for a zero start block.
LanczosResult block_lanczos(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& start, Eigen::Index q,
                            Eigen::Index n, std::uint64_t repair_seed = 0);

/// ||A Q_q - Q_q T_q - Q_{q+1} R_{q+1} E_q^T||_F with q = basis.blocks() - 1. Uses q·b matvecs.
double recurrence_residual(const MatrixOracle& a, const BlockTridiagonal& t, const KrylovBasis& basis);

/// Independent scalar Lanczos recurrences (no reorthogonalization), one per column of Y,
/// advanced in lockstep so each iteration is a single block apply.
struct ScalarLanczosBatch {
  Eigen::MatrixXd alpha;        ///< n × w diagonals
  Eigen::MatrixXd beta;         ///< (n-1) × w off-diagonals
  Eigen::VectorXd start_norms;  ///< ||y_i||
};

/// n iterations on each column: n·w matvecs. A zero column yields alpha = beta = 0.
ScalarLanczosBatch scalar_lanczos(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& y, Eigen::Index n,
                                  std::uint64_t repair_seed, std::uint64_t first_sample = 0);

}  // namespace ktrace
