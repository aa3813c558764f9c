#include "ktrace/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/QR>

#include "ktrace/errors.hpp"

namespace ktrace {

namespace {

constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;
// A fresh direction that keeps less than this fraction of its norm after projection lies in
// the span of the stored basis: the space is exhausted.
constexpr double kExhaustedRatio = 1e-10;

}  // namespace

Eigen::MatrixXd BlockTridiagonal::assemble(Eigen::Index k) const {
  if (k < 0) k = blocks();
  if (k > blocks()) throw ContractError("requested " + std::to_string(k) + " blocks of a " + std::to_string(blocks()) + "-block T");
  const Eigen::Index b = block_size;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k * b, k * b);
  for (Eigen::Index j = 0; j < k; ++j) {
    t.block(j * b, j * b, b, b) = diag[static_cast<std::size_t>(j)];
    if (j + 1 < k) {
      const auto& r = offdiag[static_cast<std::size_t>(j)];
      t.block((j + 1) * b, j * b, b, b) = r;
      t.block(j * b, (j + 1) * b, b, b) = r.transpose();
    }
  }
  return t;
}

double KrylovBasis::orthogonality_error() const {
  if (columns.cols() == 0) return 0.0;
  const Eigen::MatrixXd gram = columns.transpose() * columns;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

QrcpResult qrcp(const Eigen::Ref<const Eigen::MatrixXd>& z, double reference_scale) {
  const Eigen::Index d = z.rows();
  const Eigen::Index b = z.cols();
  if (d < b) throw ContractError("qrcp needs at least as many rows as columns");

  QrcpResult out;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  Eigen::MatrixXd r_piv = qr.matrixR().topRows(b).triangularView<Eigen::Upper>();
  out.q = qr.householderQ() * Eigen::MatrixXd::Identity(d, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    if (r_piv(i, i) < 0.0) {
      r_piv.row(i) *= -1.0;
      out.q.col(i) *= -1.0;
    }
  }

  const double r11 = b > 0 ? std::abs(r_piv(0, 0)) : 0.0;
  const double tol = static_cast<double>(std::max(d, b)) * kUnitRoundoff * std::max(r11, reference_scale);
  Eigen::Index rank = 0;
  while (rank < b && std::abs(r_piv(rank, rank)) > tol) ++rank;
  out.rank = rank;

  // Z P = Q R  =>  Z = Q (R P^T).
  out.r = r_piv * qr.colsPermutation().transpose();
  if (rank < b) out.r.bottomRows(b - rank).setZero();
  return out;
}

// ---------------------------------------------------------------------------

BlockLanczos::BlockLanczos(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& start,
                           Eigen::Index reorth_depth, Eigen::Index stored_blocks, std::uint64_t repair_seed)
    : a_(a),
      d_(a.dim()),
      b_(start.cols()),
      reorth_depth_(reorth_depth),
      stored_limit_(std::max<Eigen::Index>(stored_blocks, 1)),
      repair_stream_(repair_seed) {
  if (start.rows() != d_) {
    throw DimensionError("start block has " + std::to_string(start.rows()) + " rows, operator expects d = " +
                         std::to_string(d_));
  }
  if (b_ < 1) throw ContractError("block Lanczos needs a block size of at least 1");
  if (b_ > d_) throw ContractError("block size exceeds the operator dimension");
  if (start.isZero(0.0)) throw DegenerateInputError("block Lanczos start block is zero");

  t_.block_size = b_;
  stored_.resize(d_, std::min<Eigen::Index>(stored_limit_, 8) * b_);

  QrcpResult qr = qrcp(start);
  if (qr.rank < b_) repair(qr.q, qr.rank, 0);
  t_.r1 = std::move(qr.r);
  q_cur_ = std::move(qr.q);
  stored_.leftCols(b_) = q_cur_;
  stored_count_ = 1;
}

void BlockLanczos::repair(Eigen::MatrixXd& q_next, Eigen::Index rank, Eigen::Index block_index) {
  const auto stored = stored_.leftCols(stored_count_ * b_);
  auto project_out = [&](Eigen::VectorXd& v, Eigen::Index filled) {
    if (stored.cols() > 0) v.noalias() -= stored * (stored.transpose() * v);
    if (q_prev_.cols() > 0) v.noalias() -= q_prev_ * (q_prev_.transpose() * v);
    if (q_cur_.cols() > 0) v.noalias() -= q_cur_ * (q_cur_.transpose() * v);
    if (filled > 0) {
      const auto head = q_next.leftCols(filled);
      v.noalias() -= head * (head.transpose() * v);
    }
  };

  for (Eigen::Index c = rank; c < b_; ++c) {
    Eigen::VectorXd v = repair_stream_.vector(d_, repair_counter_++);
    const double before = v.norm();
    project_out(v, c);
    project_out(v, c);
    const double after = v.norm();
    if (after <= kExhaustedRatio * before) {
      q_next.col(c).setZero();
      t_.inactive.push_back(block_index * b_ + c);
      ++exhausted_;
    } else {
      q_next.col(c) = v / after;
      ++repairs_;
    }
  }
}

void BlockLanczos::step() {
  const Eigen::Index k = iterations() + 1;

  Eigen::MatrixXd w = a_.apply(q_cur_);
  const double reference = w.norm();
  if (k > 1) w.noalias() -= q_prev_ * t_.offdiag.back().transpose();

  Eigen::MatrixXd m = q_cur_.transpose() * w;
  w.noalias() -= q_cur_ * m;

  if (k >= 2 && k <= reorth_depth_) {
    const auto stored = stored_.leftCols(stored_count_ * b_);
    for (int pass = 0; pass < 2; ++pass) w.noalias() -= stored * (stored.transpose() * w);
  }

  QrcpResult qr = qrcp(w, reference);
  if (qr.rank < b_) repair(qr.q, qr.rank, k);

  t_.diag.push_back(0.5 * (m + m.transpose()));
  t_.offdiag.push_back(std::move(qr.r));

  q_prev_ = std::move(q_cur_);
  q_cur_ = std::move(qr.q);
  if (stored_count_ < stored_limit_) {
    if (stored_.cols() < (stored_count_ + 1) * b_) {
      const Eigen::Index grown = std::min(stored_limit_, 2 * stored_count_);
      stored_.conservativeResize(Eigen::NoChange, grown * b_);
    }
    stored_.middleCols(stored_count_ * b_, b_) = q_cur_;
    ++stored_count_;
  }
}

KrylovBasis BlockLanczos::basis() const {
  return KrylovBasis{b_, stored_.leftCols(stored_count_ * b_)};
}

LanczosResult block_lanczos(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& start, Eigen::Index q,
                            Eigen::Index n, std::uint64_t repair_seed) {
  if (q < 0 || n < 0 || q + n < 1) throw ContractError("block Lanczos needs q >= 0, n >= 0 and q + n >= 1");
  BlockLanczos lanczos(a, start, q, q + 1, repair_seed);
  for (Eigen::Index k = 0; k < q + n; ++k) lanczos.step();
  return LanczosResult{lanczos.tridiagonal(), lanczos.basis(), lanczos.repairs()};
}

double recurrence_residual(const MatrixOracle& a, const BlockTridiagonal& t, const KrylovBasis& basis) {
  const Eigen::Index q = basis.blocks() - 1;
  if (q < 1) throw ContractError("recurrence residual needs at least two basis blocks");
  if (t.blocks() < q) throw ContractError("T has fewer blocks than the basis");
  const Eigen::Index b = basis.block_size;
  const auto qq = basis.leading(q);
  Eigen::MatrixXd e = a.apply(qq);
  e.noalias() -= qq * t.assemble(q);
  e.rightCols(b).noalias() -= basis.block(q) * t.offdiag[static_cast<std::size_t>(q - 1)];
  return e.norm();
}

// ---------------------------------------------------------------------------

ScalarLanczosBatch scalar_lanczos(const MatrixOracle& a, const Eigen::Ref<const Eigen::MatrixXd>& y, Eigen::Index n,
                                  std::uint64_t repair_seed, std::uint64_t first_sample) {
  const Eigen::Index d = a.dim();
  const Eigen::Index w = y.cols();
  if (y.rows() != d) throw DimensionError("probe block has " + std::to_string(y.rows()) + " rows, operator expects d = " + std::to_string(d));
  if (n < 1) throw ContractError("scalar Lanczos needs n >= 1");

  ScalarLanczosBatch out;
  out.alpha = Eigen::MatrixXd::Zero(n, w);
  out.beta = Eigen::MatrixXd::Zero(n - 1, w);
  out.start_norms.resize(w);

  const SampleStream repairs(repair_seed);
  std::vector<std::uint64_t> repair_counters(static_cast<std::size_t>(w), 0);
  std::vector<bool> active(static_cast<std::size_t>(w), true);

  Eigen::MatrixXd v(d, w);
  Eigen::MatrixXd v_prev = Eigen::MatrixXd::Zero(d, w);
  Eigen::VectorXd beta_prev = Eigen::VectorXd::Zero(w);
  for (Eigen::Index c = 0; c < w; ++c) {
    const double norm = y.col(c).norm();
    out.start_norms(c) = norm;
    if (norm == 0.0) {
      active[static_cast<std::size_t>(c)] = false;
      v.col(c).setZero();
    } else {
      v.col(c) = y.col(c) / norm;
    }
  }

  const double tol_factor = static_cast<double>(d) * kUnitRoundoff;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::MatrixXd av = a.apply(v);
    for (Eigen::Index c = 0; c < w; ++c) {
      if (!active[static_cast<std::size_t>(c)]) continue;
      auto wc = av.col(c);
      const double reference = wc.norm();
      if (j > 0) wc -= beta_prev(c) * v_prev.col(c);
      const double alpha = v.col(c).dot(wc);
      out.alpha(j, c) = alpha;
      if (j + 1 == n) continue;
      wc -= alpha * v.col(c);

      const double beta = wc.norm();
      Eigen::VectorXd next;
      if (beta <= tol_factor * reference) {
        // Invariant subspace reached: continue with a fresh direction and a zero coupling.
        const SampleStream stream = repairs.split(first_sample + static_cast<std::uint64_t>(c));
        next = stream.vector(d, repair_counters[static_cast<std::size_t>(c)]++);
        for (int pass = 0; pass < 2; ++pass) {
          next -= v.col(c).dot(next) * v.col(c);
          next -= v_prev.col(c).dot(next) * v_prev.col(c);
        }
        next.normalize();
        out.beta(j, c) = 0.0;
        beta_prev(c) = 0.0;
      } else {
        next = wc / beta;
        out.beta(j, c) = beta;
        beta_prev(c) = beta;
      }
      v_prev.col(c) = v.col(c);
      v.col(c) = next;
    }
  }
  return out;
}

}  // namespace ktrace
