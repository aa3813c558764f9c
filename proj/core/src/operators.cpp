#include "ktrace/operators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "ktrace/errors.hpp"

namespace ktrace {

MatrixOracle::MatrixOracle(Eigen::Index dim) : dim_(dim) {
  if (dim < 1) throw ContractError("operator dimension must be positive");
}

MatrixOracle::MatrixOracle(const MatrixOracle& other) : dim_(other.dim_), count_(other.matvec_count()) {}

MatrixOracle& MatrixOracle::operator=(const MatrixOracle& other) {
  dim_ = other.dim_;
  count_.store(other.matvec_count(), std::memory_order_relaxed);
  return *this;
}

Eigen::MatrixXd MatrixOracle::apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.rows() != dim_) {
    throw DimensionError("block has " + std::to_string(x.rows()) + " rows, operator expects d = " +
                         std::to_string(dim_));
  }
  Eigen::MatrixXd y(dim_, x.cols());
  if (x.cols() == 0) return y;
  apply_impl(x, y);
  count_.fetch_add(static_cast<std::uint64_t>(x.cols()), std::memory_order_relaxed);
  return y;
}

Eigen::MatrixXd MatrixOracle::materialize() const {
  Eigen::MatrixXd out(dim_, dim_);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim_, dim_);
  apply_impl(eye, out);
  return out;
}

void IdentityOperator::apply_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const {
  y = x;
}

DiagonalOperator::DiagonalOperator(Eigen::VectorXd eigenvalues)
    : MatrixOracle(eigenvalues.size()), eigenvalues_(std::move(eigenvalues)) {}

double DiagonalOperator::trace_of(const SpectralFunction& f) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) s += f(eigenvalues_(i));
  return s;
}

void DiagonalOperator::apply_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const {
  y = eigenvalues_.asDiagonal() * x;
}

DenseSymmetric::DenseSymmetric(const Eigen::MatrixXd& a) : MatrixOracle(a.rows()) {
  if (a.rows() != a.cols()) throw DimensionError("dense operator must be square");
  a_ = 0.5 * (a + a.transpose());
}

void DenseSymmetric::apply_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const {
  y.noalias() = a_ * x;
}

// ---------------------------------------------------------------------------

SparseSymmetric::SparseSymmetric(Eigen::Index d, std::vector<std::int64_t> offsets, std::vector<std::int64_t> cols,
                                 std::vector<double> vals)
    : MatrixOracle(d), row_offsets_(std::move(offsets)), col_indices_(std::move(cols)), values_(std::move(vals)) {}

SparseSymmetric SparseSymmetric::from_triplets(Eigen::Index d, std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= d || t.col < 0 || t.col >= d) {
      throw DimensionError("entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                           ") outside a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });

  std::vector<std::int64_t> offsets(static_cast<std::size_t>(d) + 1, 0);
  std::vector<std::int64_t> cols;
  std::vector<double> vals;
  cols.reserve(entries.size());
  vals.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size();) {
    const auto row = entries[i].row;
    const auto col = entries[i].col;
    double v = 0.0;
    for (; i < entries.size() && entries[i].row == row && entries[i].col == col; ++i) v += entries[i].value;
    cols.push_back(col);
    vals.push_back(v);
    ++offsets[static_cast<std::size_t>(row) + 1];
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(d); ++r) offsets[r + 1] += offsets[r];

  SparseSymmetric out(d, std::move(offsets), std::move(cols), std::move(vals));
  for (Eigen::Index r = 0; r < d; ++r) {
    for (auto k = out.row_offsets_[static_cast<std::size_t>(r)]; k < out.row_offsets_[static_cast<std::size_t>(r) + 1];
         ++k) {
      const auto c = out.col_indices_[static_cast<std::size_t>(k)];
      const double v = out.values_[static_cast<std::size_t>(k)];
      const double w = out.coeff(c, r);
      if (std::abs(v - w) > 1e-14 * std::max(std::abs(v), std::abs(w))) {
        throw ContractError("matrix is not symmetric at (" + std::to_string(r) + ", " + std::to_string(c) + ")");
      }
    }
  }
  return out;
}

double SparseSymmetric::coeff(Eigen::Index i, Eigen::Index j) const {
  const auto begin = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(i)];
  const auto end = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(i) + 1];
  const auto it = std::lower_bound(begin, end, static_cast<std::int64_t>(j));
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

double SparseSymmetric::trace() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < dim(); ++i) s += coeff(i, i);
  return s;
}

void SparseSymmetric::apply_impl(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const {
  const Eigen::Index d = dim();
  // Column-by-column so a block apply is bitwise identical to separate vector applies.
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double* xc = x.col(c).data();
    double* yc = y.col(c).data();
    for (Eigen::Index r = 0; r < d; ++r) {
      double acc = 0.0;
      const auto kb = row_offsets_[static_cast<std::size_t>(r)];
      const auto ke = row_offsets_[static_cast<std::size_t>(r) + 1];
      for (auto k = kb; k < ke; ++k) {
        acc += values_[static_cast<std::size_t>(k)] * xc[col_indices_[static_cast<std::size_t>(k)]];
      }
      yc[r] = acc;
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

// Small sparse matrix in coordinate form, used to assemble Kronecker products.
struct Coo {
  Eigen::Index n = 0;
  std::vector<Triplet> entries;
};

Coo coo_identity(Eigen::Index n) {
  Coo out{n, {}};
  out.entries.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out.entries.push_back({i, i, 1.0});
  return out;
}

Coo kron(const Coo& a, const Coo& b) {
  Coo out{a.n * b.n, {}};
  out.entries.reserve(a.entries.size() * b.entries.size());
  for (const auto& ea : a.entries) {
    for (const auto& eb : b.entries) {
      out.entries.push_back({ea.row * b.n + eb.row, ea.col * b.n + eb.col, ea.value * eb.value});
    }
  }
  return out;
}

// 2 (s^x ⊗ s^x + s^y ⊗ s^y). The s^y ⊗ s^y product is real: i·i on the anti-diagonal
// corners gives -1 at (0,3),(3,0) and (-i)(i) = +1 at (1,2),(2,1). Together with
// s^x ⊗ s^x the corners cancel and the middle entries double.
Coo xy_bond() {
  return Coo{4, {{1, 2, 4.0}, {2, 1, 4.0}}};
}

Coo pauli_z() { return Coo{2, {{0, 0, 1.0}, {1, 1, -1.0}}}; }

}  // namespace

SparseSymmetric build_spin_chain(int spins, double field) {
  if (spins < 2 || spins > 24) {
    throw CapacityError("spin chain needs 2 <= N <= 24, got N = " + std::to_string(spins));
  }
  const Eigen::Index d = Eigen::Index{1} << spins;
  std::vector<Triplet> all;

  const Coo bond = xy_bond();
  for (int i = 0; i + 1 < spins; ++i) {
    // Sites i, i+1 (0-based); site 0 is the leftmost Kronecker factor.
    const Coo term = kron(kron(coo_identity(Eigen::Index{1} << i), bond), coo_identity(Eigen::Index{1} << (spins - i - 2)));
    all.insert(all.end(), term.entries.begin(), term.entries.end());
  }
  if (field != 0.0) {
    const Coo sz = pauli_z();
    for (int i = 0; i < spins; ++i) {
      Coo term = kron(kron(coo_identity(Eigen::Index{1} << i), sz), coo_identity(Eigen::Index{1} << (spins - i - 1)));
      for (auto& e : term.entries) e.value *= field;
      all.insert(all.end(), term.entries.begin(), term.entries.end());
    }
  }
  // Diagonal entries can cancel to zero (e.g. equal up and down counts); drop them.
  std::vector<Triplet> merged;
  {
    SparseSymmetric tmp = SparseSymmetric::from_triplets(d, std::move(all));
    merged.reserve(tmp.nnz());
    for (Eigen::Index r = 0; r < d; ++r) {
      for (auto k = tmp.row_offsets()[static_cast<std::size_t>(r)]; k < tmp.row_offsets()[static_cast<std::size_t>(r) + 1];
           ++k) {
        const double v = tmp.values()[static_cast<std::size_t>(k)];
        if (v != 0.0) merged.push_back({r, tmp.col_indices()[static_cast<std::size_t>(k)], v});
      }
    }
  }
  return SparseSymmetric::from_triplets(d, std::move(merged));
}

SyntheticSpectrum build_synthetic_spectrum(SpectrumKind kind, Eigen::Index d, double kappa, double rho,
                                           const SpectralFunction& f) {
  if (d < 2) throw ContractError("synthetic spectrum needs d >= 2");
  if (!(kappa > 1.0)) throw ContractError("synthetic spectrum needs kappa > 1");
  if (kind == SpectrumKind::fast && !(rho > 0.0 && rho < 1.0)) {
    throw ContractError("geometric spectrum needs 0 < rho < 1");
  }
  Eigen::VectorXd fv(d);
  Eigen::VectorXd lambda(d);
  const double denom = static_cast<double>(d - 1);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double t = static_cast<double>(i) / denom;
    fv(i) = kind == SpectrumKind::slow ? 1.0 + t * t * (kappa - 1.0)
                                       : 1.0 + t * (kappa - 1.0) * std::pow(rho, static_cast<double>(d - 1 - i));
    lambda(i) = f.inverse_value(fv(i));
  }
  const double exact = fv.sum();
  return SyntheticSpectrum{DiagonalOperator(std::move(lambda)), std::move(fv), exact};
}

DiagonalOperator build_power_law_diagonal(Eigen::Index d, double exponent) {
  if (d < 1) throw ContractError("power-law diagonal needs d >= 1");
  Eigen::VectorXd lambda(d);
  for (Eigen::Index i = 0; i < d; ++i) lambda(i) = std::pow(static_cast<double>(i + 1), -exponent);
  return DiagonalOperator(std::move(lambda));
}

// ---------------------------------------------------------------------------

SparseSymmetric read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError("empty Matrix Market file", 1);
  ++line_no;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") throw ParseError("missing %%MatrixMarket matrix header", line_no);
  if (lower(format) != "coordinate") throw ParseError("only coordinate format is supported", line_no);
  field = lower(field);
  if (field == "complex" || field == "pattern") throw ParseError("field '" + field + "' is not supported", line_no);
  if (field != "real" && field != "integer") throw ParseError("unknown field '" + field + "'", line_no);
  symmetry = lower(symmetry);
  if (symmetry != "general" && symmetry != "symmetric") {
    throw ParseError("unsupported symmetry '" + symmetry + "'", line_no);
  }
  const bool is_symmetric = symmetry == "symmetric";

  long long rows = -1, cols = -1, count = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> count) || rows < 1 || cols < 1 || count < 0) {
      throw ParseError("malformed size line", line_no);
    }
    break;
  }
  if (rows < 0) throw ParseError("missing size line", line_no);
  if (rows != cols) throw ParseError("matrix must be square", line_no);

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(is_symmetric ? 2 * count : 2 * count));
  long long seen = 0;
  while (seen < count && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream entry(line);
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(entry >> i >> j >> v)) throw ParseError("malformed entry", line_no);
    if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError("index out of range", line_no);
    const Eigen::Index r = i - 1;
    const Eigen::Index c = j - 1;
    if (is_symmetric) {
      entries.push_back({r, c, v});
      if (r != c) entries.push_back({c, r, v});
    } else {
      entries.push_back({r, c, 0.5 * v});
      entries.push_back({c, r, 0.5 * v});
    }
    ++seen;
  }
  if (seen < count) throw ParseError("expected " + std::to_string(count) + " entries, found " + std::to_string(seen), line_no);
  return SparseSymmetric::from_triplets(rows, std::move(entries));
}

SparseSymmetric load_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  return read_matrix_market(in);
}

}  // namespace ktrace
