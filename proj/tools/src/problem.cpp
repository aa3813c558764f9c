#include "ktrace_cli/problem.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "ktrace/errors.hpp"
#include "ktrace/estimators.hpp"

namespace ktrace::cli {

namespace {

constexpr Eigen::Index kExactLimit = 4096;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) throw UsageError("bad number for " + key + ": '" + value + "'");
  return out;
}

std::map<std::string, std::string> key_values(const std::vector<std::string>& parts, std::size_t first) {
  std::map<std::string, std::string> kv;
  for (std::size_t i = first; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) throw UsageError("expected key=value, got '" + parts[i] + "'");
    kv[parts[i].substr(0, eq)] = parts[i].substr(eq + 1);
  }
  return kv;
}

double take(std::map<std::string, std::string>& kv, const std::string& key, std::optional<double> fallback = {}) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    if (!fallback) throw UsageError("problem is missing " + key + "=");
    return *fallback;
  }
  const double v = to_double(key, it->second);
  kv.erase(it);
  return v;
}

void reject_leftovers(const std::map<std::string, std::string>& kv) {
  if (!kv.empty()) throw UsageError("unknown problem key '" + kv.begin()->first + "'");
}

template <class Op>
std::function<std::unique_ptr<MatrixOracle>()> copier(std::shared_ptr<const Op> op) {
  return [op] { return std::make_unique<Op>(*op); };
}

}  // namespace

double Problem::lambda_min() const {
  if (!eigenvalues) throw UsageError("problem '" + label + "' has no known spectrum");
  return eigenvalues->minCoeff();
}

std::optional<double> Problem::exact_trace(const SpectralFunction& f) const {
  if (!eigenvalues) return std::nullopt;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues->size(); ++i) sum += f((*eigenvalues)(i));
  return sum;
}

Problem parse_problem(const std::string& spec, const SpectralFunction& f, bool want_exact) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw UsageError("problem must look like kind:params, got '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);

  Problem p;
  p.label = spec;
  if (kind == "spin") {
    auto kv = key_values(split(rest, ','), 0);
    const double n = take(kv, "N");
    const double h = take(kv, "h", 0.0);
    reject_leftovers(kv);
    if (n != std::floor(n)) throw UsageError("N must be an integer");
    auto op = std::make_shared<const SparseSymmetric>(build_spin_chain(static_cast<int>(n), h));
    p.dim = op->dim();
    if (want_exact && p.dim <= kExactLimit) p.eigenvalues = dense_eigenvalues(*op);
    p.make = copier(op);
  } else if (kind == "synthetic") {
    const auto parts = split(rest, ',');
    if (parts.empty() || (parts[0] != "slow" && parts[0] != "fast")) throw UsageError("synthetic needs slow or fast first");
    auto kv = key_values(parts, 1);
    const Eigen::Index d = static_cast<Eigen::Index>(take(kv, "d"));
    const double kappa = take(kv, "kappa");
    const double rho = take(kv, "rho", 0.95);
    reject_leftovers(kv);
    SyntheticSpectrum s = build_synthetic_spectrum(parts[0] == "slow" ? SpectrumKind::slow : SpectrumKind::fast, d, kappa, rho, f);
    auto op = std::make_shared<const DiagonalOperator>(std::move(s.op));
    p.dim = d;
    p.eigenvalues = op->eigenvalues();
    p.make = copier(op);
  } else if (kind == "powerlaw") {
    auto kv = key_values(split(rest, ','), 0);
    const Eigen::Index d = static_cast<Eigen::Index>(take(kv, "d"));
    const double c = take(kv, "c", 1.5);
    reject_leftovers(kv);
    auto op = std::make_shared<const DiagonalOperator>(build_power_law_diagonal(d, c));
    p.dim = d;
    p.eigenvalues = op->eigenvalues();
    p.make = copier(op);
  } else if (kind == "mtx") {
    if (rest.empty()) throw UsageError("mtx needs a path");
    auto op = std::make_shared<const SparseSymmetric>(load_matrix_market(rest));
    p.dim = op->dim();
    if (want_exact && p.dim <= kExactLimit) p.eigenvalues = dense_eigenvalues(*op);
    p.make = copier(op);
  } else {
    throw UsageError("unknown problem kind '" + kind + "' (spin, synthetic, powerlaw, mtx)");
  }
  return p;
}

SpectralFunction make_function(const std::string& name, double beta, double shift) {
  if (name == "exp") return SpectralFunction::exp_neg_beta(beta, shift);
  if (name == "log") return SpectralFunction::log();
  if (name == "sqrt") return SpectralFunction::sqrt();
  if (name == "inverse") return SpectralFunction::inverse();
  throw UsageError("unknown function '" + name + "' (supported: exp, log, sqrt, inverse)");
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (points < 1 || !(lo > 0.0) || !(hi >= lo)) throw UsageError("log grid needs points >= 1 and 0 < lo <= hi");
  std::vector<double> out(static_cast<std::size_t>(points));
  if (points == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (points - 1));
  return out;
}

}  // namespace ktrace::cli
