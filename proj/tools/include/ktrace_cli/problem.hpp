#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ktrace/operators.hpp"
#include "ktrace/spectral_function.hpp"

namespace ktrace::cli {

/// A resolved problem string. Each worker gets its own operator copy so matvec counts
/// stay per run.
struct Problem {
  std::string label;
  Eigen::Index dim = 0;
  std::function<std::unique_ptr<MatrixOracle>()> make;
  /// Exact spectrum when known or computable densely (d <= 4096); empty otherwise.
  std::optional<Eigen::VectorXd> eigenvalues;

  double lambda_min() const;
  std::optional<double> exact_trace(const SpectralFunction& f) const;
};

/// spin:N=10,h=0.3 | synthetic:slow,d=2000,kappa=1000[,rho=0.95][,f=inverse] | powerlaw:d=2500,c=1.5 | mtx:path
/// Synthetic spectra are built for the function `f` (their f-values are the defining profile).
/// Throws UsageError on a malformed string.
Problem parse_problem(const std::string& spec, const SpectralFunction& f, bool want_exact = true);

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& function_names() {
  static const std::vector<std::string> names{"exp", "log", "sqrt", "inverse"};
  return names;
}

/// exp needs beta; shift applies to exp only.
SpectralFunction make_function(const std::string& name, double beta = 1.0, double shift = 0.0);

/// `points` log-spaced values on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int points);

}  // namespace ktrace::cli
