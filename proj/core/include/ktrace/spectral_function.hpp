#pragma once

#include <string>
#include <vector>

namespace ktrace {

/// Polynomial in the Chebyshev basis on [lower, upper]:
/// p(x) = sum_k coeffs[k] T_k(t), t = (2x - lower - upper) / (upper - lower).
struct FilterPolynomial {
  std::vector<double> coeffs;
  double lower = -1.0;
  double upper = 1.0;
  /// Max |p - target| measured on a uniform grid of 10 * degree points when built by interpolation.
  double max_error = 0.0;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  double operator()(double x) const;
  /// Maps x into the reference interval [-1, 1].
  double to_reference(double x) const { return (2.0 * x - lower - upper) / (upper - lower); }
};

/// Scalar function applied to eigenvalues.
class SpectralFunction {
 public:
  enum class Kind { exp_neg_beta, log, sqrt, inverse, poly, cheb_interp };

  /// x -> exp(-beta (x - shift)). The shift rescales the result by exp(beta shift) and
  /// keeps large-beta partition functions in floating-point range.
  static SpectralFunction exp_neg_beta(double beta, double shift = 0.0);
  static SpectralFunction log();
  static SpectralFunction sqrt();
  static SpectralFunction inverse();
  /// Monomial coefficients, lowest degree first.
  static SpectralFunction polynomial(std::vector<double> coeffs);
  static SpectralFunction constant(double value) { return polynomial({value}); }
  static SpectralFunction identity() { return polynomial({0.0, 1.0}); }
  static SpectralFunction monomial(int degree);
  static SpectralFunction chebyshev(FilterPolynomial p);

  Kind kind() const noexcept { return kind_; }
  double beta() const noexcept { return beta_; }
  double shift() const noexcept { return shift_; }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  const FilterPolynomial& filter() const noexcept { return filter_; }

  /// Throws DomainError when x is outside the domain (log x <= 0, sqrt x < 0, 1/0).
  double operator()(double x) const;

  /// x with f(x) = y; throws UnsupportedFunctionError when f is not invertible at y.
  double inverse_value(double y) const;

  std::string name() const;

 private:
  SpectralFunction() = default;

  Kind kind_ = Kind::poly;
  double beta_ = 0.0;
  double shift_ = 0.0;
  std::vector<double> coeffs_;
  FilterPolynomial filter_;
};

}  // namespace ktrace
