#include "ktrace/spectral_function.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "ktrace/errors.hpp"

namespace ktrace {

double FilterPolynomial::operator()(double x) const {
  if (coeffs.empty()) return 0.0;
  const double t = to_reference(x);
  // Clenshaw.
  double b1 = 0.0;
  double b2 = 0.0;
  for (int k = degree(); k >= 1; --k) {
    const double b0 = coeffs[static_cast<std::size_t>(k)] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return coeffs[0] + t * b1 - b2;
}

SpectralFunction SpectralFunction::exp_neg_beta(double beta, double shift) {
  SpectralFunction f;
  f.kind_ = Kind::exp_neg_beta;
  f.beta_ = beta;
  f.shift_ = shift;
  return f;
}

SpectralFunction SpectralFunction::log() {
  SpectralFunction f;
  f.kind_ = Kind::log;
  return f;
}

SpectralFunction SpectralFunction::sqrt() {
  SpectralFunction f;
  f.kind_ = Kind::sqrt;
  return f;
}

SpectralFunction SpectralFunction::inverse() {
  SpectralFunction f;
  f.kind_ = Kind::inverse;
  return f;
}

SpectralFunction SpectralFunction::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  SpectralFunction f;
  f.kind_ = Kind::poly;
  f.coeffs_ = std::move(coeffs);
  return f;
}

SpectralFunction SpectralFunction::monomial(int degree) {
  if (degree < 0) throw ContractError("monomial degree must be non-negative");
  std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
  c.back() = 1.0;
  return polynomial(std::move(c));
}

SpectralFunction SpectralFunction::chebyshev(FilterPolynomial p) {
  if (p.coeffs.empty()) throw ContractError("Chebyshev function needs at least one coefficient");
  if (!(p.lower < p.upper)) throw ContractError("Chebyshev interval must satisfy lower < upper");
  SpectralFunction f;
  f.kind_ = Kind::cheb_interp;
  f.filter_ = std::move(p);
  return f;
}

double SpectralFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::exp_neg_beta:
      return std::exp(-beta_ * (x - shift_));
    case Kind::log:
      if (!(x > 0.0)) throw DomainError("log undefined at eigenvalue " + std::to_string(x), x);
      return std::log(x);
    case Kind::sqrt:
      if (!(x >= 0.0)) throw DomainError("sqrt undefined at eigenvalue " + std::to_string(x), x);
      return std::sqrt(x);
    case Kind::inverse:
      if (x == 0.0 || !std::isfinite(x)) throw DomainError("inverse undefined at eigenvalue " + std::to_string(x), x);
      return 1.0 / x;
    case Kind::poly: {
      double acc = 0.0;
      for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
      return acc;
    }
    case Kind::cheb_interp:
      return filter_(x);
  }
  return 0.0;
}

double SpectralFunction::inverse_value(double y) const {
  switch (kind_) {
    case Kind::exp_neg_beta:
      if (beta_ == 0.0 || !(y > 0.0)) break;
      return shift_ - std::log(y) / beta_;
    case Kind::log:
      return std::exp(y);
    case Kind::sqrt:
      if (!(y >= 0.0)) break;
      return y * y;
    case Kind::inverse:
      if (y == 0.0) break;
      return 1.0 / y;
    case Kind::poly:
      if (coeffs_.size() == 2 && coeffs_[1] != 0.0) return (y - coeffs_[0]) / coeffs_[1];
      break;
    case Kind::cheb_interp:
      break;
  }
  throw UnsupportedFunctionError(name() + " is not invertible at value " + std::to_string(y));
}

std::string SpectralFunction::name() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::exp_neg_beta:
      os << "exp_neg_beta(" << beta_ << ")";
      break;
    case Kind::log:
      os << "log";
      break;
    case Kind::sqrt:
      os << "sqrt";
      break;
    case Kind::inverse:
      os << "inverse";
      break;
    case Kind::poly:
      os << "poly(deg=" << coeffs_.size() - 1 << ")";
      break;
    case Kind::cheb_interp:
      os << "cheb(deg=" << filter_.degree() << ")";
      break;
  }
  return os.str();
}

}  // namespace ktrace
