#include "ktrace/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "ktrace/errors.hpp"

namespace ktrace {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash3(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  return splitmix64(key ^ splitmix64(a ^ splitmix64(b * kGolden + 0x632BE59BD9B4E019ULL)));
}

// Uniform on (0, 1].
double unit_open_left(std::uint64_t h) {
  return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

std::string_view to_string(Distribution dist) {
  return dist == Distribution::gaussian ? "gaussian" : "rademacher";
}

Distribution parse_distribution(std::string_view name) {
  if (name == "gaussian") return Distribution::gaussian;
  if (name == "rademacher") return Distribution::rademacher;
  throw ContractError("unknown distribution '" + std::string(name) + "' (expected gaussian|rademacher)");
}

SampleStream::SampleStream(std::uint64_t seed, Distribution dist)
    : seed_(seed), key_(splitmix64(seed ^ 0xD1B54A32D192ED03ULL)), dist_(dist) {}

double SampleStream::variate(std::uint64_t sample, std::uint64_t entry) const {
  if (dist_ == Distribution::rademacher) {
    return (hash3(key_, sample, entry) >> 63) != 0 ? 1.0 : -1.0;
  }
  // Box-Muller on the pair containing `entry`.
  const std::uint64_t pair = entry / 2;
  const double u1 = unit_open_left(hash3(key_, sample, 2 * pair));
  const double u2 = unit_open_left(hash3(key_, sample, 2 * pair + 1));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (entry % 2 == 0) ? radius * std::cos(angle) : radius * std::sin(angle);
}

Eigen::VectorXd SampleStream::vector(Eigen::Index d, std::uint64_t sample) const {
  Eigen::VectorXd v(d);
  for (Eigen::Index j = 0; j < d; ++j) v(j) = variate(sample, static_cast<std::uint64_t>(j));
  return v;
}

Eigen::MatrixXd SampleStream::block(Eigen::Index d, Eigen::Index k, std::uint64_t first_sample) const {
  Eigen::MatrixXd out(d, k);
  for (Eigen::Index c = 0; c < k; ++c) out.col(c) = vector(d, first_sample + static_cast<std::uint64_t>(c));
  return out;
}

SampleStream SampleStream::split(std::uint64_t stream_id) const {
  return SampleStream(splitmix64(seed_ ^ splitmix64(stream_id + 0x5851F42D4C957F2DULL)), dist_);
}

double SampleStream::next() { return variate(0, counter_++); }

// ---------------------------------------------------------------------------

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("regularized_gamma_p requires a > 0", a);
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  if (x < a + 1.0) {
    // Series: P = e^{-x} x^a / Gamma(a+1) * sum x^n / ((a+1)...(a+n)).
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    return std::min(1.0, sum * std::exp(log_prefactor));
  }

  // Continued fraction for Q (modified Lentz).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefactor) * h);
}

double chi2_cdf(double k, double x) { return regularized_gamma_p(0.5 * k, 0.5 * x); }

namespace {

double chi2_log_density(double k, double x) {
  const double half = 0.5 * k;
  return (half - 1.0) * std::log(x) - 0.5 * x - half * std::numbers::ln2 - std::lgamma(half);
}

}  // namespace

double chi2_inv_cdf(double k, double p) {
  if (!(k > 0.0)) throw DomainError("chi2_inv_cdf requires k > 0", k);
  if (!(p > 0.0 && p < 1.0)) throw DomainError("chi2_inv_cdf requires 0 < p < 1", p);

  double lo = 0.0;
  double hi = std::max(1.0, k);
  while (chi2_cdf(k, hi) < p) {
    lo = hi;
    hi *= 2.0;
  }

  // Newton inside the bracket, bisection whenever a step leaves it.
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 300; ++iter) {
    const double f = chi2_cdf(k, x) - p;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;

    double next = x - f / std::exp(chi2_log_density(k, x));
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 2.0 * std::numeric_limits<double>::epsilon() * x) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

double alpha_k(std::int64_t k, double delta) {
  if (k < 1) throw ContractError("alpha_k requires k >= 1");
  return chi2_inv_cdf(static_cast<double>(k), delta) / static_cast<double>(k);
}

double c_eps_delta(double eps, double delta) {
  if (!(eps > 0.0)) throw ContractError("C(eps, delta) requires eps > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("C(eps, delta) requires 0 < delta < 1");
  return 4.0 / (eps * eps) * std::log(2.0 / delta);
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw ContractError("percentile of an empty list");
  if (!(p >= 0.0 && p <= 100.0)) throw ContractError("percentile requires 0 <= p <= 100");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ContractError("mean of an empty list");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw ContractError("sample variance needs at least two values");
  const double mu = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - mu) * (v - mu);
  return s / static_cast<double>(values.size() - 1);
}

}  // namespace ktrace
