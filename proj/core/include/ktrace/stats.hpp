#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Core>

namespace ktrace {

enum class Distribution { gaussian, rademacher };

std::string_view to_string(Distribution dist);
Distribution parse_distribution(std::string_view name);

/// Counter-based random stream.
///
/// Every variate is a pure function of (seed, sample index, entry index), so
/// sample vectors can be produced in any order or in parallel batches and still
/// match a sequential run bit for bit. Copies are independent values.
class SampleStream {
 public:
  explicit SampleStream(std::uint64_t seed, Distribution dist = Distribution::gaussian);

  std::uint64_t seed() const noexcept { return seed_; }
  Distribution distribution() const noexcept { return dist_; }

  /// Entry `entry` of sample vector `sample`.
  double variate(std::uint64_t sample, std::uint64_t entry) const;

  /// Sample vector number `sample` of length d.
  Eigen::VectorXd vector(Eigen::Index d, std::uint64_t sample) const;

  /// d×k block whose column j is `vector(d, first_sample + j)`.
  Eigen::MatrixXd block(Eigen::Index d, Eigen::Index k, std::uint64_t first_sample = 0) const;

  /// Derived stream for a named purpose (sketch, probes, repairs, ...).
  SampleStream split(std::uint64_t stream_id) const;

  /// Sequential interface: the next variate of sample 0, advancing an internal counter.
  double next();

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  Distribution dist_;
  std::uint64_t counter_ = 0;
};

/// Regularized lower incomplete gamma function P(a, x).
double regularized_gamma_p(double a, double x);

/// CDF of the chi-squared distribution with k degrees of freedom.
double chi2_cdf(double k, double x);

/// Inverse CDF of chi-squared with k degrees of freedom; throws DomainError unless 0 < p < 1.
double chi2_inv_cdf(double k, double p);

/// alpha_k = chi2_inv_cdf(k, delta) / k.
double alpha_k(std::int64_t k, double delta);

/// C(eps, delta) = 4 eps^-2 ln(2/delta).
double c_eps_delta(double eps, double delta);

/// Nearest-rank percentile: the ceil(p/100 * n)-th order statistic (first element for p = 0).
double percentile(std::span<const double> values, double p);

/// Sum in a fixed pairwise order, independent of how the values were produced.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Unbiased sample variance (n - 1 denominator).
double sample_variance(std::span<const double> values);

}  // namespace ktrace
