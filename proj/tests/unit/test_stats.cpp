#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "ktrace/errors.hpp"
#include "ktrace/stats.hpp"

using namespace ktrace;

namespace {

// Composite Simpson integration of the chi-squared density on [0, x] after the substitution
// x = u^2, which removes the k = 1 singularity at the origin.
double chi2_cdf_quadrature(double k, double x) {
  const double norm = std::pow(2.0, k / 2.0) * std::tgamma(k / 2.0);
  auto integrand = [&](double u) {
    if (u == 0.0) return k == 1.0 ? 2.0 / norm : 0.0;
    const double t = u * u;
    return 2.0 * u * std::pow(t, k / 2.0 - 1.0) * std::exp(-t / 2.0) / norm;
  };
  const int steps = 20000;
  const double h = std::sqrt(x) / steps;
  double acc = integrand(0.0) + integrand(std::sqrt(x));
  for (int i = 1; i < steps; ++i) acc += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("chi-squared quantiles match closed forms and quadrature") {
  CHECK(chi2_inv_cdf(2, 0.05) == doctest::Approx(-2.0 * std::log(0.95)).epsilon(1e-12));
  CHECK(std::abs(chi2_inv_cdf(2, 0.05) - 0.1025866) < 1e-6);
  CHECK(std::abs(chi2_inv_cdf(1, 0.5) - 0.454936423119572) < 1e-9);
  CHECK(std::abs(chi2_inv_cdf(10, 0.5) - 9.34181776559197) < 1e-9);

  // Frozen values cross-checked by an independent Simpson integration of the density.
  CHECK(std::abs(chi2_cdf_quadrature(1, 0.454936423119572) - 0.5) < 1e-8);
  CHECK(std::abs(chi2_cdf_quadrature(10, 9.34181776559197) - 0.5) < 1e-8);
}

TEST_CASE("inverse CDF composed with the CDF is the identity") {
  for (double k : {1.0, 2.0, 5.0, 50.0}) {
    for (double p : {0.01, 0.05, 0.5, 0.95}) {
      const double x = chi2_inv_cdf(k, p);
      CHECK(std::abs(chi2_cdf(k, x) - p) < 1e-8);
    }
  }
}

TEST_CASE("quantile rejects probabilities outside (0, 1)") {
  CHECK_THROWS_AS(chi2_inv_cdf(3, 0.0), DomainError);
  CHECK_THROWS_AS(chi2_inv_cdf(3, 1.0), DomainError);
  CHECK_THROWS_AS(chi2_inv_cdf(3, -0.2), DomainError);
}

TEST_CASE("alpha_k increases toward one") {
  CHECK(alpha_k(2, 0.05) == doctest::Approx(0.0512933).epsilon(1e-6));
  double prev = 0.0;
  for (std::int64_t k = 1; k <= 10000; ++k) {
    const double a = alpha_k(k, 0.05);
    REQUIRE(a > prev);
    REQUIRE(a < 1.0);
    prev = a;
  }
  CHECK(std::abs(alpha_k(10000, 0.05) - 1.0) < 0.03);
}

TEST_CASE("C(eps, delta)") {
  CHECK(c_eps_delta(1.0, 2.0 / std::exp(1.0)) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(c_eps_delta(0.5, 0.05) == doctest::Approx(16.0 * std::log(40.0)).epsilon(1e-14));
  CHECK(std::abs(c_eps_delta(0.5, 0.05) - 59.0221) < 1e-4);
  CHECK_THROWS_AS(c_eps_delta(1.0, 2.0), ContractError);
  CHECK_THROWS_AS(c_eps_delta(0.0, 0.1), ContractError);
}

TEST_CASE("nearest-rank percentile") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(percentile(v, 90) == 90.0);
  CHECK(percentile(std::vector<double>{7.5}, 33) == 7.5);
  CHECK(percentile(std::vector<double>{3, 1, 2}, 50) == 2.0);
  CHECK(percentile(std::vector<double>{3, 1, 2}, 0) == 1.0);
  CHECK(percentile(std::vector<double>{3, 1, 2}, 100) == 3.0);
  CHECK_THROWS(percentile(std::vector<double>{}, 50));
}

TEST_CASE("gaussian stream moments") {
  const SampleStream s(12345);
  const Eigen::VectorXd x = s.vector(100000, 0);
  const double mu = x.mean();
  const double var = (x.array() - mu).square().sum() / (x.size() - 1);
  CHECK(std::abs(mu) <= 0.02);
  CHECK(std::abs(var - 1.0) <= 0.02);
}

TEST_CASE("rademacher stream is balanced") {
  const SampleStream s(99, Distribution::rademacher);
  const Eigen::VectorXd x = s.vector(100000, 3);
  CHECK((x.array().abs() == 1.0).all());
  const double plus = (x.array() > 0).count();
  // Chi-squared statistic with one degree of freedom; 10.83 is the p = 1e-3 critical value.
  const double chi2 = std::pow(plus - 50000.0, 2) / 50000.0 * 2.0;
  CHECK(chi2 < 10.83);
}

TEST_CASE("streams are reproducible and batch independent") {
  const SampleStream a(7), b(7), c(8);
  CHECK(a.vector(50, 4) == b.vector(50, 4));
  CHECK(a.vector(50, 4) != c.vector(50, 4));
  const Eigen::MatrixXd blk = a.block(33, 5, 10);
  for (int j = 0; j < 5; ++j) CHECK(blk.col(j) == a.vector(33, 10 + j));
  CHECK(a.split(1).vector(10, 0) == b.split(1).vector(10, 0));
  CHECK(a.split(1).vector(10, 0) != a.split(2).vector(10, 0));

  SampleStream seq1(5), seq2(5);
  for (int i = 0; i < 20; ++i) CHECK(seq1.next() == seq2.next());
}

TEST_CASE("pairwise sum and moments") {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  CHECK(pairwise_sum(v) == 66.0);
  CHECK(mean(v) == 6.0);
  CHECK(sample_variance(v) == doctest::Approx(11.0));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("distribution names round-trip") {
  CHECK(parse_distribution(to_string(Distribution::gaussian)) == Distribution::gaussian);
  CHECK(parse_distribution(to_string(Distribution::rademacher)) == Distribution::rademacher);
  CHECK_THROWS(parse_distribution("uniform"));
}
