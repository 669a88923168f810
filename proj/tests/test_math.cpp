#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "sate/math.hpp"

using namespace sate;

namespace {

// independent quantile oracle: bisection on the erf-based cdf
double quantile_by_bisection(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (0.5 * (1.0 + std::erf(mid / std::sqrt(2.0))) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("normal quantile matches bisection oracle to 1e-6") {
  CHECK(std::fabs(normal_quantile(0.975) - 1.959963984540054) < 1e-6);
  CHECK(std::fabs(normal_quantile(0.995) - 2.5758293035489004) < 1e-6);
  CHECK(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-12));
  for (double p : {1e-6, 1e-3, 0.01, 0.2, 0.5, 0.7, 0.9, 0.975, 0.9999}) {
    CHECK(std::fabs(normal_quantile(p) - quantile_by_bisection(p)) < 1e-6);
    CHECK(normal_quantile(p) == Catch::Approx(-normal_quantile(1.0 - p)).margin(1e-9));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(-0.2), ValidationError);
}

TEST_CASE("normal cdf round trips with quantile") {
  for (double x : {-3.0, -1.0, 0.0, 0.5, 2.2}) {
    CHECK(normal_quantile(normal_cdf(x)) == Catch::Approx(x).margin(1e-8));
  }
}

TEST_CASE("pairwise sum agrees with long double accumulation") {
  Rng rng(7);
  std::vector<double> x(10001);
  long double acc = 0.0L;
  for (auto& v : x) {
    v = rng.uniform(-1.0, 1.0) * 1e6;
    acc += v;
  }
  double ps = pairwise_sum(x);
  CHECK(std::fabs(ps - static_cast<double>(acc)) < 1e-4);
  // determinism: same input, same bits
  CHECK(pairwise_sum(x) == ps);
  std::vector<double> ints = {1, 2, 3, 4, 5, 6, 7};
  CHECK(pairwise_sum(ints) == 28.0);
  CHECK(pairwise_mean(ints) == 4.0);
}

TEST_CASE("sample variance matches two-pass oracle") {
  std::vector<double> x = {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  // mean 5, sum of squared deviations 32, n-1 = 7
  CHECK(sample_variance(x) == Catch::Approx(32.0 / 7.0).epsilon(1e-14));
  CHECK_THROWS_AS(sample_variance({1.0}), ValidationError);
}

TEST_CASE("seed derivation is deterministic and spreads") {
  CHECK(derive_seed(42, 1, 2) == derive_seed(42, 1, 2));
  CHECK(derive_seed(42, 1, 2) != derive_seed(42, 2, 1));
  CHECK(derive_seed(42, 1, 2) != derive_seed(43, 1, 2));
  CHECK(derive_seed(0, 0, 0) != derive_seed(0, 0, 1));
}

TEST_CASE("rng streams are reproducible and well behaved") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
  Rng c(9);
  double mean = 0.0, m2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = c.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    mean += u;
    m2 += u * u;
  }
  mean /= n;
  CHECK(mean == Catch::Approx(0.5).margin(0.005));
  CHECK(m2 / n - mean * mean == Catch::Approx(1.0 / 12.0).margin(0.005));
  double zm = 0.0, zv = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = c.normal();
    zm += z;
    zv += z * z;
  }
  zm /= n;
  CHECK(zm == Catch::Approx(0.0).margin(0.01));
  CHECK(zv / n == Catch::Approx(1.0).margin(0.02));
  for (int i = 0; i < 10000; ++i) CHECK(std::fabs(c.truncated_normal(2.0)) <= 2.0);
}

TEST_CASE("gauss legendre integrates polynomials exactly") {
  auto q = gauss_legendre(12);
  auto integrate = [&](auto f) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * f(q.nodes[i]);
    return s;
  };
  CHECK(integrate([](double) { return 1.0; }) == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(integrate([](double x) { return x * x; }) == Catch::Approx(2.0 / 3.0).epsilon(1e-13));
  // degree 23 is still exact for 12 nodes
  CHECK(integrate([](double x) { return std::pow(x, 22); }) ==
        Catch::Approx(2.0 / 23.0).epsilon(1e-11));
  CHECK(integrate([](double x) { return std::exp(x); }) ==
        Catch::Approx(std::exp(1.0) - std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("qmc mean hits smooth integrals inside its own error bars") {
  Rng rng(2024);
  auto prod = [](const std::vector<double>& u) { return u[0] * u[1]; };
  auto res = qmc_mean(prod, 2, 4096, 8, rng);
  CHECK(std::fabs(res.mean - 0.25) < 5.0 * res.se + 1e-12);
  CHECK(res.se > 0.0);
  CHECK(res.se < 1e-3);
  auto cube = [](const std::vector<double>& u) { return u[0] * u[0] * u[1] + u[2]; };
  auto res3 = qmc_mean(cube, 3, 4096, 8, rng);
  CHECK(std::fabs(res3.mean - (1.0 / 6.0 + 0.5)) < 5.0 * res3.se + 1e-12);
}

TEST_CASE("ks statistic and critical value") {
  // perfect uniform grid: D = 1/(2n)
  std::vector<double> grid(100);
  for (int i = 0; i < 100; ++i) grid[i] = (i + 0.5) / 100.0;
  double d = ks_statistic(grid, [](double x) { return x; });
  CHECK(d == Catch::Approx(0.005).margin(1e-12));
  CHECK(ks_critical(500, 0.01) == Catch::Approx(0.07278954160144187).epsilon(1e-12));
  // a normal sample passes against its own cdf
  Rng rng(5);
  std::vector<double> z(800);
  for (auto& v : z) v = rng.normal();
  CHECK(ks_statistic(z, [](double x) { return normal_cdf(x); }) < ks_critical(800, 0.01));
  // and fails against a shifted cdf
  CHECK(ks_statistic(z, [](double x) { return normal_cdf(x - 1.0); }) > ks_critical(800, 0.01));
}

TEST_CASE("exact binomial band at 500 reps and 95 percent nominal") {
  auto band = binomial_band(500, 0.95, 0.01);
  CHECK(band.lo == 462);
  CHECK(band.hi == 487);
  auto band200 = binomial_band(200, 0.95, 0.01);
  CHECK(band200.lo == 181);
  CHECK(band200.hi == 197);
  CHECK_THROWS_AS(binomial_band(0, 0.5, 0.01), ValidationError);
}

TEST_CASE("sigmoid is stable in both tails") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == Catch::Approx(1.0));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(-800.0) < 1e-100);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == Catch::Approx(1.0).epsilon(1e-15));
}
