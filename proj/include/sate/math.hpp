#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sate {

// invalid input or precondition violation; the CLI maps this to exit code 2
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// numeric failure inside a fit or solve (divergence, singular design);
// the harness isolates these per replication
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

// splitmix64 finalizer, used for seed derivation
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// counter-based splittable child seed: hash of (master, a, b)
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ (0x9e3779b97f4a7c15ULL * (a + 1)));
  h = mix64(h ^ (0xc2b2ae3d27d4eb4fULL * (b + 1)));
  return h;
}

// mt19937_64 engine (bit-reproducible across platforms) with hand-rolled
// transforms; std::*_distribution is not portable so we avoid it
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform on [0,1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, consumes two uniforms per pair, spare cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * M_PI * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  // symmetric truncation at +-radius standard deviations, by rejection
  double truncated_normal(double radius) {
    for (;;) {
      double z = normal();
      if (std::fabs(z) <= radius) return z;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// pairwise (cascade) summation; fixed reduction order makes parallel and
// serial paths agree bit for bit
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

inline double pairwise_mean(const std::vector<double>& x) {
  if (x.empty()) throw ValidationError("mean of empty vector");
  return pairwise_sum(x) / static_cast<double>(x.size());
}

// sample variance (denominator n-1)
inline double sample_variance(const std::vector<double>& x) {
  std::size_t n = x.size();
  if (n < 2) throw ValidationError("variance needs at least two values");
  double m = pairwise_mean(x);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (x[i] - m) * (x[i] - m);
  return pairwise_sum(sq) / static_cast<double>(n - 1);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// standard normal quantile: Acklam's rational approximation (relative error
// ~1.1e-9) plus one Halley step, comfortably past the 1e-6 contract
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must lie in (0,1)");
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// Kolmogorov-Smirnov statistic of a sample against a cdf
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::size_t n = sample.size();
  if (n == 0) throw ValidationError("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = cdf(sample[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

// asymptotic KS critical value at level alpha
inline double ks_critical(std::size_t n, double alpha) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

inline double log_binom_coef(long n, long k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// central exact-binomial band: smallest k with CDF(k) >= alpha/2 and with
// CDF(k) >= 1-alpha/2; counts inside [lo,hi] are consistent with rate p
struct BinomialBand {
  long lo = 0;
  long hi = 0;
};

inline BinomialBand binomial_band(long n, double p, double alpha) {
  if (n <= 0 || !(p > 0.0 && p < 1.0) || !(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("binomial_band: bad arguments");
  std::vector<double> pmf(n + 1);
  double lp = std::log(p), lq = std::log1p(-p);
  for (long k = 0; k <= n; ++k) pmf[k] = std::exp(log_binom_coef(n, k) + k * lp + (n - k) * lq);
  BinomialBand band;
  double cdf = 0.0;
  long lo = -1, hi = -1;
  for (long k = 0; k <= n; ++k) {
    cdf += pmf[k];
    if (lo < 0 && cdf >= alpha / 2.0) lo = k;
    if (hi < 0 && cdf >= 1.0 - alpha / 2.0) hi = k;
  }
  band.lo = lo < 0 ? 0 : lo;
  band.hi = hi < 0 ? n : hi;
  return band;
}

// Gauss-Legendre nodes and weights on [-1,1], Newton on the recurrence
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline Quadrature gauss_legendre(int n) {
  if (n < 1) throw ValidationError("gauss_legendre: n must be positive");
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    q.nodes[i] = -x;
    q.nodes[n - 1 - i] = x;
    q.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    q.weights[n - 1 - i] = q.weights[i];
  }
  return q;
}

// Halton radical inverse in the given base
inline double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

struct QmcResult {
  double mean = 0.0;
  double se = 0.0;
  long n_points = 0;
};

// randomized quasi-Monte-Carlo mean of f over [0,1]^dim: Halton points with
// Cranley-Patterson shifts, se from the spread of replicate means
inline QmcResult qmc_mean(const std::function<double(const std::vector<double>&)>& f, int dim,
                          long points_per_replicate, int replicates, Rng& rng) {
  static const int primes[8] = {2, 3, 5, 7, 11, 13, 17, 19};
  if (dim < 1 || dim > 8) throw ValidationError("qmc_mean: dim must lie in [1,8]");
  if (replicates < 2) throw ValidationError("qmc_mean: need at least 2 replicates");
  std::vector<double> shifts(dim);
  std::vector<double> u(dim);
  std::vector<double> rep_means(replicates);
  for (int r = 0; r < replicates; ++r) {
    for (int d = 0; d < dim; ++d) shifts[d] = rng.uniform();
    std::vector<double> vals(points_per_replicate);
    for (long i = 0; i < points_per_replicate; ++i) {
      for (int d = 0; d < dim; ++d) {
        double v = radical_inverse(static_cast<std::uint64_t>(i) + 1, primes[d]) + shifts[d];
        u[d] = v - std::floor(v);
      }
      vals[i] = f(u);
    }
    rep_means[r] = pairwise_mean(vals);
  }
  QmcResult out;
  out.mean = pairwise_mean(rep_means);
  out.se = std::sqrt(sample_variance(rep_means) / replicates);
  out.n_points = points_per_replicate * replicates;
  return out;
}

}  // namespace sate
