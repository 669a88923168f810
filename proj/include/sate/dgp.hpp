#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sate/data.hpp"
#include "sate/math.hpp"

namespace sate {

// linear-gaussian designs over X ~ Uniform(-1,1)^{d_x}:
//   T | X        ~ Bernoulli(sigmoid(e0 + e'x))
//   S            = alpha T + Phi x + nu,  nu_j iid N(0, sigma_nu^2)
//   Y            = tau T + beta'x + kappa'x T + gamma'S + sigma_eps * eps
// kappa defaults to zero; a nonzero kappa makes the treatment effect vary
// with x while leaving delta* = tau + gamma'alpha (E[X] = 0)
// labelling differs by family:
//   Mar2                 R ~ Bern(sigmoid(r0 + r_t T + r_x'x))
//   SurrogateDependentR  R ~ Bern(sigmoid(r0 + r_t T + r_x'x + r_s'S)),
//                        nu truncated at +-4 sigma_nu so overlap is strict
//   Mcar                 R ~ Bern(p_label)
//   VanishingLabel       R ~ Bern(c N^{-g}), g < 1/2, label rate decays with N
enum class DgpFamily { Mar2, SurrogateDependentR, Mcar, VanishingLabel };

inline std::string to_string(DgpFamily f) {
  switch (f) {
    case DgpFamily::Mar2: return "mar2";
    case DgpFamily::SurrogateDependentR: return "surrogate_dependent_r";
    case DgpFamily::Mcar: return "mcar";
    case DgpFamily::VanishingLabel: return "vanishing_label";
  }
  throw ValidationError("bad family");
}

inline DgpFamily family_from_string(const std::string& s) {
  if (s == "mar2") return DgpFamily::Mar2;
  if (s == "surrogate_dependent_r") return DgpFamily::SurrogateDependentR;
  if (s == "mcar") return DgpFamily::Mcar;
  if (s == "vanishing_label") return DgpFamily::VanishingLabel;
  throw ValidationError("unknown dgp family: " + s);
}

constexpr double kNuTruncRadius = 4.0;  // SurrogateDependentR only

struct DgpSpec {
  DgpFamily family = DgpFamily::Mar2;
  int d_x = 1;
  int d_s = 1;
  double tau = 1.0;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<double> alpha;
  std::vector<double> kappa;             // empty means all zeros
  std::vector<std::vector<double>> phi;  // d_s rows by d_x columns
  double sigma_nu = 1.0;
  double sigma_eps = 1.0;
  std::vector<double> e_coef;  // intercept then x coefficients
  std::vector<double> r_coef;  // Mar2: (r0, r_t, r_x...); SurrDep adds r_s...
  double p_label = 0.5;        // Mcar
  double r_n_scale = 1.0;      // VanishingLabel: r_N = c N^{-g}
  double r_n_exponent = 0.25;
  double epsilon_overlap = 0.0;  // filled by finalize_spec

  bool statistical_surrogate_holds() const {
    if (tau != 0.0) return false;
    for (double k : kappa)
      if (k != 0.0) return false;
    return true;
  }

  double r_n(long n) const {
    return r_n_scale * std::pow(static_cast<double>(n), -r_n_exponent);
  }
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

inline double abs_sum(const std::vector<double>& v, std::size_t from = 0) {
  double s = 0.0;
  for (std::size_t i = from; i < v.size(); ++i) s += std::fabs(v[i]);
  return s;
}

}  // namespace detail

// worst-case bound on each surrogate coordinate over t in {0,1}, x in the
// cube, |nu_j| <= 4 sigma; used for the SurrogateDependentR overlap check
inline std::pair<double, double> surrogate_range(const DgpSpec& spec, int j) {
  double spread = detail::abs_sum(spec.phi[j]) + kNuTruncRadius * spec.sigma_nu;
  double lo = std::min(0.0, spec.alpha[j]) - spread;
  double hi = std::max(0.0, spec.alpha[j]) + spread;
  return {lo, hi};
}

// validates dimensions and coefficients, computes the strict-overlap margin
// epsilon, rejects anything below 1e-3; VanishingLabel checks the treatment
// side only since its label rate deliberately drifts to zero with N
inline DgpSpec finalize_spec(const DgpSpec& raw) {
  DgpSpec s = raw;
  using detail::require;
  require(s.d_x >= 1, "dgp: d_x must be at least 1");
  require(s.d_s >= 1, "dgp: d_s must be at least 1");
  require(static_cast<int>(s.beta.size()) == s.d_x, "dgp: beta size mismatch");
  require(static_cast<int>(s.gamma.size()) == s.d_s, "dgp: gamma size mismatch");
  require(static_cast<int>(s.alpha.size()) == s.d_s, "dgp: alpha size mismatch");
  if (s.kappa.empty()) s.kappa.assign(s.d_x, 0.0);
  require(static_cast<int>(s.kappa.size()) == s.d_x, "dgp: kappa size mismatch");
  require(static_cast<int>(s.phi.size()) == s.d_s, "dgp: phi row count mismatch");
  for (const auto& row : s.phi)
    require(static_cast<int>(row.size()) == s.d_x, "dgp: phi column count mismatch");
  require(s.sigma_nu >= 0.0 && std::isfinite(s.sigma_nu), "dgp: sigma_nu must be nonnegative");
  require(s.sigma_eps >= 0.0 && std::isfinite(s.sigma_eps), "dgp: sigma_eps must be nonnegative");
  require(static_cast<int>(s.e_coef.size()) == s.d_x + 1, "dgp: e_coef needs intercept plus d_x terms");

  double e_span = detail::abs_sum(s.e_coef, 1);
  double e_lo = sigmoid(s.e_coef[0] - e_span);
  double e_hi = sigmoid(s.e_coef[0] + e_span);
  double eps = std::min(e_lo, 1.0 - e_hi);

  switch (s.family) {
    case DgpFamily::Mar2: {
      require(static_cast<int>(s.r_coef.size()) == s.d_x + 2, "dgp: mar2 r_coef needs (r0, r_t, r_x...)");
      double arg = s.r_coef[0] + std::min(0.0, s.r_coef[1]) - detail::abs_sum(s.r_coef, 2);
      eps = std::min(eps, sigmoid(arg));
      break;
    }
    case DgpFamily::SurrogateDependentR: {
      require(static_cast<int>(s.r_coef.size()) == s.d_x + s.d_s + 2,
              "dgp: surrogate_dependent_r r_coef needs (r0, r_t, r_x..., r_s...)");
      double arg = s.r_coef[0] + std::min(0.0, s.r_coef[1]);
      for (int i = 0; i < s.d_x; ++i) arg -= std::fabs(s.r_coef[2 + i]);
      for (int j = 0; j < s.d_s; ++j) {
        double c = s.r_coef[2 + s.d_x + j];
        auto [lo, hi] = surrogate_range(s, j);
        arg += std::min(c * lo, c * hi);
      }
      eps = std::min(eps, sigmoid(arg));
      break;
    }
    case DgpFamily::Mcar: {
      require(s.p_label > 0.0 && s.p_label <= 1.0, "dgp: mcar p_label must lie in (0,1]");
      eps = std::min(eps, s.p_label);
      break;
    }
    case DgpFamily::VanishingLabel: {
      require(s.r_n_scale > 0.0, "dgp: vanishing label scale must be positive");
      require(s.r_n_exponent > 0.0 && s.r_n_exponent < 0.5,
              "dgp: vanishing label exponent must lie in (0, 1/2)");
      break;
    }
  }
  require(std::isfinite(eps), "dgp: overlap margin is not finite");
  if (eps < 1e-3)
    throw ValidationError("dgp: overlap margin " + std::to_string(eps) + " below 1e-3");
  s.epsilon_overlap = eps;
  return s;
}

// the benchmark design: d_x = d_s = 1, delta* = 2, moderate labelling
inline DgpSpec lg1_spec() {
  DgpSpec s;
  s.family = DgpFamily::Mar2;
  s.d_x = 1;
  s.d_s = 1;
  s.tau = 1.0;
  s.beta = {1.0};
  s.gamma = {0.5};
  s.alpha = {2.0};
  s.phi = {{0.5}};
  s.sigma_nu = 1.0;
  s.sigma_eps = 1.0;
  s.e_coef = {0.0, 0.5};
  s.r_coef = {1.0, 0.5, 0.5};
  return finalize_spec(s);
}

// one structural draw with every noise realized; generate() masks y by r,
// the bounds oracle reuses the same draw to build both potential arms
struct UnitDraw {
  std::vector<double> x;
  int t = 0;
  std::vector<double> nu;
  std::vector<double> s;
  int r = 0;
  double eps = 0.0;
  double y = 0.0;
};

inline double dot_with_intercept(const std::vector<double>& coef, const std::vector<double>& x) {
  double z = coef[0];
  for (std::size_t i = 0; i < x.size(); ++i) z += coef[1 + i] * x[i];
  return z;
}

inline double e_star_of(const DgpSpec& spec, const std::vector<double>& x) {
  return sigmoid(dot_with_intercept(spec.e_coef, x));
}

inline double r_star_arg(const DgpSpec& spec, int t, const std::vector<double>& x,
                         const std::vector<double>& s) {
  double z = spec.r_coef[0] + spec.r_coef[1] * t;
  for (int i = 0; i < spec.d_x; ++i) z += spec.r_coef[2 + i] * x[i];
  if (spec.family == DgpFamily::SurrogateDependentR)
    for (int j = 0; j < spec.d_s; ++j) z += spec.r_coef[2 + spec.d_x + j] * s[j];
  return z;
}

inline std::vector<double> surrogate_mean(const DgpSpec& spec, int t, const std::vector<double>& x) {
  std::vector<double> m(spec.d_s);
  for (int j = 0; j < spec.d_s; ++j) {
    double v = spec.alpha[j] * t;
    for (int i = 0; i < spec.d_x; ++i) v += spec.phi[j][i] * x[i];
    m[j] = v;
  }
  return m;
}

inline double outcome_mean(const DgpSpec& spec, int t, const std::vector<double>& x,
                           const std::vector<double>& s) {
  double v = spec.tau * t;
  for (int i = 0; i < spec.d_x; ++i) v += spec.beta[i] * x[i];
  if (t == 1 && !spec.kappa.empty())
    for (int i = 0; i < spec.d_x; ++i) v += spec.kappa[i] * x[i];
  for (int j = 0; j < spec.d_s; ++j) v += spec.gamma[j] * s[j];
  return v;
}

// label_prob < 0 means "use the family's own labelling model"
inline UnitDraw draw_unit(const DgpSpec& spec, Rng& rng, double label_prob = -1.0) {
  UnitDraw u;
  u.x.resize(spec.d_x);
  for (int i = 0; i < spec.d_x; ++i) u.x[i] = rng.uniform(-1.0, 1.0);
  u.t = rng.bernoulli(e_star_of(spec, u.x)) ? 1 : 0;
  u.nu.resize(spec.d_s);
  for (int j = 0; j < spec.d_s; ++j) {
    double z = spec.family == DgpFamily::SurrogateDependentR ? rng.truncated_normal(kNuTruncRadius)
                                                             : rng.normal();
    u.nu[j] = spec.sigma_nu * z;
  }
  u.s = surrogate_mean(spec, u.t, u.x);
  for (int j = 0; j < spec.d_s; ++j) u.s[j] += u.nu[j];
  double p;
  switch (spec.family) {
    case DgpFamily::Mar2:
    case DgpFamily::SurrogateDependentR:
      p = sigmoid(r_star_arg(spec, u.t, u.x, u.s));
      break;
    case DgpFamily::Mcar:
      p = spec.p_label;
      break;
    case DgpFamily::VanishingLabel:
      p = label_prob;
      break;
  }
  if (spec.family == DgpFamily::VanishingLabel && !(p > 0.0 && p <= 1.0))
    throw ValidationError("dgp: vanishing label rate outside (0,1]");
  u.r = rng.bernoulli(p) ? 1 : 0;
  u.eps = rng.normal();
  u.y = outcome_mean(spec, u.t, u.x, u.s) + spec.sigma_eps * u.eps;
  return u;
}

inline Dataset generate(const DgpSpec& raw, long n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("generate: n must be positive");
  DgpSpec spec = finalize_spec(raw);
  double label_prob = -1.0;
  if (spec.family == DgpFamily::VanishingLabel) {
    label_prob = spec.r_n(n);
    if (!(label_prob > 0.0 && label_prob <= 1.0))
      throw ValidationError("generate: vanishing label rate r_N(n) outside (0,1]");
  }
  Dataset data;
  data.d_x = spec.d_x;
  data.d_s = spec.d_s;
  data.obs.reserve(n);
  Rng rng(derive_seed(seed, 0x67656e65ULL));
  for (long i = 0; i < n; ++i) {
    UnitDraw u = draw_unit(spec, rng, label_prob);
    Observation o;
    o.x = std::move(u.x);
    o.t = u.t;
    o.s = std::move(u.s);
    o.r = u.r;
    if (u.r == 1) o.y = u.y;
    data.obs.push_back(std::move(o));
  }
  return data;
}

// deterministic expectation over X ~ Uniform(-1,1)^{d_x}: tensor
// Gauss-Legendre up to dimension three, Halton beyond
inline double expectation_over_x(int d_x, const std::function<double(const std::vector<double>&)>& f) {
  if (d_x <= 3) {
    int m = d_x == 1 ? 64 : (d_x == 2 ? 32 : 20);
    auto q = gauss_legendre(m);
    std::vector<int> idx(d_x, 0);
    std::vector<double> x(d_x);
    double total = 0.0;
    for (;;) {
      double w = 1.0;
      for (int d = 0; d < d_x; ++d) {
        x[d] = q.nodes[idx[d]];
        w *= q.weights[idx[d]] * 0.5;  // uniform density on [-1,1]
      }
      total += w * f(x);
      int d = 0;
      for (; d < d_x; ++d) {
        if (++idx[d] < m) break;
        idx[d] = 0;
      }
      if (d == d_x) break;
    }
    return total;
  }
  static const int primes[8] = {2, 3, 5, 7, 11, 13, 17, 19};
  const long npts = 1 << 16;
  std::vector<double> x(d_x);
  std::vector<double> vals(npts);
  for (long i = 0; i < npts; ++i) {
    for (int d = 0; d < d_x; ++d)
      x[d] = 2.0 * radical_inverse(static_cast<std::uint64_t>(i) + 1, primes[d]) - 1.0;
    vals[i] = f(x);
  }
  return pairwise_mean(vals);
}

// quadrature grid over the surrogate noise vector, weights fold in the
// (possibly truncated) normal density; supports the conditional integrals
// q_t(x) = P(R=1|T=t,X=x) and E[nu_j r | t, x] for SurrogateDependentR
struct NuQuadrature {
  std::vector<std::vector<double>> nodes;
  std::vector<double> weights;
};

inline NuQuadrature make_nu_quadrature(const DgpSpec& spec) {
  NuQuadrature nq;
  if (spec.sigma_nu == 0.0 || spec.d_s == 0) {
    nq.nodes.push_back(std::vector<double>(spec.d_s, 0.0));
    nq.weights.push_back(1.0);
    return nq;
  }
  if (spec.d_s > 3)
    throw ValidationError("dgp: surrogate_dependent_r truth oracle supports d_s <= 3");
  int m = spec.d_s == 1 ? 48 : (spec.d_s == 2 ? 24 : 16);
  auto gl = gauss_legendre(m);
  // one-dimensional nodes on [-4s, 4s] weighted by the truncated normal pdf
  double z = std::erf(kNuTruncRadius / std::sqrt(2.0));  // truncation mass
  std::vector<double> n1(m), w1(m);
  for (int i = 0; i < m; ++i) {
    double v = gl.nodes[i] * kNuTruncRadius * spec.sigma_nu;
    double pdf = std::exp(-0.5 * v * v / (spec.sigma_nu * spec.sigma_nu)) /
                 (spec.sigma_nu * std::sqrt(2.0 * M_PI)) / z;
    n1[i] = v;
    w1[i] = gl.weights[i] * kNuTruncRadius * spec.sigma_nu * pdf;
  }
  std::vector<int> idx(spec.d_s, 0);
  for (;;) {
    std::vector<double> node(spec.d_s);
    double w = 1.0;
    for (int d = 0; d < spec.d_s; ++d) {
      node[d] = n1[idx[d]];
      w *= w1[idx[d]];
    }
    nq.nodes.push_back(std::move(node));
    nq.weights.push_back(w);
    int d = 0;
    for (; d < spec.d_s; ++d) {
      if (++idx[d] < m) break;
      idx[d] = 0;
    }
    if (d == spec.d_s) break;
  }
  return nq;
}

// true nuisance functions plus the scalar targets they imply; for the
// VanishingLabel family r* depends on the sample size, so construct with n
struct TruthFunctions {
  DgpSpec spec;
  double delta_star = 0.0;
  double xi1 = 0.0;
  double xi0 = 0.0;
  double p_label_marginal = 0.0;  // P(R=1); VanishingLabel: r_N(n), 0 in the limit
  double vanishing_r = -1.0;
  double mu_t_coef = 0.0;
  std::vector<double> mu_x_coef;
  NuQuadrature nuq;  // SurrogateDependentR only

  double e_star(const std::vector<double>& x) const { return e_star_of(spec, x); }

  double r_star(int t, const std::vector<double>& x, const std::vector<double>& s) const {
    switch (spec.family) {
      case DgpFamily::Mar2:
      case DgpFamily::SurrogateDependentR:
        return sigmoid(r_star_arg(spec, t, x, s));
      case DgpFamily::Mcar:
        return spec.p_label;
      case DgpFamily::VanishingLabel:
        if (vanishing_r < 0.0)
          throw ValidationError("truth: vanishing-label r* needs the sample size");
        return vanishing_r;
    }
    throw ValidationError("bad family");
  }

  double mu_tilde_star(int t, const std::vector<double>& x, const std::vector<double>& s) const {
    return outcome_mean(spec, t, x, s);
  }

  // P(R=1 | T=t, X=x), integrating the labelling model over surrogate noise
  double q_t(int t, const std::vector<double>& x) const {
    switch (spec.family) {
      case DgpFamily::Mar2: {
        std::vector<double> s;
        return sigmoid(r_star_arg(spec, t, x, s));
      }
      case DgpFamily::SurrogateDependentR: {
        auto base = surrogate_mean(spec, t, x);
        double acc = 0.0;
        for (std::size_t i = 0; i < nuq.nodes.size(); ++i) {
          double z = spec.r_coef[0] + spec.r_coef[1] * t;
          for (int j = 0; j < spec.d_x; ++j) z += spec.r_coef[2 + j] * x[j];
          for (int j = 0; j < spec.d_s; ++j)
            z += spec.r_coef[2 + spec.d_x + j] * (base[j] + nuq.nodes[i][j]);
          acc += nuq.weights[i] * sigmoid(z);
        }
        return acc;
      }
      case DgpFamily::Mcar:
        return spec.p_label;
      case DgpFamily::VanishingLabel:
        if (vanishing_r < 0.0)
          throw ValidationError("truth: vanishing-label r* needs the sample size");
        return vanishing_r;
    }
    throw ValidationError("bad family");
  }

  double p_r_given_x(const std::vector<double>& x) const {
    double e = e_star(x);
    return e * q_t(1, x) + (1.0 - e) * q_t(0, x);
  }

  double lambda_star(const std::vector<double>& x) const {
    switch (spec.family) {
      case DgpFamily::Mcar:
      case DgpFamily::VanishingLabel:
        return 1.0;
      default:
        return p_label_marginal / p_r_given_x(x);
    }
  }

  double mu_star(int t, const std::vector<double>& x) const {
    double inter = 0.0;
    if (t == 1 && !spec.kappa.empty())
      for (int i = 0; i < spec.d_x; ++i) inter += spec.kappa[i] * x[i];
    if (spec.family != DgpFamily::SurrogateDependentR) {
      double v = mu_t_coef * t + inter;
      for (int i = 0; i < spec.d_x; ++i) v += mu_x_coef[i] * x[i];
      return v;
    }
    // E[Y | T=t, X=x, R=1] = tau t + beta'x + gamma' E[S | t, x, R=1]
    auto base = surrogate_mean(spec, t, x);
    double num_gs = 0.0, den = 0.0;
    for (std::size_t i = 0; i < nuq.nodes.size(); ++i) {
      double z = spec.r_coef[0] + spec.r_coef[1] * t;
      for (int j = 0; j < spec.d_x; ++j) z += spec.r_coef[2 + j] * x[j];
      double gnu = 0.0;
      for (int j = 0; j < spec.d_s; ++j) {
        z += spec.r_coef[2 + spec.d_x + j] * (base[j] + nuq.nodes[i][j]);
        gnu += spec.gamma[j] * nuq.nodes[i][j];
      }
      double rw = nuq.weights[i] * sigmoid(z);
      num_gs += rw * gnu;
      den += rw;
    }
    double v = spec.tau * t + inter;
    for (int i = 0; i < spec.d_x; ++i) v += spec.beta[i] * x[i];
    for (int j = 0; j < spec.d_s; ++j) v += spec.gamma[j] * base[j];
    return v + num_gs / den;
  }

  // density ratio f(s | x, t) / f(s | x, t, R=1) = P(R=1|t,x) / r*(t,x,s)
  double lambda_t_star(int t, const std::vector<double>& x, const std::vector<double>& s) const {
    return q_t(t, x) / r_star(t, x, s);
  }

  // P(T=1 | R=1, X=x)
  double e_labelled(const std::vector<double>& x) const {
    double e = e_star(x);
    return e * q_t(1, x) / p_r_given_x(x);
  }
};

inline TruthFunctions truth_functions(const DgpSpec& raw, long n_for_vanishing = 0) {
  TruthFunctions tf;
  tf.spec = finalize_spec(raw);
  const DgpSpec& s = tf.spec;
  double ga = 0.0;
  for (int j = 0; j < s.d_s; ++j) ga += s.gamma[j] * s.alpha[j];
  tf.delta_star = s.tau + ga;
  tf.xi1 = tf.delta_star;  // E[X] = 0 so covariate terms drop from the means
  tf.xi0 = 0.0;
  tf.mu_t_coef = s.tau + ga;
  tf.mu_x_coef.resize(s.d_x);
  for (int i = 0; i < s.d_x; ++i) {
    double v = s.beta[i];
    for (int j = 0; j < s.d_s; ++j) v += s.phi[j][i] * s.gamma[j];
    tf.mu_x_coef[i] = v;
  }
  if (s.family == DgpFamily::SurrogateDependentR) tf.nuq = make_nu_quadrature(s);
  switch (s.family) {
    case DgpFamily::Mcar:
      tf.p_label_marginal = s.p_label;
      break;
    case DgpFamily::VanishingLabel:
      if (n_for_vanishing > 0) {
        tf.vanishing_r = s.r_n(n_for_vanishing);
        if (!(tf.vanishing_r > 0.0 && tf.vanishing_r <= 1.0))
          throw ValidationError("truth: vanishing label rate r_N(n) outside (0,1]");
        tf.p_label_marginal = tf.vanishing_r;
      } else {
        tf.p_label_marginal = 0.0;
      }
      break;
    default:
      tf.p_label_marginal =
          expectation_over_x(s.d_x, [&](const std::vector<double>& x) { return tf.p_r_given_x(x); });
  }
  return tf;
}

// ---- json ----

inline nlohmann::json to_json(const DgpSpec& s) {
  nlohmann::json j;
  j["family"] = to_string(s.family);
  j["d_x"] = s.d_x;
  j["d_s"] = s.d_s;
  j["tau"] = s.tau;
  j["beta"] = s.beta;
  j["gamma"] = s.gamma;
  j["alpha"] = s.alpha;
  j["kappa"] = s.kappa;
  j["phi"] = s.phi;
  j["sigma_nu"] = s.sigma_nu;
  j["sigma_eps"] = s.sigma_eps;
  j["e_coef"] = s.e_coef;
  switch (s.family) {
    case DgpFamily::Mar2:
    case DgpFamily::SurrogateDependentR:
      j["r_coef"] = s.r_coef;
      break;
    case DgpFamily::Mcar:
      j["p_label"] = s.p_label;
      break;
    case DgpFamily::VanishingLabel:
      j["r_n_scale"] = s.r_n_scale;
      j["r_n_exponent"] = s.r_n_exponent;
      break;
  }
  j["epsilon_overlap"] = s.epsilon_overlap;
  return j;
}

inline DgpSpec dgp_spec_from_json(const nlohmann::json& j) {
  DgpSpec s;
  try {
    s.family = family_from_string(j.at("family").get<std::string>());
    s.d_x = j.at("d_x").get<int>();
    s.d_s = j.at("d_s").get<int>();
    s.tau = j.at("tau").get<double>();
    s.beta = j.at("beta").get<std::vector<double>>();
    s.gamma = j.at("gamma").get<std::vector<double>>();
    s.alpha = j.at("alpha").get<std::vector<double>>();
    if (j.contains("kappa")) s.kappa = j.at("kappa").get<std::vector<double>>();
    s.phi = j.at("phi").get<std::vector<std::vector<double>>>();
    s.sigma_nu = j.at("sigma_nu").get<double>();
    s.sigma_eps = j.at("sigma_eps").get<double>();
    s.e_coef = j.at("e_coef").get<std::vector<double>>();
    if (j.contains("r_coef")) s.r_coef = j.at("r_coef").get<std::vector<double>>();
    if (j.contains("p_label")) s.p_label = j.at("p_label").get<double>();
    if (j.contains("r_n_scale")) s.r_n_scale = j.at("r_n_scale").get<double>();
    if (j.contains("r_n_exponent")) s.r_n_exponent = j.at("r_n_exponent").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("dgp spec json: ") + e.what());
  }
  return finalize_spec(s);
}

}  // namespace sate
