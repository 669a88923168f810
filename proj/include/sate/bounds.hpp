#pragma once

// oracle evaluation of the efficiency lower bounds, gains, and gaps implied
// by a DgpSpec: every quantity is an expectation over the true DGP with true
// nuisance functions plugged in, so nothing here depends on learners.  Each
// bound is computed twice where possible -- Monte-Carlo mean of the squared
// influence function, and the closed-form decomposition with the outer
// X-expectation done by randomized quasi-Monte-Carlo -- and the two lanes are
// cross-checked before a BoundSet is returned.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sate/dgp.hpp"
#include "sate/influence.hpp"

namespace sate {

enum class BoundId {
  VStar,             // v_star: general efficiency bound, sqrt(N) scale
  VI,                // v_I: setting-I bound (labels by (t,x), residuals vs mu)
  VII,               // v_II: setting-II bound (same functional as v_I)
  VIII,              // v_III: setting-III bound (general score with r(t,x))
  VIV,               // v_IV: fully labelled AIPW bound
  GainI_III,         // v_I - v_III
  GapIII_IV,         // v_III - v_IV
  VTildeStar,        // labelled-only residual score bound, sqrt(N_l) scale
  VTilde,            // v_tilde_star plus the P(R=1)-weighted remainder terms
  MCARTrio,          // v_i, v_ii, v_iii at the labelled scale (MCAR only)
  ZbGap,             // imputation-estimator variance gap (MCAR only)
  GeneralExtension,  // labelled-only score with surrogate-dependent labelling
};

inline std::string to_string(BoundId id) {
  switch (id) {
    case BoundId::VStar: return "v_star";
    case BoundId::VI: return "v_I";
    case BoundId::VII: return "v_II";
    case BoundId::VIII: return "v_III";
    case BoundId::VIV: return "v_IV";
    case BoundId::GainI_III: return "gain_I_III";
    case BoundId::GapIII_IV: return "gap_III_IV";
    case BoundId::VTildeStar: return "v_tilde_star";
    case BoundId::VTilde: return "v_tilde";
    case BoundId::MCARTrio: return "mcar_trio";
    case BoundId::ZbGap: return "zb_gap";
    case BoundId::GeneralExtension: return "general_extension";
  }
  throw ValidationError("bounds: bad bound id");
}

inline BoundId bound_id_from_string(const std::string& s) {
  static const std::vector<BoundId> all = {
      BoundId::VStar,      BoundId::VI,         BoundId::VII,
      BoundId::VIII,       BoundId::VIV,        BoundId::GainI_III,
      BoundId::GapIII_IV,  BoundId::VTildeStar, BoundId::VTilde,
      BoundId::MCARTrio,   BoundId::ZbGap,      BoundId::GeneralExtension};
  for (BoundId id : all)
    if (to_string(id) == s) return id;
  throw ValidationError("bounds: unknown bound identifier '" + s + "'");
}

inline std::vector<BoundId> all_bound_ids() {
  return {BoundId::VStar,      BoundId::VI,         BoundId::VII,
          BoundId::VIII,       BoundId::VIV,        BoundId::GainI_III,
          BoundId::GapIII_IV,  BoundId::VTildeStar, BoundId::VTilde,
          BoundId::MCARTrio,   BoundId::ZbGap,      BoundId::GeneralExtension};
}

// can this bound be evaluated for the family?  settings I-IV and their
// gain/gap need labelling that ignores the surrogate; the MCAR trio and the
// imputation gap are defined for constant labelling; the general extension
// needs surrogate-dependent labelling for its density ratios to be nontrivial
inline bool bound_applicable(BoundId id, const DgpSpec& spec) {
  switch (spec.family) {
    case DgpFamily::Mar2:
      switch (id) {
        case BoundId::VStar:
        case BoundId::VI:
        case BoundId::VII:
        case BoundId::VIII:
        case BoundId::VIV:
        case BoundId::GainI_III:
        case BoundId::GapIII_IV:
        case BoundId::VTildeStar:
        case BoundId::VTilde: return true;
        default: return false;
      }
    case DgpFamily::Mcar:
      if (id == BoundId::GeneralExtension) return false;
      if (id == BoundId::ZbGap) return spec.p_label < 1.0;
      return true;
    case DgpFamily::SurrogateDependentR:
      switch (id) {
        case BoundId::VStar:
        case BoundId::VTildeStar:
        case BoundId::VTilde:
        case BoundId::GeneralExtension: return true;
        default: return false;
      }
    case DgpFamily::VanishingLabel:
      return id == BoundId::VTildeStar || id == BoundId::VTilde;
  }
  return false;
}

struct BoundValue {
  double value = 0.0;
  double se = 0.0;
  std::string method;  // "monte_carlo" or "closed_form"
  long n_mc = 0;
};

struct BoundSet {
  std::map<std::string, BoundValue> entries;

  bool has(const std::string& name) const { return entries.count(name) > 0; }

  const BoundValue& at(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw ValidationError("bounds: no entry named '" + name + "'");
    return it->second;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, bv] : entries) {
      j[name] = {{"value", bv.value}, {"se", bv.se}, {"method", bv.method}, {"n_mc", bv.n_mc}};
    }
    return j;
  }
};

struct BoundRequest {
  DgpSpec spec;
  std::vector<BoundId> which;  // empty = everything applicable to the family
  long mc_budget = 1000000;
  std::uint64_t seed = 1;
};

namespace detail {

// streaming mean/variance so a million-draw loop needs no storage
struct McAcc {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    ++n;
    double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double se() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / (static_cast<double>(n) - 1.0) / static_cast<double>(n));
  }
  BoundValue to_bound() const { return BoundValue{mean, se(), "monte_carlo", n}; }
};

// conditional inner moments over the surrogate noise at a fixed (t, x).
// For families whose labelling ignores s these are exact Gaussian moments;
// for surrogate-dependent labelling they are integrals against the same
// truncated-normal rule the data generator uses.
struct ArmInner {
  double q = 1.0;          // P(R=1 | T=t, X=x)
  double y2_over_r = 0.0;  // E[(mu~^2 + sigma_eps^2) / r]
  double loss = 0.0;       // E[((1-r)/r) mu~^2]
  double inv_r = 0.0;      // E[1/r]
};

}  // namespace detail

inline BoundSet compute_bounds(const BoundRequest& req) {
  if (req.mc_budget < 10000)
    throw ValidationError("bounds: insufficient Monte Carlo budget (need at least 10^4)");
  const DgpSpec spec = finalize_spec(req.spec);

  std::vector<BoundId> want = req.which;
  if (want.empty()) {
    for (BoundId id : all_bound_ids())
      if (bound_applicable(id, spec)) want.push_back(id);
  } else {
    for (BoundId id : want) {
      if (bound_applicable(id, spec)) continue;
      if (spec.family == DgpFamily::Mcar && id == BoundId::ZbGap)
        throw ValidationError("bounds: zb_gap requires p_label < 1");
      throw ValidationError("bounds: " + to_string(id) + " not defined for family " +
                            to_string(spec.family));
    }
  }
  auto wanted = [&](BoundId id) {
    for (BoundId w : want)
      if (w == id) return true;
    return false;
  };

  auto tf = std::make_shared<const TruthFunctions>(truth_functions(spec));
  const double delta = tf->delta_star;
  const double p_marg = tf->p_label_marginal;
  const double s2 = spec.sigma_eps * spec.sigma_eps;
  const bool vanishing = spec.family == DgpFamily::VanishingLabel;
  const bool surr_dep = spec.family == DgpFamily::SurrogateDependentR;

  // Var(gamma' nu): exact for Gaussian noise, quadrature when truncated
  double gamma_var = 0.0;
  if (surr_dep) {
    for (std::size_t i = 0; i < tf->nuq.nodes.size(); ++i) {
      double g = 0.0;
      for (int j = 0; j < spec.d_s; ++j) g += spec.gamma[j] * tf->nuq.nodes[i][j];
      gamma_var += tf->nuq.weights[i] * g * g;
    }
  } else {
    for (int j = 0; j < spec.d_s; ++j) gamma_var += spec.gamma[j] * spec.gamma[j];
    gamma_var *= spec.sigma_nu * spec.sigma_nu;
  }

  // conditional mean of mu~ given (t, x): the outcome regression at the mean
  // surrogate (mu~ is linear in s and the noise is symmetric)
  auto mu_bar = [&spec](int t, const std::vector<double>& x) {
    return outcome_mean(spec, t, x, surrogate_mean(spec, t, x));
  };
  auto dev_of = [&](const std::vector<double>& x) {
    return mu_bar(1, x) - mu_bar(0, x) - delta;
  };

  auto inner = [&](int t, const std::vector<double>& x) {
    detail::ArmInner a;
    if (!surr_dep) {
      double r = tf->q_t(t, x);
      double m2 = mu_bar(t, x);
      m2 = m2 * m2 + gamma_var;
      a.q = r;
      a.y2_over_r = (m2 + s2) / r;
      a.loss = (1.0 - r) / r * m2;
      a.inv_r = 1.0 / r;
      return a;
    }
    auto base = surrogate_mean(spec, t, x);
    double mb = mu_bar(t, x);
    std::vector<double> s(spec.d_s);
    a.q = 0.0;
    for (std::size_t i = 0; i < tf->nuq.nodes.size(); ++i) {
      double g = 0.0;
      for (int j = 0; j < spec.d_s; ++j) {
        s[j] = base[j] + tf->nuq.nodes[i][j];
        g += spec.gamma[j] * tf->nuq.nodes[i][j];
      }
      double r = sigmoid(r_star_arg(spec, t, x, s));
      double mt = mb + g;
      double w = tf->nuq.weights[i];
      a.q += w * r;
      a.y2_over_r += w * (mt * mt + s2) / r;
      a.loss += w * (1.0 - r) / r * mt * mt;
      a.inv_r += w / r;
    }
    return a;
  };

  // ---- closed-form lane: randomized quasi-MC over X ~ Uniform(-1,1)^d ----

  Rng rng_closed(derive_seed(req.seed, 0x636c6f73ULL));
  const long kQmcPoints = 4096;
  const int kQmcReps = 8;
  auto closed_of = [&](const std::function<double(const std::vector<double>&)>& h,
                       double constant) {
    std::vector<double> x(spec.d_x);
    auto res = qmc_mean(
        [&](const std::vector<double>& u) {
          for (int d = 0; d < spec.d_x; ++d) x[d] = 2.0 * u[d] - 1.0;
          return h(x);
        },
        spec.d_x, kQmcPoints, kQmcReps, rng_closed);
    return BoundValue{res.mean + constant, res.se, "closed_form", res.n_points};
  };
  auto combine = [](double value, double se_sq) {
    return BoundValue{value, std::sqrt(se_sq), "closed_form", kQmcPoints * kQmcReps};
  };

  const bool pooled_ok = wanted(BoundId::VStar) && spec.statistical_surrogate_holds() &&
                         spec.d_s > 0 && spec.sigma_nu > 0.0;

  BoundValue v_star_c, v_i_cap_c, v_iii_cap_c, v_iv_cap_c, gain_c, gap_c;
  BoundValue vts_c, vx_c, vadj_c, cterm_c, ge_c;

  if (wanted(BoundId::VStar)) {
    v_star_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          auto a1 = inner(1, x);
          auto a0 = inner(0, x);
          double m1 = mu_bar(1, x), m0 = mu_bar(0, x);
          double mid = std::sqrt((1.0 - e) / e) * m1 + std::sqrt(e / (1.0 - e)) * m0;
          return a1.y2_over_r / e + a0.y2_over_r / (1.0 - e) - mid * mid - a1.loss / e -
                 a0.loss / (1.0 - e);
        },
        -delta * delta);
  }
  if (wanted(BoundId::VI) || wanted(BoundId::VII)) {
    v_i_cap_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          double r1 = tf->q_t(1, x), r0 = tf->q_t(0, x);
          double m1 = mu_bar(1, x), m0 = mu_bar(0, x);
          double p0 = 1.0 - (e * r1 + (1.0 - e) * r0);
          double mid = std::sqrt((1.0 - e) / e * r0 / r1) * m1 +
                       std::sqrt(e / (1.0 - e) * r1 / r0) * m0;
          return (m1 * m1 + gamma_var + s2) / (e * r1) +
                 (m0 * m0 + gamma_var + s2) / ((1.0 - e) * r0) -
                 p0 * (m1 * m1 / (e * r1) + m0 * m0 / ((1.0 - e) * r0)) - mid * mid;
        },
        -delta * delta);
  }
  if (wanted(BoundId::VIII)) {
    v_iii_cap_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          double r1 = tf->q_t(1, x), r0 = tf->q_t(0, x);
          double m1 = mu_bar(1, x), m0 = mu_bar(0, x);
          double m2_1 = m1 * m1 + gamma_var, m2_0 = m0 * m0 + gamma_var;
          double mid = std::sqrt((1.0 - e) / e) * m1 + std::sqrt(e / (1.0 - e)) * m0;
          return (m2_1 + s2) / (e * r1) + (m2_0 + s2) / ((1.0 - e) * r0) - mid * mid -
                 (1.0 - r1) / r1 * m2_1 / e - (1.0 - r0) / r0 * m2_0 / (1.0 - e);
        },
        -delta * delta);
  }
  if (wanted(BoundId::VIV)) {
    v_iv_cap_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          double m1 = mu_bar(1, x), m0 = mu_bar(0, x);
          double mid = std::sqrt((1.0 - e) / e) * m1 + std::sqrt(e / (1.0 - e)) * m0;
          return (m1 * m1 + gamma_var + s2) / e + (m0 * m0 + gamma_var + s2) / (1.0 - e) -
                 mid * mid;
        },
        -delta * delta);
  }
  if (wanted(BoundId::GainI_III)) {
    gain_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          double r1 = tf->q_t(1, x), r0 = tf->q_t(0, x);
          return gamma_var * ((1.0 - r1) / r1 / e + (1.0 - r0) / r0 / (1.0 - e));
        },
        0.0);
  }
  if (wanted(BoundId::GapIII_IV)) {
    gap_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          double r1 = tf->q_t(1, x), r0 = tf->q_t(0, x);
          return s2 * ((1.0 - r1) / r1 / e + (1.0 - r0) / r0 / (1.0 - e));
        },
        0.0);
  }
  if (wanted(BoundId::VTildeStar) || wanted(BoundId::VTilde)) {
    vts_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          double lam = tf->lambda_star(x);
          double q1 = vanishing ? 1.0 : tf->q_t(1, x) / p_marg;
          double q0 = vanishing ? 1.0 : tf->q_t(0, x) / p_marg;
          return s2 * lam * lam * (q1 / e + q0 / (1.0 - e));
        },
        0.0);
  }
  if (wanted(BoundId::VTilde) || wanted(BoundId::MCARTrio) || wanted(BoundId::ZbGap)) {
    vx_c = closed_of(
        [&](const std::vector<double>& x) {
          double d = dev_of(x);
          return d * d;
        },
        0.0);
    vadj_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          return gamma_var * (1.0 / e + 1.0 / (1.0 - e));
        },
        0.0);
  }
  if (wanted(BoundId::MCARTrio) || wanted(BoundId::ZbGap)) {
    cterm_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          return s2 * (1.0 / e + 1.0 / (1.0 - e));
        },
        0.0);
  }
  if (wanted(BoundId::GeneralExtension)) {
    ge_c = closed_of(
        [&](const std::vector<double>& x) {
          double e = tf->e_star(x);
          double el = tf->e_labelled(x);
          double lam = tf->lambda_star(x);
          auto a1 = inner(1, x);
          auto a0 = inner(0, x);
          return (s2 / p_marg) * lam * lam *
                 (e * a1.q * a1.q * a1.inv_r / (el * el) +
                  (1.0 - e) * a0.q * a0.q * a0.inv_r / ((1.0 - el) * (1.0 - el)));
        },
        0.0);
  }

  // ---- Monte-Carlo lane: one draw stream feeds every requested integrand ----

  NuisanceHandles truth;
  truth.e = [tf](const std::vector<double>& x) { return tf->e_star(x); };
  truth.r = [tf](int t, const std::vector<double>& x, const std::vector<double>& s) {
    return tf->r_star(t, x, s);
  };
  truth.mu_tilde = [tf](int t, const std::vector<double>& x, const std::vector<double>& s) {
    return tf->mu_tilde_star(t, x, s);
  };
  truth.mu = [&spec](int t, const std::vector<double>& x) {
    return outcome_mean(spec, t, x, surrogate_mean(spec, t, x));
  };
  truth.lambda = [tf](const std::vector<double>& x) { return tf->lambda_star(x); };

  // pooled outcome regression: mixture of the two arm regressions weighted by
  // the conditional law of the arm given (x, s) among labelled units
  NuisanceHandles pooled = truth;
  if (pooled_ok) {
    const double trunc_z = std::erf(kNuTruncRadius / std::sqrt(2.0));
    auto nu_density = [&spec, trunc_z](int t, const std::vector<double>& x,
                                       const std::vector<double>& s) {
      auto base = surrogate_mean(spec, t, x);
      double f = 1.0;
      for (int j = 0; j < spec.d_s; ++j) {
        double v = s[j] - base[j];
        if (spec.family == DgpFamily::SurrogateDependentR &&
            std::abs(v) > kNuTruncRadius * spec.sigma_nu)
          return 0.0;
        double pdf = std::exp(-0.5 * v * v / (spec.sigma_nu * spec.sigma_nu)) /
                     (spec.sigma_nu * std::sqrt(2.0 * M_PI));
        if (spec.family == DgpFamily::SurrogateDependentR) pdf /= trunc_z;
        f *= pdf;
      }
      return f;
    };
    pooled.mu_tilde = [tf, nu_density](int, const std::vector<double>& x,
                                       const std::vector<double>& s) {
      double e = tf->e_star(x);
      double w1 = e * nu_density(1, x, s) * tf->r_star(1, x, s);
      double w0 = (1.0 - e) * nu_density(0, x, s) * tf->r_star(0, x, s);
      double m1 = tf->mu_tilde_star(1, x, s);
      double m0 = tf->mu_tilde_star(0, x, s);
      if (w1 + w0 <= 0.0) return 0.5 * (m1 + m0);
      double w = w1 / (w1 + w0);
      return w * m1 + (1.0 - w) * m0;
    };
  }

  const bool need_gen = wanted(BoundId::VStar) || wanted(BoundId::VIII) ||
                        wanted(BoundId::GainI_III) || wanted(BoundId::GapIII_IV);
  const bool need_i = wanted(BoundId::VI) || wanted(BoundId::VII) || wanted(BoundId::GainI_III);
  const bool need_iv = wanted(BoundId::VIV) || wanted(BoundId::GapIII_IV);
  const bool need_tilde = wanted(BoundId::VTildeStar) || wanted(BoundId::VTilde);
  const bool need_trio = wanted(BoundId::MCARTrio);
  const bool need_zb = wanted(BoundId::ZbGap);
  const bool need_ge = wanted(BoundId::GeneralExtension);

  detail::McAcc a_star, a_pooled, a_i, a_ii, a_iii, a_iv, a_gain, a_gap;
  detail::McAcc a_vts, a_vt, a_ti, a_tii, a_tiii, a_g12, a_g23;
  detail::McAcc a_zgap, a_zour, a_zzb, a_ge;

  Rng rng_mc(derive_seed(req.seed, 0x626d6373ULL));
  Observation w;
  for (long m = 0; m < req.mc_budget; ++m) {
    UnitDraw d = draw_unit(spec, rng_mc, vanishing ? 1.0 : -1.0);
    w.x = std::move(d.x);
    w.s = std::move(d.s);
    w.t = d.t;
    w.r = vanishing ? 1 : d.r;
    w.y = d.y;

    double e = 0.0, m1 = 0.0, m0 = 0.0, dev = 0.0, mt = 0.0, adj = 0.0;
    if (need_tilde || need_trio || need_zb) {
      e = tf->e_star(w.x);
      m1 = mu_bar(1, w.x);
      m0 = mu_bar(0, w.x);
      dev = m1 - m0 - delta;
      mt = tf->mu_tilde_star(w.t, w.x, w.s);
      adj = w.t == 1 ? (mt - m1) / e : -(mt - m0) / (1.0 - e);
    }

    if (need_gen) {
      double psi = eval_psi_general(w, delta, truth);
      if (wanted(BoundId::VStar)) a_star.add(psi * psi);
      if (wanted(BoundId::VIII)) a_iii.add(psi * psi);
      double psi_i = 0.0, psi_iv = 0.0;
      if (need_i) psi_i = eval_psi_setting(InfluenceKind::PsiSettingI, w, delta, truth);
      if (wanted(BoundId::VI)) a_i.add(psi_i * psi_i);
      if (wanted(BoundId::VII)) {
        double psi_ii = eval_psi_setting(InfluenceKind::PsiSettingII, w, delta, truth);
        a_ii.add(psi_ii * psi_ii);
      }
      if (need_iv) psi_iv = eval_psi_setting(InfluenceKind::PsiSettingIV, w, delta, truth);
      if (wanted(BoundId::VIV)) a_iv.add(psi_iv * psi_iv);
      if (wanted(BoundId::GainI_III)) a_gain.add(psi_i * psi_i - psi * psi);
      if (wanted(BoundId::GapIII_IV)) a_gap.add(psi * psi - psi_iv * psi_iv);
      if (pooled_ok) {
        double psi_p = eval_psi_general(w, delta, pooled);
        a_pooled.add(psi_p * psi_p);
      }
    } else if (need_i || need_iv) {
      if (wanted(BoundId::VI)) {
        double v = eval_psi_setting(InfluenceKind::PsiSettingI, w, delta, truth);
        a_i.add(v * v);
      }
      if (wanted(BoundId::VII)) {
        double v = eval_psi_setting(InfluenceKind::PsiSettingII, w, delta, truth);
        a_ii.add(v * v);
      }
      if (wanted(BoundId::VIV)) {
        double v = eval_psi_setting(InfluenceKind::PsiSettingIV, w, delta, truth);
        a_iv.add(v * v);
      }
    }

    if (need_tilde) {
      double pt2 = 0.0;
      if (w.r == 1) {
        double pt = eval_psi_tilde(w, truth);
        pt2 = pt * pt;
        if (wanted(BoundId::VTildeStar)) a_vts.add(pt2);
      }
      if (wanted(BoundId::VTilde)) {
        if (vanishing) {
          a_vt.add(pt2);  // P(R=1) = 0: the remainder terms vanish
        } else {
          double u = (w.r == 1 ? pt2 / p_marg : 0.0) +
                     p_marg * (dev * dev + adj * adj);
          a_vt.add(u);
        }
      }
    }

    if (need_trio || need_zb) {
      double y = *w.y;
      double d_mu = w.t == 1 ? (y - m1) / e : -(y - m0) / (1.0 - e);
      if (need_trio) {
        double d_mt = w.t == 1 ? (y - mt) / e : -(y - mt) / (1.0 - e);
        double ti = d_mu * d_mu + dev * dev;
        double tii = d_mt * d_mt + p_marg * (dev * dev + adj * adj);
        double tiii = d_mt * d_mt;
        a_ti.add(ti);
        a_tii.add(tii);
        a_tiii.add(tiii);
        a_g12.add(ti - tii);
        a_g23.add(tii - tiii);
      }
      if (need_zb) {
        a_zgap.add(p_marg / (1.0 - p_marg) * dev * dev);
        a_zour.add(dev * dev + d_mu * d_mu / p_marg);
        a_zzb.add(dev * dev / (1.0 - p_marg) + d_mu * d_mu / p_marg);
      }
    }

    if (need_ge && w.r == 1) {
      double y = *w.y;
      double lam = tf->lambda_star(w.x);
      double el = tf->e_labelled(w.x);
      double psi;
      if (w.t == 1) {
        psi = lam * tf->lambda_t_star(1, w.x, w.s) / el * (y - tf->mu_tilde_star(1, w.x, w.s));
      } else {
        psi = -lam * tf->lambda_t_star(0, w.x, w.s) / (1.0 - el) *
              (y - tf->mu_tilde_star(0, w.x, w.s));
      }
      a_ge.add(psi * psi);
    }
  }

  // ---- assemble + cross-check the two lanes ----

  BoundSet out;
  std::vector<std::pair<std::string, std::pair<BoundValue, BoundValue>>> checks;
  auto emit = [&](const std::string& name, const detail::McAcc& acc, const BoundValue& closed) {
    if (acc.n == 0) throw NumericError("bounds: no Monte Carlo draws reached " + name);
    out.entries[name] = acc.to_bound();
    out.entries[name + "_closed"] = closed;
    checks.push_back({name, {acc.to_bound(), closed}});
  };

  if (wanted(BoundId::VStar)) {
    emit("v_star", a_star, v_star_c);
    if (pooled_ok) {
      if (a_pooled.n == 0) throw NumericError("bounds: no Monte Carlo draws reached v_star_pooled");
      out.entries["v_star_pooled"] = a_pooled.to_bound();
      checks.push_back({"v_star_pooled", {a_pooled.to_bound(), v_star_c}});
    }
  }
  if (wanted(BoundId::VI)) emit("v_I", a_i, v_i_cap_c);
  if (wanted(BoundId::VII)) emit("v_II", a_ii, v_i_cap_c);
  if (wanted(BoundId::VIII)) emit("v_III", a_iii, v_iii_cap_c);
  if (wanted(BoundId::VIV)) emit("v_IV", a_iv, v_iv_cap_c);
  if (wanted(BoundId::GainI_III)) emit("gain_I_III", a_gain, gain_c);
  if (wanted(BoundId::GapIII_IV)) emit("gap_III_IV", a_gap, gap_c);
  if (wanted(BoundId::VTildeStar)) emit("v_tilde_star", a_vts, vts_c);
  if (wanted(BoundId::VTilde)) {
    BoundValue vt_c = combine(
        vts_c.value + p_marg * (vx_c.value + vadj_c.value),
        vts_c.se * vts_c.se + p_marg * p_marg * (vx_c.se * vx_c.se + vadj_c.se * vadj_c.se));
    emit("v_tilde", a_vt, vt_c);
    // the remainder terms carry a factor P(R=1); at P(R=1) = 0 the bound
    // reduces to v_tilde_star exactly, bit for bit
    out.entries["v_tilde_p0"] =
        combine(vts_c.value + 0.0 * (vx_c.value + vadj_c.value), vts_c.se * vts_c.se);
  }
  if (wanted(BoundId::MCARTrio)) {
    BoundValue vi_c = combine(vadj_c.value + cterm_c.value + vx_c.value,
                              vadj_c.se * vadj_c.se + cterm_c.se * cterm_c.se + vx_c.se * vx_c.se);
    BoundValue vii_c =
        combine(cterm_c.value + p_marg * (vx_c.value + vadj_c.value),
                cterm_c.se * cterm_c.se +
                    p_marg * p_marg * (vx_c.se * vx_c.se + vadj_c.se * vadj_c.se));
    BoundValue g12_c = combine((1.0 - p_marg) * (vadj_c.value + vx_c.value),
                               (1.0 - p_marg) * (1.0 - p_marg) *
                                   (vadj_c.se * vadj_c.se + vx_c.se * vx_c.se));
    BoundValue g23_c = combine(
        p_marg * (vadj_c.value + vx_c.value),
        p_marg * p_marg * (vadj_c.se * vadj_c.se + vx_c.se * vx_c.se));
    emit("v_i", a_ti, vi_c);
    emit("v_ii", a_tii, vii_c);
    emit("v_iii", a_tiii, cterm_c);
    emit("gain_i_ii", a_g12, g12_c);
    emit("gain_ii_iii", a_g23, g23_c);
  }
  if (wanted(BoundId::ZbGap)) {
    double q = p_marg / (1.0 - p_marg);
    BoundValue zgap_c = combine(q * vx_c.value, q * q * vx_c.se * vx_c.se);
    double ed2 = vadj_c.value + cterm_c.value;
    double ed2_se2 = vadj_c.se * vadj_c.se + cterm_c.se * cterm_c.se;
    BoundValue zour_c =
        combine(vx_c.value + ed2 / p_marg, vx_c.se * vx_c.se + ed2_se2 / (p_marg * p_marg));
    BoundValue zzb_c = combine(vx_c.value / (1.0 - p_marg) + ed2 / p_marg,
                               vx_c.se * vx_c.se / ((1.0 - p_marg) * (1.0 - p_marg)) +
                                   ed2_se2 / (p_marg * p_marg));
    emit("v_zb_gap", a_zgap, zgap_c);
    emit("v_zb_our", a_zour, zour_c);
    emit("v_zb_zb", a_zzb, zzb_c);
  }
  if (wanted(BoundId::GeneralExtension)) emit("general_extension", a_ge, ge_c);

  for (const auto& [name, pair] : checks) {
    const auto& [mc, cf] = pair;
    double tol = 5.0 * std::sqrt(mc.se * mc.se + cf.se * cf.se) +
                 1e-9 * (1.0 + std::abs(cf.value));
    if (std::abs(mc.value - cf.value) > tol) {
      std::ostringstream msg;
      msg << "bound decomposition inconsistency: " << name << " monte_carlo=" << mc.value
          << " closed_form=" << cf.value << " combined_se="
          << std::sqrt(mc.se * mc.se + cf.se * cf.se);
      throw NumericError(msg.str());
    }
  }
  return out;
}

// ---- full ground-truth report ----

struct TruthReport {
  DgpSpec spec;
  double delta_star = 0.0;
  double xi1_star = 0.0;
  double xi0_star = 0.0;
  double p_label = 0.0;
  double epsilon_overlap = 0.0;
  std::shared_ptr<const TruthFunctions> functions;
  BoundSet bounds;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["spec"] = sate::to_json(spec);
    j["delta_star"] = delta_star;
    j["xi1_star"] = xi1_star;
    j["xi0_star"] = xi0_star;
    j["p_label"] = p_label;
    j["epsilon_overlap"] = epsilon_overlap;
    j["bounds"] = bounds.to_json();
    return j;
  }
};

inline TruthReport truth(const DgpSpec& raw, long mc_budget, std::uint64_t seed) {
  BoundRequest req;
  req.spec = raw;
  req.mc_budget = mc_budget;
  req.seed = seed;
  TruthReport tr;
  tr.bounds = compute_bounds(req);  // validates the budget before heavier work
  tr.spec = finalize_spec(raw);
  auto tf = std::make_shared<TruthFunctions>(truth_functions(raw));
  tr.delta_star = tf->delta_star;
  tr.xi1_star = tf->xi1;
  tr.xi0_star = tf->xi0;
  tr.p_label = tf->p_label_marginal;
  tr.epsilon_overlap = tr.spec.epsilon_overlap;
  tr.functions = tf;
  return tr;
}

}  // namespace sate
