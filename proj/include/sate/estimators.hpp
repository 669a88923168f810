#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "sate/crossfit.hpp"
#include "sate/data.hpp"
#include "sate/dgp.hpp"
#include "sate/influence.hpp"

namespace sate {

enum class EstimatorKind {
  DmlGeneral,          // cross-fit mean of the general score
  DmlDensityRatio,     // density-ratio revision, normalized by the labelled count
  DmlMcar,             // the density-ratio form with the ratio pinned to one
  NoSurrogateBaseline, // setting-one score: no surrogate outcome regression
  FullDataAipw,        // classical AIPW on a fully labelled sample
  ZhangBradic,         // impute unlabelled effects, correct on the labelled
  OraclePlugin,        // true nuisances, no cross-fitting
};

inline std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::DmlGeneral: return "dml_general";
    case EstimatorKind::DmlDensityRatio: return "dml_density_ratio";
    case EstimatorKind::DmlMcar: return "dml_mcar";
    case EstimatorKind::NoSurrogateBaseline: return "no_surrogate_baseline";
    case EstimatorKind::FullDataAipw: return "full_data_aipw";
    case EstimatorKind::ZhangBradic: return "zhang_bradic";
    case EstimatorKind::OraclePlugin: return "oracle_plugin";
  }
  throw ValidationError("estimator: unknown kind");
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "dml_general") return EstimatorKind::DmlGeneral;
  if (s == "dml_density_ratio") return EstimatorKind::DmlDensityRatio;
  if (s == "dml_mcar") return EstimatorKind::DmlMcar;
  if (s == "no_surrogate_baseline") return EstimatorKind::NoSurrogateBaseline;
  if (s == "full_data_aipw") return EstimatorKind::FullDataAipw;
  if (s == "zhang_bradic") return EstimatorKind::ZhangBradic;
  if (s == "oracle_plugin") return EstimatorKind::OraclePlugin;
  throw ValidationError("estimator: unknown kind '" + s + "'");
}

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::DmlGeneral;
  int k = 5;
  LearnerSpec e_spec{LearnerKind::LogisticIrls};
  LearnerSpec r_spec{LearnerKind::LogisticIrls};
  LearnerSpec mu_tilde_spec{LearnerKind::RidgeOls};
  LearnerSpec mu_spec{LearnerKind::RidgeOls};
  LearnerSpec lambda_spec{LearnerKind::LogisticIrls};
  RFeatures r_features = RFeatures::TXS;
  bool pooled_outcome_regression = false;
  double alpha = 0.05;
  double clip_eps = 0.01;
  double c_lambda = 50.0;
  // either attach truth functions directly or describe the generating process
  std::shared_ptr<const TruthFunctions> oracle;
  std::shared_ptr<const DgpSpec> truth_dgp;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ValidationError("estimator: alpha must lie in (0, 1)");
    if (kind != EstimatorKind::OraclePlugin && k < 2)
      throw ValidationError("estimator: need at least two folds");
    if (!(clip_eps > 0.0 && clip_eps < 0.5))
      throw ValidationError("estimator: clip_eps must lie in (0, 1/2)");
    if (!(c_lambda > 0.0)) throw ValidationError("estimator: c_lambda must be positive");
    e_spec.validate();
    r_spec.validate();
    mu_tilde_spec.validate();
    mu_spec.validate();
    lambda_spec.validate();
  }
};

namespace detail {

enum class LabelWeight { InverseR, LambdaOverRn };

inline double check_term(double v, const char* name, int i) {
  if (!std::isfinite(v))
    throw NumericError(std::string("estimate: non-finite ") + name + " at unit " +
                       std::to_string(i));
  return v;
}

// the delta-free general score with a pluggable labelled-unit weight:
//   InverseR     -> 1 / r(t, x, s)
//   LambdaOverRn -> lambda(x) / r_n_hat
// Both weights flow through the identical expression so that estimators that
// are algebraically equal produce bitwise-equal results.
inline double psi_free_slot(const Observation& w, const NuisanceHandles& h, LabelWeight mode,
                            double r_n_hat, int i) {
  const double e = check_term(h.e(w.x), "propensity", i);
  const double mu1 = check_term(h.mu(1, w.x), "outcome mean (treated)", i);
  const double mu0 = check_term(h.mu(0, w.x), "outcome mean (control)", i);
  double v = mu1 - mu0;
  if (w.t == 1) {
    const double mt = check_term(h.mu_tilde(1, w.x, w.s), "surrogate outcome mean", i);
    v += (mt - mu1) / e;
    if (w.r == 1) {
      const double lw = check_term(mode == LabelWeight::InverseR ? 1.0 / h.r(1, w.x, w.s)
                                                                 : h.lambda(w.x) / r_n_hat,
                                   "label weight", i);
      if (!w.y) throw ValidationError("estimate: labelled unit without outcome");
      v += lw * (*w.y - mt) / e;
    }
  } else {
    const double mt = check_term(h.mu_tilde(0, w.x, w.s), "surrogate outcome mean", i);
    v -= (mt - mu0) / (1.0 - e);
    if (w.r == 1) {
      const double lw = check_term(mode == LabelWeight::InverseR ? 1.0 / h.r(0, w.x, w.s)
                                                                 : h.lambda(w.x) / r_n_hat,
                                   "label weight", i);
      if (!w.y) throw ValidationError("estimate: labelled unit without outcome");
      v -= lw * (*w.y - mt) / (1.0 - e);
    }
  }
  return check_term(v, "influence value", i);
}

// setting-one score: residuals against mu(t, x), no surrogate adjustment
inline double psi_free_setting_one(const Observation& w, const NuisanceHandles& h, int i) {
  const double e = check_term(h.e(w.x), "propensity", i);
  const double mu1 = check_term(h.mu(1, w.x), "outcome mean (treated)", i);
  const double mu0 = check_term(h.mu(0, w.x), "outcome mean (control)", i);
  double v = mu1 - mu0;
  if (w.r == 1) {
    if (!w.y) throw ValidationError("estimate: labelled unit without outcome");
    const double lw =
        check_term(1.0 / h.r(w.t, w.x, w.s), "label weight", i);
    if (w.t == 1)
      v += lw * (*w.y - mu1) / e;
    else
      v -= lw * (*w.y - mu0) / (1.0 - e);
  }
  return check_term(v, "influence value", i);
}

inline double psi_free_aipw(const Observation& w, const NuisanceHandles& h, int i) {
  const double e = check_term(h.e(w.x), "propensity", i);
  const double mu1 = check_term(h.mu(1, w.x), "outcome mean (treated)", i);
  const double mu0 = check_term(h.mu(0, w.x), "outcome mean (control)", i);
  if (!w.y) throw ValidationError("estimate: aipw needs an outcome on every unit");
  double v = mu1 - mu0;
  if (w.t == 1)
    v += (*w.y - mu1) / e;
  else
    v -= (*w.y - mu0) / (1.0 - e);
  return check_term(v, "influence value", i);
}

// delta-free per-unit score values for the variance machinery
inline std::vector<double> psi_free_values(const Dataset& data, const NuisanceFits& fits,
                                           InfluenceKind kind) {
  std::vector<double> out(data.n());
  for (int i = 0; i < data.n(); ++i) {
    const Observation& w = data.obs[i];
    const NuisanceHandles& h = fits.for_unit(i);
    switch (kind) {
      case InfluenceKind::PsiGeneral:
      case InfluenceKind::PsiSettingIII:
      case InfluenceKind::PsiPooledSurrogate:
        out[i] = psi_free_slot(w, h, LabelWeight::InverseR, fits.r_n_hat, i);
        break;
      case InfluenceKind::PsiTildeLabelled:
        out[i] = psi_free_slot(w, h, LabelWeight::LambdaOverRn, fits.r_n_hat, i);
        break;
      case InfluenceKind::PsiSettingI:
      case InfluenceKind::PsiSettingII:
        out[i] = psi_free_setting_one(w, h, i);
        break;
      case InfluenceKind::PsiSettingIV:
        out[i] = psi_free_aipw(w, h, i);
        break;
    }
  }
  return out;
}

}  // namespace detail

struct CiResult {
  double variance_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// Plug-in variance and normal confidence interval. For the all-unit scores
// this is the mean squared out-of-fold score at delta_hat over N units. For
// the labelled-only score the asymptotic variance at a fixed labelling share
// has three pieces: the labelled mean of the squared labelled-only score,
// plus the labelled share times the second moments of the effect-deviation
// term and of the surrogate adjustment term over all units; the interval is
// then on the sqrt(N_l) scale.
inline CiResult variance_and_ci(const Dataset& data, double delta_hat, const NuisanceFits& fits,
                                InfluenceKind kind, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("variance_and_ci: alpha must lie in (0, 1)");
  if (!std::isfinite(delta_hat)) throw ValidationError("variance_and_ci: delta_hat not finite");
  const int n = data.n();
  CiResult res;
  long n_eff = n;
  if (kind == InfluenceKind::PsiTildeLabelled) {
    std::vector<double> tilde_sq;
    tilde_sq.reserve(data.n_labelled());
    std::vector<double> dev_sq(n), adj_sq(n);
    for (int i = 0; i < n; ++i) {
      const Observation& w = data.obs[i];
      const NuisanceHandles& h = fits.for_unit(i);
      const double e = h.e(w.x);
      const double mu1 = h.mu(1, w.x);
      const double mu0 = h.mu(0, w.x);
      const double mt = h.mu_tilde(w.t, w.x, w.s);
      const double dev = mu1 - mu0 - delta_hat;
      dev_sq[i] = dev * dev;
      const double adj = w.t == 1 ? (mt - mu1) / e : -(mt - mu0) / (1.0 - e);
      adj_sq[i] = adj * adj;
      if (w.r == 1) {
        if (!w.y) throw ValidationError("variance_and_ci: labelled unit without outcome");
        const double lam = h.lambda(w.x);
        const double resid = w.t == 1 ? lam / e * (*w.y - mt) : -lam / (1.0 - e) * (*w.y - mt);
        tilde_sq.push_back(resid * resid);
      }
    }
    if (tilde_sq.empty())
      throw ValidationError("variance_and_ci: labelled-only score needs labelled units");
    res.variance_hat = pairwise_mean(tilde_sq) +
                       fits.r_n_hat * pairwise_mean(dev_sq) +
                       fits.r_n_hat * pairwise_mean(adj_sq);
    n_eff = data.n_labelled();
  } else {
    std::vector<double> values = detail::psi_free_values(data, fits, kind);
    std::vector<double> sq(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
      const double centered = values[i] - delta_hat;
      sq[i] = centered * centered;
    }
    res.variance_hat = pairwise_mean(sq);
  }
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double half = z * std::sqrt(res.variance_hat / static_cast<double>(n_eff));
  res.ci_lo = delta_hat - half;
  res.ci_hi = delta_hat + half;
  return res;
}

namespace detail {

inline InfluenceKind influence_kind_for(EstimatorKind kind, bool pooled) {
  switch (kind) {
    case EstimatorKind::DmlGeneral:
    case EstimatorKind::FullDataAipw:
    case EstimatorKind::OraclePlugin:
      return pooled ? InfluenceKind::PsiPooledSurrogate : InfluenceKind::PsiGeneral;
    case EstimatorKind::DmlDensityRatio:
    case EstimatorKind::DmlMcar: return InfluenceKind::PsiTildeLabelled;
    case EstimatorKind::NoSurrogateBaseline: return InfluenceKind::PsiSettingI;
    case EstimatorKind::ZhangBradic:
      throw ValidationError("estimator: the imputation estimator has no score kind");
  }
  throw ValidationError("estimator: unknown kind");
}

inline void require_handles(const NuisanceFits& fits, EstimatorKind kind) {
  for (const NuisanceHandles& h : fits.per_fold) {
    if (!h.e || !h.mu)
      throw ValidationError("estimator: fits missing propensity or outcome handles");
    switch (kind) {
      case EstimatorKind::DmlGeneral:
      case EstimatorKind::FullDataAipw:
      case EstimatorKind::OraclePlugin:
        if (!h.r || !h.mu_tilde)
          throw ValidationError("estimator: fits missing labelling or surrogate handles");
        break;
      case EstimatorKind::DmlDensityRatio:
      case EstimatorKind::DmlMcar:
        if (!h.lambda || !h.mu_tilde)
          throw ValidationError("estimator: fits missing density-ratio or surrogate handles");
        break;
      case EstimatorKind::NoSurrogateBaseline:
        if (!h.r) throw ValidationError("estimator: fits missing labelling handles");
        break;
      case EstimatorKind::ZhangBradic: break;
    }
  }
}

}  // namespace detail

// Evaluate an estimator on pre-computed out-of-fold nuisance fits. Exposed so
// that paired comparisons can share the exact same fits.
inline EstimateReport estimate_with_fits(const Dataset& data, const NuisanceFits& fits,
                                         EstimatorKind kind, const EstimatorConfig& config) {
  if (static_cast<int>(fits.folds.fold_of.size()) != data.n())
    throw ValidationError("estimator: fits do not cover the dataset");
  detail::require_handles(fits, kind);
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw ValidationError("estimator: alpha must lie in (0, 1)");

  EstimateReport rep;
  rep.estimator = to_string(kind);
  rep.alpha = config.alpha;
  rep.n = data.n();
  rep.n_l = data.n_labelled();

  if (kind == EstimatorKind::ZhangBradic) {
    // impute the effect on unlabelled units, correct it on labelled units
    std::vector<double> imputed, resid, infl(data.n());
    for (int i = 0; i < data.n(); ++i) {
      const Observation& w = data.obs[i];
      const NuisanceHandles& h = fits.for_unit(i);
      const double e = detail::check_term(h.e(w.x), "propensity", i);
      const double mu1 = detail::check_term(h.mu(1, w.x), "outcome mean (treated)", i);
      const double mu0 = detail::check_term(h.mu(0, w.x), "outcome mean (control)", i);
      if (w.r == 0) {
        imputed.push_back(mu1 - mu0);
      } else {
        if (!w.y) throw ValidationError("estimate: labelled unit without outcome");
        const double v = w.t == 1 ? (*w.y - mu1) / e : -(*w.y - mu0) / (1.0 - e);
        resid.push_back(detail::check_term(v, "labelled correction", i));
      }
    }
    if (imputed.empty())
      throw ValidationError("zhang_bradic requires at least one unlabelled unit");
    if (resid.empty()) throw ValidationError("zhang_bradic requires labelled units");
    const double m_u = pairwise_mean(imputed);
    const double m_l = pairwise_mean(resid);
    rep.delta_hat = m_u + m_l;
    // linearization: each unit contributes its centered half, inflated by the
    // share of the sample its half represents
    const double r_n = fits.r_n_hat;
    for (int i = 0; i < data.n(); ++i) {
      const Observation& w = data.obs[i];
      const NuisanceHandles& h = fits.for_unit(i);
      if (w.r == 0) {
        infl[i] = (h.mu(1, w.x) - h.mu(0, w.x) - m_u) / (1.0 - r_n);
      } else {
        const double e = h.e(w.x);
        const double v =
            w.t == 1 ? (*w.y - h.mu(1, w.x)) / e : -(*w.y - h.mu(0, w.x)) / (1.0 - e);
        infl[i] = (v - m_l) / r_n;
      }
    }
    std::vector<double> sq(infl.size());
    for (size_t i = 0; i < infl.size(); ++i) sq[i] = infl[i] * infl[i];
    rep.variance_hat = pairwise_mean(sq);
    rep.scale = Scale::SqrtN;
    rep.influence_values = std::move(infl);
    const double z = normal_quantile(1.0 - config.alpha / 2.0);
    const double half = z * std::sqrt(rep.variance_hat / static_cast<double>(rep.n));
    rep.ci_lo = rep.delta_hat - half;
    rep.ci_hi = rep.delta_hat + half;
    return rep;
  }

  const InfluenceKind ik = detail::influence_kind_for(kind, config.pooled_outcome_regression);
  std::vector<double> values = detail::psi_free_values(data, fits, ik);
  rep.delta_hat = pairwise_mean(values);
  rep.scale = (ik == InfluenceKind::PsiTildeLabelled) ? Scale::SqrtNl : Scale::SqrtN;
  rep.influence_values.resize(values.size());
  for (size_t i = 0; i < values.size(); ++i) rep.influence_values[i] = values[i] - rep.delta_hat;
  CiResult ci = variance_and_ci(data, rep.delta_hat, fits, ik, config.alpha);
  rep.variance_hat = ci.variance_hat;
  rep.ci_lo = ci.ci_lo;
  rep.ci_hi = ci.ci_hi;
  return rep;
}

namespace detail {

inline NuisanceHandles truth_handles(std::shared_ptr<const TruthFunctions> tf) {
  NuisanceHandles h;
  h.e = [tf](const std::vector<double>& x) { return tf->e_star(x); };
  h.r = [tf](int t, const std::vector<double>& x, const std::vector<double>& s) {
    return tf->r_star(t, x, s);
  };
  h.mu_tilde = [tf](int t, const std::vector<double>& x, const std::vector<double>& s) {
    return tf->mu_tilde_star(t, x, s);
  };
  h.mu = [tf](int t, const std::vector<double>& x) { return tf->mu_star(t, x); };
  h.lambda = [tf](const std::vector<double>& x) { return tf->lambda_star(x); };
  return h;
}

}  // namespace detail

// single-"fold" fits that evaluate the true nuisance functions everywhere
inline NuisanceFits oracle_fits(const Dataset& data, std::shared_ptr<const TruthFunctions> tf) {
  if (!tf) throw ValidationError("oracle_plugin requires true nuisance functions");
  NuisanceFits fits;
  fits.folds.k = 1;
  fits.folds.seed = 0;
  fits.folds.fold_of.assign(data.n(), 0);
  fits.per_fold.push_back(detail::truth_handles(tf));
  fits.train_idx.push_back({});
  fits.r_n_hat = data.n() > 0 ? static_cast<double>(data.n_labelled()) / data.n() : 0.0;
  return fits;
}

inline CrossFitPlan build_plan(const Dataset& data, const EstimatorConfig& config,
                               std::uint64_t seed,
                               std::shared_ptr<const TruthFunctions> oracle) {
  CrossFitPlan plan;
  plan.folds = make_folds(data, config.k, derive_seed(seed, 0x666f6c64ULL));
  plan.e_spec = config.e_spec;
  plan.r_spec = config.r_spec;
  plan.mu_tilde_spec = config.mu_tilde_spec;
  plan.mu_spec = config.mu_spec;
  plan.lambda_spec = config.lambda_spec;
  plan.r_features = config.r_features;
  plan.pooled_mu_tilde = config.pooled_outcome_regression;
  plan.clip_eps = config.clip_eps;
  plan.c_lambda = config.c_lambda;
  plan.oracle = oracle;
  switch (config.kind) {
    case EstimatorKind::DmlGeneral:
      plan.fit_lambda = false;
      break;
    case EstimatorKind::DmlDensityRatio:
      plan.fit_r = false;
      plan.fit_lambda = true;
      break;
    case EstimatorKind::DmlMcar:
      plan.fit_r = false;
      plan.fit_lambda = true;
      plan.lambda_spec.kind = LearnerKind::ConstantRate;  // the ratio is pinned to one
      break;
    case EstimatorKind::NoSurrogateBaseline:
      plan.fit_lambda = false;
      plan.r_features = RFeatures::TX;  // the setting-one score has no s in r
      break;
    case EstimatorKind::FullDataAipw:
      plan.fit_lambda = false;
      if (plan.r_spec.kind != LearnerKind::Oracle)
        plan.r_spec.kind = LearnerKind::ConstantRate;  // fully labelled: exactly one
      break;
    case EstimatorKind::ZhangBradic:
      plan.fit_r = false;
      plan.fit_lambda = false;
      break;
    case EstimatorKind::OraclePlugin:
      throw ValidationError("oracle_plugin does not cross-fit");
  }
  return plan;
}

inline EstimateReport estimate(const Dataset& data, const EstimatorConfig& config,
                               std::uint64_t seed) {
  config.validate();
  data.validate();
  std::shared_ptr<const TruthFunctions> oracle = config.oracle;
  if (!oracle && config.truth_dgp)
    oracle = std::make_shared<TruthFunctions>(truth_functions(*config.truth_dgp));

  switch (config.kind) {
    case EstimatorKind::ZhangBradic:
      if (data.n_labelled() == data.n())
        throw ValidationError("zhang_bradic requires at least one unlabelled unit");
      if (data.n_labelled() == 0)
        throw ValidationError("zhang_bradic requires labelled units");
      break;
    case EstimatorKind::DmlDensityRatio:
    case EstimatorKind::DmlMcar:
      if (data.n_labelled() == 0)
        throw ValidationError("estimator requires labelled units");
      break;
    case EstimatorKind::FullDataAipw:
      if (data.n_labelled() != data.n())
        throw ValidationError("full_data_aipw requires a fully labelled dataset");
      break;
    case EstimatorKind::OraclePlugin:
      if (!oracle) throw ValidationError("oracle_plugin requires true nuisance functions");
      break;
    default: break;
  }

  NuisanceFits fits = config.kind == EstimatorKind::OraclePlugin
                          ? oracle_fits(data, oracle)
                          : cross_fit(data, build_plan(data, config, seed, oracle));
  return estimate_with_fits(data, fits, config.kind, config);
}

inline nlohmann::json to_json(const EstimatorConfig& c) {
  nlohmann::json j;
  j["kind"] = to_string(c.kind);
  j["k"] = c.k;
  j["alpha"] = c.alpha;
  j["clip_eps"] = c.clip_eps;
  j["c_lambda"] = c.c_lambda;
  j["r_features"] = c.r_features == RFeatures::TX ? "tx" : "txs";
  j["pooled_outcome_regression"] = c.pooled_outcome_regression;
  j["learners"] = {{"e", to_json(c.e_spec)},
                   {"r", to_json(c.r_spec)},
                   {"mu_tilde", to_json(c.mu_tilde_spec)},
                   {"mu", to_json(c.mu_spec)},
                   {"lambda", to_json(c.lambda_spec)}};
  if (c.truth_dgp) j["truth_dgp"] = to_json(*c.truth_dgp);
  return j;
}

inline EstimatorConfig estimator_config_from_json(const nlohmann::json& j) {
  EstimatorConfig c;
  c.kind = estimator_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("k")) c.k = j.at("k").get<int>();
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (j.contains("clip_eps")) c.clip_eps = j.at("clip_eps").get<double>();
  if (j.contains("c_lambda")) c.c_lambda = j.at("c_lambda").get<double>();
  if (j.contains("r_features")) {
    const std::string rf = j.at("r_features").get<std::string>();
    if (rf == "tx")
      c.r_features = RFeatures::TX;
    else if (rf == "txs")
      c.r_features = RFeatures::TXS;
    else
      throw ValidationError("estimator config: unknown r_features '" + rf + "'");
  }
  if (j.contains("pooled_outcome_regression"))
    c.pooled_outcome_regression = j.at("pooled_outcome_regression").get<bool>();
  if (j.contains("learners")) {
    const nlohmann::json& l = j.at("learners");
    if (l.contains("e")) c.e_spec = learner_spec_from_json(l.at("e"));
    if (l.contains("r")) c.r_spec = learner_spec_from_json(l.at("r"));
    if (l.contains("mu_tilde")) c.mu_tilde_spec = learner_spec_from_json(l.at("mu_tilde"));
    if (l.contains("mu")) c.mu_spec = learner_spec_from_json(l.at("mu"));
    if (l.contains("lambda")) c.lambda_spec = learner_spec_from_json(l.at("lambda"));
  }
  if (j.contains("truth_dgp"))
    c.truth_dgp = std::make_shared<const DgpSpec>(dgp_spec_from_json(j.at("truth_dgp")));
  c.validate();
  return c;
}

}  // namespace sate
