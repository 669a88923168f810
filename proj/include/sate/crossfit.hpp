#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sate/data.hpp"
#include "sate/dgp.hpp"
#include "sate/learners.hpp"

namespace sate {

// feature layout for the labelling-propensity classifier r(t, x[, s])
enum class RFeatures { TX, TXS };

struct CrossFitPlan {
  FoldAssignment folds;
  LearnerSpec e_spec;
  LearnerSpec r_spec;
  LearnerSpec mu_tilde_spec;
  LearnerSpec mu_spec;
  LearnerSpec lambda_spec;
  RFeatures r_features = RFeatures::TXS;
  bool pooled_mu_tilde = false;
  bool fit_e = true;
  bool fit_r = true;
  bool fit_mu = true;
  bool fit_lambda = false;
  double clip_eps = 0.01;
  double c_lambda = 50.0;
  std::shared_ptr<const TruthFunctions> oracle;  // backs Oracle learner specs

  void validate() const {
    if (folds.k < 2) throw ValidationError("crossfit: need at least two folds");
    if (!(clip_eps > 0.0 && clip_eps < 0.5))
      throw ValidationError("crossfit: clip_eps must lie in (0, 1/2)");
    if (!(c_lambda > 0.0)) throw ValidationError("crossfit: c_lambda must be positive");
    auto needs_oracle = [&](const LearnerSpec& s, bool used) {
      if (used) s.validate();
      return used && s.kind == LearnerKind::Oracle;
    };
    bool any_oracle = needs_oracle(e_spec, fit_e) | needs_oracle(r_spec, fit_r) |
                      needs_oracle(mu_tilde_spec, fit_mu) | needs_oracle(mu_spec, fit_mu) |
                      needs_oracle(lambda_spec, fit_lambda);
    if (any_oracle && !oracle)
      throw ValidationError("crossfit: oracle learner spec without truth functions");
    if (fit_mu && (mu_tilde_spec.kind == LearnerKind::Oracle) !=
                      (mu_spec.kind == LearnerKind::Oracle))
      throw ValidationError("crossfit: mu and mu~ must both be oracle or both learned");
  }
};

// out-of-fold evaluable nuisance functions; learner-fitted propensities are
// clipped (e into [eps, 1-eps], r into [eps, 1]), oracle handles are exact
struct NuisanceHandles {
  std::function<double(const std::vector<double>&)> e;
  std::function<double(int, const std::vector<double>&, const std::vector<double>&)> r;
  std::function<double(int, const std::vector<double>&, const std::vector<double>&)> mu_tilde;
  std::function<double(int, const std::vector<double>&)> mu;
  std::function<double(const std::vector<double>&)> lambda;
};

struct NuisanceFits {
  FoldAssignment folds;
  std::vector<NuisanceHandles> per_fold;
  std::vector<std::vector<int>> train_idx;  // bookkeeping: fold k trained on these rows
  double r_n_hat = 0.0;                     // global labelled fraction N_l / N
  double clip_eps = 0.01;
  double c_lambda = 50.0;

  const NuisanceHandles& for_unit(int i) const { return per_fold.at(folds.fold_of.at(i)); }
};

namespace detail {

inline std::vector<double> r_feature_row(RFeatures layout, int t, const std::vector<double>& x,
                                         const std::vector<double>& s) {
  std::vector<double> row;
  row.reserve(1 + x.size() + (layout == RFeatures::TXS ? s.size() : 0));
  row.push_back(static_cast<double>(t));
  row.insert(row.end(), x.begin(), x.end());
  if (layout == RFeatures::TXS) row.insert(row.end(), s.begin(), s.end());
  return row;
}

}  // namespace detail

inline NuisanceFits cross_fit(const Dataset& data, const CrossFitPlan& plan) {
  plan.validate();
  data.validate();
  const int n = data.n();
  if (static_cast<int>(plan.folds.fold_of.size()) != n)
    throw ValidationError("crossfit: fold assignment does not match the dataset");

  NuisanceFits fits;
  fits.folds = plan.folds;
  fits.clip_eps = plan.clip_eps;
  fits.c_lambda = plan.c_lambda;
  fits.r_n_hat = static_cast<double>(data.n_labelled()) / static_cast<double>(n);
  fits.per_fold.resize(plan.folds.k);
  fits.train_idx.resize(plan.folds.k);

  const auto tf = plan.oracle;
  for (int k = 0; k < plan.folds.k; ++k) {
    std::vector<int>& train = fits.train_idx[k];
    for (int i = 0; i < n; ++i)
      if (plan.folds.fold_of[i] != k) train.push_back(i);
    NuisanceHandles& h = fits.per_fold[k];
    try {
      if (plan.fit_e) {
        if (plan.e_spec.kind == LearnerKind::Oracle) {
          h.e = [tf](const std::vector<double>& x) { return tf->e_star(x); };
        } else {
          FeatureMatrix feats;
          std::vector<int> labels;
          feats.reserve(train.size());
          for (int i : train) {
            feats.push_back(data.obs[i].x);
            labels.push_back(data.obs[i].t);
          }
          auto m = std::make_shared<FittedModel>(fit_binary_propensity(
              feats, labels, plan.e_spec, plan.clip_eps, 1.0 - plan.clip_eps));
          h.e = [m](const std::vector<double>& x) { return (*m)(x); };
        }
      }
      if (plan.fit_r) {
        if (plan.r_spec.kind == LearnerKind::Oracle) {
          h.r = [tf](int t, const std::vector<double>& x, const std::vector<double>& s) {
            return tf->r_star(t, x, s);
          };
        } else if (plan.r_spec.kind == LearnerKind::ConstantRate) {
          // the marginal labelled share of the whole sample; this is what
          // makes the lambda-form and r-form estimators coincide exactly
          double rn = fits.r_n_hat;
          h.r = [rn](int, const std::vector<double>&, const std::vector<double>&) { return rn; };
        } else {
          FeatureMatrix feats;
          std::vector<int> labels;
          feats.reserve(train.size());
          for (int i : train) {
            const Observation& o = data.obs[i];
            feats.push_back(detail::r_feature_row(plan.r_features, o.t, o.x, o.s));
            labels.push_back(o.r);
          }
          auto m = std::make_shared<FittedModel>(
              fit_binary_propensity(feats, labels, plan.r_spec, plan.clip_eps, 1.0));
          RFeatures layout = plan.r_features;
          h.r = [m, layout](int t, const std::vector<double>& x, const std::vector<double>& s) {
            return (*m)(detail::r_feature_row(layout, t, x, s));
          };
        }
      }
      if (plan.fit_mu) {
        if (plan.mu_tilde_spec.kind == LearnerKind::Oracle) {
          h.mu_tilde = [tf](int t, const std::vector<double>& x, const std::vector<double>& s) {
            return tf->mu_tilde_star(t, x, s);
          };
          h.mu = [tf](int t, const std::vector<double>& x) { return tf->mu_star(t, x); };
        } else {
          auto mp = std::make_shared<MuPair>(
              fit_mu_pair(data, train, plan.mu_tilde_spec, plan.mu_spec, plan.pooled_mu_tilde));
          h.mu_tilde = [mp](int t, const std::vector<double>& x, const std::vector<double>& s) {
            return mp->mu_tilde(t, x, s);
          };
          h.mu = [mp](int t, const std::vector<double>& x) { return mp->mu(t, x); };
        }
      }
      if (plan.fit_lambda) {
        if (plan.lambda_spec.kind == LearnerKind::Oracle) {
          h.lambda = [tf](const std::vector<double>& x) { return tf->lambda_star(x); };
        } else if (plan.lambda_spec.kind == LearnerKind::ConstantRate) {
          h.lambda = [](const std::vector<double>&) { return 1.0; };
        } else {
          auto m = std::make_shared<FittedModel>(
              fit_density_ratio(data, train, plan.lambda_spec, plan.c_lambda));
          h.lambda = [m](const std::vector<double>& x) { return (*m)(x); };
        }
      }
    } catch (const NumericError& e) {
      throw NumericError("fold " + std::to_string(k) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("fold " + std::to_string(k) + ": " + e.what());
    }
  }
  return fits;
}

}  // namespace sate
