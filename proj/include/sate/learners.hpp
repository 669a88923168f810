#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sate/data.hpp"
#include "sate/math.hpp"

namespace sate {

enum class LearnerKind {
  LogisticIrls,
  RidgeOls,
  BoostedStumps,
  Oracle,        // bound to the true functions at cross-fit time
  Misspecified,  // wraps another spec and hides some features from it
  ConstantRate,  // ignores features; empirical class rate / target mean
};

inline std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::LogisticIrls: return "logistic_irls";
    case LearnerKind::RidgeOls: return "ridge_ols";
    case LearnerKind::BoostedStumps: return "boosted_stumps";
    case LearnerKind::Oracle: return "oracle";
    case LearnerKind::Misspecified: return "misspecified";
    case LearnerKind::ConstantRate: return "constant_rate";
  }
  throw ValidationError("bad learner kind");
}

inline LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "logistic_irls") return LearnerKind::LogisticIrls;
  if (s == "ridge_ols") return LearnerKind::RidgeOls;
  if (s == "boosted_stumps") return LearnerKind::BoostedStumps;
  if (s == "oracle") return LearnerKind::Oracle;
  if (s == "misspecified") return LearnerKind::Misspecified;
  if (s == "constant_rate") return LearnerKind::ConstantRate;
  throw ValidationError("unknown learner kind: " + s);
}

struct LearnerSpec {
  LearnerKind kind = LearnerKind::RidgeOls;
  double ridge = 0.0;
  int irls_max_iter = 100;
  double irls_tol = 1e-8;
  int rounds = 300;
  double shrinkage = 0.1;
  int thresholds = 32;
  std::vector<int> omit_features;       // Misspecified only
  std::shared_ptr<LearnerSpec> wrapped; // Misspecified only

  void validate() const {
    if (!(ridge >= 0.0) || !std::isfinite(ridge))
      throw ValidationError("learner: ridge penalty must be nonnegative");
    if (irls_max_iter < 1) throw ValidationError("learner: irls_max_iter must be positive");
    if (!(irls_tol > 0.0)) throw ValidationError("learner: irls_tol must be positive");
    if (rounds < 1) throw ValidationError("learner: boosting rounds must be positive");
    if (!(shrinkage > 0.0 && shrinkage <= 1.0))
      throw ValidationError("learner: shrinkage must lie in (0,1]");
    if (thresholds < 1) throw ValidationError("learner: thresholds must be positive");
    if (kind == LearnerKind::Misspecified) {
      if (!wrapped) throw ValidationError("learner: misspecified needs a wrapped spec");
      wrapped->validate();
    }
  }
};

inline LearnerSpec misspecified(LearnerSpec inner, std::vector<int> omit) {
  LearnerSpec s;
  s.kind = LearnerKind::Misspecified;
  s.omit_features = std::move(omit);
  s.wrapped = std::make_shared<LearnerSpec>(std::move(inner));
  return s;
}

// row-major feature matrix; tiny dimensions throughout, so no fancy storage
using FeatureMatrix = std::vector<std::vector<double>>;

struct FittedModel {
  std::function<double(const std::vector<double>&)> eval;
  nlohmann::json params;

  double operator()(const std::vector<double>& x) const { return eval(x); }
};

inline FeatureMatrix drop_features(const FeatureMatrix& feats, const std::vector<int>& omit) {
  if (feats.empty()) return feats;
  const int p = static_cast<int>(feats.front().size());
  std::vector<bool> drop(p, false);
  for (int j : omit) {
    if (j < 0 || j >= p) throw ValidationError("learner: omit_features index out of range");
    drop[j] = true;
  }
  FeatureMatrix out(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) {
    out[i].reserve(p);
    for (int j = 0; j < p; ++j)
      if (!drop[j]) out[i].push_back(feats[i][j]);
  }
  return out;
}

inline FittedModel wrap_reduced(FittedModel inner, std::vector<int> omit, std::size_t p_full) {
  const int p = static_cast<int>(p_full);
  std::vector<bool> drop(p, false);
  for (int j : omit) drop[j] = true;
  auto eval_inner = std::move(inner.eval);
  inner.params = nlohmann::json{{"omit_features", omit}, {"wrapped", inner.params}};
  inner.eval = [eval_inner, drop, p](const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != p)
      throw ValidationError("learner: feature arity mismatch at evaluation");
    std::vector<double> reduced;
    reduced.reserve(p);
    for (int j = 0; j < p; ++j)
      if (!drop[j]) reduced.push_back(x[j]);
    return eval_inner(reduced);
  };
  return inner;
}

namespace detail {

inline void check_features(const FeatureMatrix& feats, std::size_t n_expected) {
  if (feats.size() != n_expected) throw ValidationError("learner: feature row count mismatch");
  if (feats.empty()) throw ValidationError("learner: empty training set");
  std::size_t p = feats.front().size();
  for (const auto& row : feats) {
    if (row.size() != p) throw ValidationError("learner: ragged feature matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw ValidationError("learner: non-finite features");
  }
}

inline Eigen::MatrixXd design_with_intercept(const FeatureMatrix& feats) {
  const std::size_t n = feats.size(), p = feats.front().size();
  Eigen::MatrixXd X(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) X(i, j + 1) = feats[i][j];
  }
  return X;
}

inline FittedModel linear_model(Eigen::VectorXd beta, std::size_t p, bool through_sigmoid) {
  auto coef = std::make_shared<std::vector<double>>(beta.data(), beta.data() + beta.size());
  FittedModel m;
  m.params["coef"] = *coef;
  m.eval = [coef, p, through_sigmoid](const std::vector<double>& x) {
    if (x.size() != p) throw ValidationError("learner: feature arity mismatch at evaluation");
    double z = (*coef)[0];
    for (std::size_t j = 0; j < p; ++j) z += (*coef)[j + 1] * x[j];
    return through_sigmoid ? sigmoid(z) : z;
  };
  return m;
}

// y' * eta - sum softplus(eta) - (ridge/2)|beta_slopes|^2, computed stably
inline double penalized_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& beta, double ridge) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double e = eta(i);
    double soft = e > 30.0 ? e : std::log1p(std::exp(std::min(e, 30.0)));
    ll += y(i) * e - soft;
  }
  for (Eigen::Index j = 1; j < beta.size(); ++j) ll -= 0.5 * ridge * beta(j) * beta(j);
  return ll;
}

struct Stump {
  int feature = 0;
  double threshold = 0.0;
  double left = 0.0;
  double right = 0.0;
};

struct StumpPresort {
  // per feature: row indices sorted by feature value, candidate cut positions
  // (counts of rows at or below each threshold), and the threshold values
  std::vector<std::vector<int>> order;
  std::vector<std::vector<int>> cut_pos;
  std::vector<std::vector<double>> cuts;
};

inline StumpPresort presort_for_stumps(const FeatureMatrix& feats, int n_thresholds) {
  const int n = static_cast<int>(feats.size());
  const int p = static_cast<int>(feats.front().size());
  StumpPresort ps;
  ps.order.resize(p);
  ps.cut_pos.resize(p);
  ps.cuts.resize(p);
  for (int j = 0; j < p; ++j) {
    auto& ord = ps.order[j];
    ord.resize(n);
    for (int i = 0; i < n; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(),
              [&](int a, int b) { return feats[a][j] < feats[b][j]; });
    double prev = std::nan("");
    for (int k = 0; k < n_thresholds; ++k) {
      int pos = static_cast<int>((static_cast<double>(k) + 1.0) * n / (n_thresholds + 1.0));
      pos = std::clamp(pos, 1, n - 1);
      double c = feats[ord[pos - 1]][j];
      // advance past ties so "value <= c" matches the cut position exactly
      int cnt = pos;
      while (cnt < n && feats[ord[cnt]][j] <= c) ++cnt;
      if (cnt >= n) continue;
      if (!std::isnan(prev) && c == prev) continue;
      prev = c;
      ps.cut_pos[j].push_back(cnt);
      ps.cuts[j].push_back(c);
    }
  }
  return ps;
}

inline FittedModel stump_ensemble_model(double f0, double shrinkage, std::vector<Stump> stumps,
                                        std::size_t p, bool through_sigmoid) {
  auto ens = std::make_shared<std::vector<Stump>>(std::move(stumps));
  FittedModel m;
  m.params["f0"] = f0;
  m.params["rounds_used"] = ens->size();
  m.eval = [f0, shrinkage, ens, p, through_sigmoid](const std::vector<double>& x) {
    if (x.size() != p) throw ValidationError("learner: feature arity mismatch at evaluation");
    double f = f0;
    for (const auto& st : *ens)
      f += shrinkage * (x[st.feature] <= st.threshold ? st.left : st.right);
    return through_sigmoid ? sigmoid(f) : f;
  };
  return m;
}

// one boosting round: pick the stump minimizing squared error of `grad`
// weighted by `hess` (hess == nullptr means unit weights / plain L2 boosting)
inline bool best_stump(const FeatureMatrix& feats, const StumpPresort& ps,
                       const std::vector<double>& grad, const std::vector<double>* hess,
                       Stump* out) {
  const int n = static_cast<int>(feats.size());
  const int p = static_cast<int>(feats.front().size());
  double best_score = -1.0;
  std::vector<double> pg(n + 1), ph(n + 1);
  for (int j = 0; j < p; ++j) {
    if (ps.cuts[j].empty()) continue;
    const auto& ord = ps.order[j];
    pg[0] = 0.0;
    ph[0] = 0.0;
    for (int i = 0; i < n; ++i) {
      pg[i + 1] = pg[i] + grad[ord[i]];
      ph[i + 1] = ph[i] + (hess ? (*hess)[ord[i]] : 1.0);
    }
    for (std::size_t k = 0; k < ps.cuts[j].size(); ++k) {
      int c = ps.cut_pos[j][k];
      double gl = pg[c], gr = pg[n] - pg[c];
      double hl = ph[c], hr = ph[n] - ph[c];
      if (hl <= 1e-12 || hr <= 1e-12) continue;
      double score = gl * gl / hl + gr * gr / hr;
      if (score > best_score) {
        best_score = score;
        out->feature = j;
        out->threshold = ps.cuts[j][k];
        out->left = gl / hl;
        out->right = gr / hr;
      }
    }
  }
  return best_score >= 0.0;
}

}  // namespace detail

// mean regression: E[target | features]
inline FittedModel fit_regression(const FeatureMatrix& feats, const std::vector<double>& targets,
                                  const LearnerSpec& spec) {
  spec.validate();
  detail::check_features(feats, targets.size());
  for (double v : targets)
    if (!std::isfinite(v)) throw ValidationError("learner: non-finite regression targets");
  const std::size_t n = feats.size(), p = feats.front().size();

  switch (spec.kind) {
    case LearnerKind::ConstantRate: {
      double m = pairwise_mean(targets);
      FittedModel f;
      f.params["constant"] = m;
      f.eval = [m, p](const std::vector<double>& x) {
        if (x.size() != p) throw ValidationError("learner: feature arity mismatch at evaluation");
        return m;
      };
      return f;
    }
    case LearnerKind::RidgeOls: {
      Eigen::MatrixXd X = detail::design_with_intercept(feats);
      Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), n);
      if (spec.ridge == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        qr.setThreshold(1e-10);
        if (qr.rank() < X.cols()) throw NumericError("singular design");
        return detail::linear_model(qr.solve(y), p, false);
      }
      Eigen::MatrixXd A = X.transpose() * X;
      for (Eigen::Index j = 1; j < A.cols(); ++j) A(j, j) += spec.ridge;
      Eigen::VectorXd beta = A.ldlt().solve(X.transpose() * y);
      if (!beta.allFinite()) throw NumericError("ridge solve produced non-finite coefficients");
      return detail::linear_model(beta, p, false);
    }
    case LearnerKind::BoostedStumps: {
      double f0 = pairwise_mean(targets);
      std::vector<double> resid(n);
      std::vector<double> fitted(n, f0);
      for (std::size_t i = 0; i < n; ++i) resid[i] = targets[i] - f0;
      auto ps = detail::presort_for_stumps(feats, spec.thresholds);
      std::vector<detail::Stump> ens;
      ens.reserve(spec.rounds);
      for (int m = 0; m < spec.rounds; ++m) {
        detail::Stump st;
        if (!detail::best_stump(feats, ps, resid, nullptr, &st)) break;
        ens.push_back(st);
        for (std::size_t i = 0; i < n; ++i) {
          double step = spec.shrinkage * (feats[i][st.feature] <= st.threshold ? st.left : st.right);
          fitted[i] += step;
          resid[i] -= step;
        }
      }
      return detail::stump_ensemble_model(f0, spec.shrinkage, std::move(ens), p, false);
    }
    case LearnerKind::Misspecified: {
      FeatureMatrix reduced = drop_features(feats, spec.omit_features);
      FittedModel inner = fit_regression(reduced, targets, *spec.wrapped);
      return wrap_reduced(std::move(inner), spec.omit_features, p);
    }
    case LearnerKind::Oracle:
      throw ValidationError("learner: oracle models are bound at cross-fit time");
    case LearnerKind::LogisticIrls:
      throw ValidationError("learner: logistic_irls is a propensity learner");
  }
  throw ValidationError("bad learner kind");
}

// binary propensity: P(label = 1 | features), post-clipped to [clip_lo, clip_hi]
inline FittedModel fit_binary_propensity(const FeatureMatrix& feats, const std::vector<int>& labels,
                                         const LearnerSpec& spec, double clip_lo = 0.01,
                                         double clip_hi = 0.99) {
  spec.validate();
  detail::check_features(feats, labels.size());
  if (!(clip_lo >= 0.0 && clip_lo < clip_hi && clip_hi <= 1.0))
    throw ValidationError("learner: bad clip bounds");
  const std::size_t n = feats.size(), p = feats.front().size();
  long ones = 0;
  for (int v : labels) {
    if (v != 0 && v != 1) throw ValidationError("learner: labels must be 0/1");
    ones += v;
  }

  auto clipped = [clip_lo, clip_hi](FittedModel m) {
    auto inner = std::move(m.eval);
    m.eval = [inner, clip_lo, clip_hi](const std::vector<double>& x) {
      return std::clamp(inner(x), clip_lo, clip_hi);
    };
    return m;
  };

  // a single observed class admits no slope information: constant empirical rate
  if (ones == 0 || ones == static_cast<long>(n) || spec.kind == LearnerKind::ConstantRate) {
    double rate = static_cast<double>(ones) / static_cast<double>(n);
    FittedModel f;
    f.params["constant"] = rate;
    f.eval = [rate, p](const std::vector<double>& x) {
      if (x.size() != p) throw ValidationError("learner: feature arity mismatch at evaluation");
      return rate;
    };
    return clipped(std::move(f));
  }

  switch (spec.kind) {
    case LearnerKind::LogisticIrls: {
      Eigen::MatrixXd X = detail::design_with_intercept(feats);
      Eigen::VectorXd y(n);
      for (std::size_t i = 0; i < n; ++i) y(i) = labels[i];
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
      Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
      double ll = detail::penalized_loglik(eta, y, beta, spec.ridge);
      int iters = 0;
      for (; iters < spec.irls_max_iter; ++iters) {
        Eigen::VectorXd prob(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
          prob(i) = sigmoid(eta(i));
          w(i) = prob(i) * (1.0 - prob(i));
        }
        Eigen::VectorXd g = X.transpose() * (y - prob);
        for (std::size_t j = 1; j <= p; ++j) g(j) -= spec.ridge * beta(j);
        Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
        for (std::size_t j = 1; j <= p; ++j) H(j, j) += spec.ridge;
        Eigen::VectorXd step = H.ldlt().solve(g);
        if (!step.allFinite())
          throw NumericError("separation detected, increase ridge penalty");
        // step halving keeps the penalized log-likelihood non-decreasing
        double scale = 1.0;
        Eigen::VectorXd cand, ceta;
        double cll = -std::numeric_limits<double>::infinity();
        for (int h = 0; h < 40; ++h, scale *= 0.5) {
          cand = beta + scale * step;
          ceta = X * cand;
          cll = detail::penalized_loglik(ceta, y, cand, spec.ridge);
          if (cll >= ll - 1e-10 * (1.0 + std::fabs(ll))) break;
          cll = -std::numeric_limits<double>::infinity();
        }
        if (cll == -std::numeric_limits<double>::infinity())
          throw NumericError("irls step rejected: likelihood not improvable");
        if (cll + 1e-10 * (1.0 + std::fabs(ll)) < ll)
          throw NumericError("irls likelihood decreased");
        double move = (cand - beta).cwiseAbs().maxCoeff();
        beta = cand;
        eta = ceta;
        ll = cll;
        if (beta.cwiseAbs().maxCoeff() > 1e8)
          throw NumericError("separation detected, increase ridge penalty");
        // every point saturated at its own label certifies a separated
        // sample: no finite maximizer exists and beta is drifting outward
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
          worst = std::min(worst, (2.0 * y(i) - 1.0) * eta(i));
        if (worst > 34.5)
          throw NumericError("separation detected, increase ridge penalty");
        if (move < spec.irls_tol) break;
      }
      FittedModel m = detail::linear_model(beta, p, true);
      m.params["iterations"] = iters;
      return clipped(std::move(m));
    }
    case LearnerKind::BoostedStumps: {
      double rate = std::clamp(static_cast<double>(ones) / n, 1e-6, 1.0 - 1e-6);
      double f0 = std::log(rate / (1.0 - rate));
      std::vector<double> f(n, f0), grad(n), hess(n);
      auto ps = detail::presort_for_stumps(feats, spec.thresholds);
      std::vector<detail::Stump> ens;
      ens.reserve(spec.rounds);
      for (int m = 0; m < spec.rounds; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
          double pr = sigmoid(f[i]);
          grad[i] = labels[i] - pr;
          hess[i] = pr * (1.0 - pr);
        }
        detail::Stump st;
        if (!detail::best_stump(feats, ps, grad, &hess, &st)) break;
        ens.push_back(st);
        for (std::size_t i = 0; i < n; ++i)
          f[i] += spec.shrinkage * (feats[i][st.feature] <= st.threshold ? st.left : st.right);
      }
      return clipped(detail::stump_ensemble_model(f0, spec.shrinkage, std::move(ens), p, true));
    }
    case LearnerKind::Misspecified: {
      FeatureMatrix reduced = drop_features(feats, spec.omit_features);
      FittedModel inner = fit_binary_propensity(reduced, labels, *spec.wrapped, clip_lo, clip_hi);
      return wrap_reduced(std::move(inner), spec.omit_features, p);
    }
    case LearnerKind::RidgeOls:
      throw ValidationError("learner: ridge_ols is a regression learner");
    case LearnerKind::Oracle:
      throw ValidationError("learner: oracle models are bound at cross-fit time");
    case LearnerKind::ConstantRate:
      break;  // handled above
  }
  throw ValidationError("bad learner kind");
}

// outcome-model pair on labelled training rows: mu_tilde on (x, s), mu on x,
// each fit per treatment arm; `pooled` fits one mu_tilde over both arms
struct MuPair {
  std::function<double(int, const std::vector<double>&, const std::vector<double>&)> mu_tilde;
  std::function<double(int, const std::vector<double>&)> mu;
  nlohmann::json params;
};

inline MuPair fit_mu_pair(const Dataset& data, const std::vector<int>& train_idx,
                          const LearnerSpec& spec_tilde, const LearnerSpec& spec_mu,
                          bool pooled = false) {
  FeatureMatrix xs[2], x_only[2], xs_pooled;
  std::vector<double> y[2], y_pooled;
  for (int i : train_idx) {
    const Observation& o = data.obs.at(i);
    if (o.r != 1) continue;
    std::vector<double> row = o.x;
    row.insert(row.end(), o.s.begin(), o.s.end());
    xs[o.t].push_back(row);
    x_only[o.t].push_back(o.x);
    y[o.t].push_back(*o.y);
    if (pooled) {
      xs_pooled.push_back(std::move(row));
      y_pooled.push_back(*o.y);
    }
  }
  if (y[0].empty() || y[1].empty())
    throw NumericError("outcome fit: a treatment arm has no labelled training units");

  MuPair out;
  if (pooled) {
    auto m = std::make_shared<FittedModel>(fit_regression(xs_pooled, y_pooled, spec_tilde));
    out.params["mu_tilde_pooled"] = m->params;
    out.mu_tilde = [m](int, const std::vector<double>& x, const std::vector<double>& s) {
      std::vector<double> row = x;
      row.insert(row.end(), s.begin(), s.end());
      return (*m)(row);
    };
  } else {
    auto m0 = std::make_shared<FittedModel>(fit_regression(xs[0], y[0], spec_tilde));
    auto m1 = std::make_shared<FittedModel>(fit_regression(xs[1], y[1], spec_tilde));
    out.params["mu_tilde_arm0"] = m0->params;
    out.params["mu_tilde_arm1"] = m1->params;
    out.mu_tilde = [m0, m1](int t, const std::vector<double>& x, const std::vector<double>& s) {
      std::vector<double> row = x;
      row.insert(row.end(), s.begin(), s.end());
      return t == 1 ? (*m1)(row) : (*m0)(row);
    };
  }
  auto g0 = std::make_shared<FittedModel>(fit_regression(x_only[0], y[0], spec_mu));
  auto g1 = std::make_shared<FittedModel>(fit_regression(x_only[1], y[1], spec_mu));
  out.params["mu_arm0"] = g0->params;
  out.params["mu_arm1"] = g1->params;
  out.mu = [g0, g1](int t, const std::vector<double>& x) {
    return t == 1 ? (*g1)(x) : (*g0)(x);
  };
  return out;
}

inline MuPair fit_mu_pair(const Dataset& data, const std::vector<int>& train_idx,
                          const LearnerSpec& spec) {
  return fit_mu_pair(data, train_idx, spec, spec, false);
}

// density ratio lambda(x) = P(R=1) / P(R=1 | x) by the Bayes-rule route:
// classify R on x over the training rows, divide the training labelled
// fraction by the classifier output, clip to [0, c_lambda]
inline FittedModel fit_density_ratio(const Dataset& data, const std::vector<int>& train_idx,
                                     const LearnerSpec& spec, double c_lambda) {
  if (!(c_lambda > 0.0)) throw ValidationError("learner: c_lambda must be positive");
  FeatureMatrix feats;
  std::vector<int> labels;
  long n_lab = 0;
  for (int i : train_idx) {
    const Observation& o = data.obs.at(i);
    feats.push_back(o.x);
    labels.push_back(o.r);
    n_lab += o.r;
  }
  if (feats.empty()) throw ValidationError("density ratio: empty training set");
  if (n_lab == 0) throw NumericError("density ratio: no labelled training units");
  double r_train = static_cast<double>(n_lab) / static_cast<double>(feats.size());
  FittedModel q = fit_binary_propensity(feats, labels, spec, 1e-6, 1.0);
  auto q_eval = std::make_shared<FittedModel>(std::move(q));
  FittedModel out;
  out.params = nlohmann::json{{"r_train", r_train}, {"classifier", q_eval->params}};
  out.eval = [q_eval, r_train, c_lambda](const std::vector<double>& x) {
    return std::clamp(r_train / (*q_eval)(x), 0.0, c_lambda);
  };
  return out;
}

// ---- json ----

inline nlohmann::json to_json(const LearnerSpec& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  j["ridge"] = s.ridge;
  j["irls_max_iter"] = s.irls_max_iter;
  j["irls_tol"] = s.irls_tol;
  j["rounds"] = s.rounds;
  j["shrinkage"] = s.shrinkage;
  j["thresholds"] = s.thresholds;
  if (s.kind == LearnerKind::Misspecified) {
    j["omit_features"] = s.omit_features;
    j["wrapped"] = to_json(*s.wrapped);
  }
  return j;
}

inline LearnerSpec learner_spec_from_json(const nlohmann::json& j) {
  LearnerSpec s;
  try {
    s.kind = learner_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("ridge")) s.ridge = j.at("ridge").get<double>();
    if (j.contains("irls_max_iter")) s.irls_max_iter = j.at("irls_max_iter").get<int>();
    if (j.contains("irls_tol")) s.irls_tol = j.at("irls_tol").get<double>();
    if (j.contains("rounds")) s.rounds = j.at("rounds").get<int>();
    if (j.contains("shrinkage")) s.shrinkage = j.at("shrinkage").get<double>();
    if (j.contains("thresholds")) s.thresholds = j.at("thresholds").get<int>();
    if (s.kind == LearnerKind::Misspecified) {
      s.omit_features = j.at("omit_features").get<std::vector<int>>();
      s.wrapped = std::make_shared<LearnerSpec>(learner_spec_from_json(j.at("wrapped")));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("learner spec json: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace sate
