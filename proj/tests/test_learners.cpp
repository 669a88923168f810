#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sate/dgp.hpp"
#include "sate/learners.hpp"

using namespace sate;

namespace {

LearnerSpec irls() {
  LearnerSpec s;
  s.kind = LearnerKind::LogisticIrls;
  return s;
}

LearnerSpec ols(double ridge = 0.0) {
  LearnerSpec s;
  s.kind = LearnerKind::RidgeOls;
  s.ridge = ridge;
  return s;
}

LearnerSpec stumps(int rounds) {
  LearnerSpec s;
  s.kind = LearnerKind::BoostedStumps;
  s.rounds = rounds;
  return s;
}

}  // namespace

TEST_CASE("degenerate classes fall back to the clipped empirical rate") {
  FeatureMatrix feats{{0.1}, {-0.7}, {2.0}};
  FittedModel all_one = fit_binary_propensity(feats, {1, 1, 1}, irls());
  CHECK(all_one({5.0}) == 0.99);
  FittedModel all_zero = fit_binary_propensity(feats, {0, 0, 0}, irls());
  CHECK(all_zero({-3.0}) == 0.01);
  LearnerSpec cr;
  cr.kind = LearnerKind::ConstantRate;
  FittedModel c = fit_binary_propensity(feats, {1, 0, 1}, cr);
  CHECK(c({0.0}) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("logistic irls recovers the generating coefficient") {
  Rng rng(71);
  FeatureMatrix feats;
  std::vector<int> labels;
  for (int i = 0; i < 5000; ++i) {
    double x = rng.uniform(-1.0, 1.0);
    feats.push_back({x});
    labels.push_back(rng.bernoulli(sigmoid(2.0 * x)) ? 1 : 0);
  }
  FittedModel m = fit_binary_propensity(feats, labels, irls());
  auto coef = m.params.at("coef").get<std::vector<double>>();
  CHECK(std::fabs(coef[1] - 2.0) < 0.15);
  CHECK(std::fabs(coef[0]) < 0.15);

  // identical inputs give identical coefficients
  FittedModel again = fit_binary_propensity(feats, labels, irls());
  CHECK(again.params.at("coef").get<std::vector<double>>() == coef);
}

TEST_CASE("labels independent of features track the base rate") {
  Rng rng(72);
  FeatureMatrix feats;
  std::vector<int> labels;
  long ones = 0;
  for (int i = 0; i < 5000; ++i) {
    feats.push_back({rng.uniform(-1.0, 1.0)});
    int y = rng.bernoulli(0.4) ? 1 : 0;
    ones += y;
    labels.push_back(y);
  }
  double base = static_cast<double>(ones) / 5000.0;
  FittedModel m = fit_binary_propensity(feats, labels, irls());
  for (double x = -0.9; x <= 0.9; x += 0.3)
    CHECK(std::fabs(m({x}) - base) < 0.05);
}

TEST_CASE("perfect separation is detected, ridge rescues it") {
  FeatureMatrix feats;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    double x = (i - 99.5) / 50.0;
    feats.push_back({x});
    labels.push_back(x > 0.0 ? 1 : 0);
  }
  CHECK_THROWS_AS(fit_binary_propensity(feats, labels, irls()), NumericError);
  LearnerSpec ridged = irls();
  ridged.ridge = 1.0;
  FittedModel m = fit_binary_propensity(feats, labels, ridged);
  CHECK(m({1.0}) > 0.9);
  CHECK(m({-1.0}) < 0.1);
}

TEST_CASE("constant targets fit exactly") {
  Rng rng(73);
  FeatureMatrix feats;
  std::vector<double> y;
  for (int i = 0; i < 50; ++i) {
    feats.push_back({rng.uniform(-1.0, 1.0)});
    y.push_back(3.0);
  }
  FittedModel m = fit_regression(feats, y, ols());
  CHECK(m({0.0}) == Catch::Approx(3.0).epsilon(1e-12));
  CHECK(m({0.77}) == Catch::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("ols slope recovery and singular design detection") {
  Rng rng(74);
  FeatureMatrix feats;
  std::vector<double> y;
  for (int i = 0; i < 5000; ++i) {
    double x = rng.uniform(-1.0, 1.0);
    feats.push_back({x});
    y.push_back(2.0 * x + 0.5 * rng.normal());
  }
  FittedModel m = fit_regression(feats, y, ols());
  auto coef = m.params.at("coef").get<std::vector<double>>();
  CHECK(std::fabs(coef[1] - 2.0) < 0.1);

  FeatureMatrix dup;
  std::vector<double> yd;
  for (int i = 0; i < 40; ++i) {
    double x = rng.uniform(-1.0, 1.0);
    dup.push_back({x, x});  // collinear columns
    yd.push_back(x);
  }
  CHECK_THROWS_AS(fit_regression(dup, yd, ols()), NumericError);
  CHECK_NOTHROW(fit_regression(dup, yd, ols(1e-4)));
}

TEST_CASE("boosted stumps learn a vee shape") {
  Rng rng(75);
  const double sigma = 0.3;
  FeatureMatrix feats, test_feats;
  std::vector<double> y, test_y;
  for (int i = 0; i < 5000; ++i) {
    double x = rng.uniform(-1.0, 1.0);
    feats.push_back({x});
    y.push_back(std::fabs(x) + sigma * rng.normal());
  }
  for (int i = 0; i < 2000; ++i) {
    double x = rng.uniform(-1.0, 1.0);
    test_feats.push_back({x});
    test_y.push_back(std::fabs(x) + sigma * rng.normal());
  }
  FittedModel m = fit_regression(feats, y, stumps(200));
  double mse = 0.0;
  for (std::size_t i = 0; i < test_feats.size(); ++i) {
    double d = m(test_feats[i]) - test_y[i];
    mse += d * d;
  }
  mse /= test_feats.size();
  CHECK(mse < 0.05 + sigma * sigma);
}

TEST_CASE("boosted stump classifier separates a step") {
  Rng rng(76);
  FeatureMatrix feats;
  std::vector<int> labels;
  for (int i = 0; i < 4000; ++i) {
    double x = rng.uniform(-1.0, 1.0);
    feats.push_back({x});
    labels.push_back(rng.bernoulli(x > 0.0 ? 0.85 : 0.15) ? 1 : 0);
  }
  FittedModel m = fit_binary_propensity(feats, labels, stumps(150));
  CHECK(std::fabs(m({0.5}) - 0.85) < 0.08);
  CHECK(std::fabs(m({-0.5}) - 0.15) < 0.08);
}

TEST_CASE("misspecified wrapper hides the omitted feature") {
  Rng rng(77);
  FeatureMatrix feats;
  std::vector<double> y;
  for (int i = 0; i < 2000; ++i) {
    double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
    feats.push_back({a, b});
    y.push_back(a + 5.0 * b + 0.1 * rng.normal());
  }
  FittedModel m = fit_regression(feats, y, misspecified(ols(), {1}));
  CHECK(m({0.3, -0.9}) == m({0.3, 0.9}));
  CHECK(std::fabs((m({1.0, 0.0}) - m({0.0, 0.0})) - 1.0) < 0.3);
  // omitting everything leaves the intercept-only model
  FittedModel c = fit_regression(feats, y, misspecified(ols(), {0, 1}));
  CHECK(c({0.3, -0.9}) == c({-0.5, 0.2}));
}

TEST_CASE("outcome model pair on the benchmark design") {
  Dataset data = generate(lg1_spec(), 10000, 5151);
  std::vector<int> all(data.n());
  for (int i = 0; i < data.n(); ++i) all[i] = i;

  MuPair mp = fit_mu_pair(data, all, ols());
  // mu~*(t,x,s) = t + x + 0.5 s
  CHECK(std::fabs(mp.mu_tilde(1, {0.0}, {0.0}) - 1.0) < 0.1);
  CHECK(std::fabs(mp.mu_tilde(1, {1.0}, {0.0}) - mp.mu_tilde(1, {0.0}, {0.0}) - 1.0) < 0.1);
  CHECK(std::fabs(mp.mu_tilde(0, {0.0}, {2.0}) - mp.mu_tilde(0, {0.0}, {0.0}) - 1.0) < 0.1);
  // mu*(t,x) = 2t + 1.25x
  CHECK(std::fabs(mp.mu(1, {0.0}) - 2.0) < 0.15);
  CHECK(std::fabs(mp.mu(1, {1.0}) - mp.mu(1, {0.0}) - 1.25) < 0.15);

  MuPair pooled = fit_mu_pair(data, all, ols(), ols(), true);
  CHECK(pooled.mu_tilde(1, {0.4}, {1.0}) == pooled.mu_tilde(0, {0.4}, {1.0}));

  // hiding the surrogate makes mu~ collapse onto mu's feature set
  MuPair blind = fit_mu_pair(data, all, misspecified(ols(), {1}), ols());
  CHECK(blind.mu_tilde(1, {0.4}, {-3.0}) == blind.mu_tilde(1, {0.4}, {3.0}));

  // a treatment arm missing from the labelled training rows is an error
  std::vector<int> only_treated;
  for (int i = 0; i < data.n(); ++i)
    if (data.obs[i].t == 1) only_treated.push_back(i);
  CHECK_THROWS_AS(fit_mu_pair(data, only_treated, ols()), NumericError);
}

TEST_CASE("density ratio estimates are near one where they should be") {
  DgpSpec mcar = lg1_spec();
  mcar.family = DgpFamily::Mcar;
  mcar.p_label = 0.4;
  mcar.r_coef.clear();
  Dataset dm = generate(finalize_spec(mcar), 10000, 909);
  std::vector<int> all(dm.n());
  for (int i = 0; i < dm.n(); ++i) all[i] = i;
  FittedModel lam = fit_density_ratio(dm, all, irls(), 50.0);
  for (double x = -0.9; x <= 0.9; x += 0.3)
    CHECK(std::fabs(lam({x}) - 1.0) < 0.1);

  // MAR2: E[lambda(X) | R=1] = 1, so the labelled average sits near one
  Dataset dl = generate(lg1_spec(), 10000, 910);
  FittedModel lam2 = fit_density_ratio(dl, all, irls(), 50.0);
  double acc = 0.0;
  long n_lab = 0;
  for (const auto& o : dl.obs)
    if (o.r == 1) {
      acc += lam2(o.x);
      ++n_lab;
    }
  CHECK(std::fabs(acc / n_lab - 1.0) < 0.1);

  // no labelled training rows -> error
  std::vector<int> unlab;
  for (int i = 0; i < dl.n(); ++i)
    if (dl.obs[i].r == 0) unlab.push_back(i);
  CHECK_THROWS_AS(fit_density_ratio(dl, unlab, irls(), 50.0), NumericError);
}

TEST_CASE("learner spec json round trip") {
  LearnerSpec s = misspecified(stumps(120), {0, 2});
  s.wrapped->shrinkage = 0.05;
  LearnerSpec back = learner_spec_from_json(to_json(s));
  CHECK(back.kind == LearnerKind::Misspecified);
  CHECK(back.omit_features == std::vector<int>{0, 2});
  CHECK(back.wrapped->kind == LearnerKind::BoostedStumps);
  CHECK(back.wrapped->rounds == 120);
  CHECK(back.wrapped->shrinkage == 0.05);
  CHECK_THROWS_AS(learner_spec_from_json(nlohmann::json{{"kind", "nope"}}), ValidationError);

  LearnerSpec bad;
  bad.shrinkage = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("validation rejects malformed learner inputs") {
  CHECK_THROWS_AS(fit_regression({}, {}, ols()), ValidationError);
  CHECK_THROWS_AS(fit_regression({{1.0}, {std::nan("")}}, {0.0, 1.0}, ols()), ValidationError);
  CHECK_THROWS_AS(fit_binary_propensity({{1.0}}, {2}, irls()), ValidationError);
  CHECK_THROWS_AS(fit_regression({{1.0}}, {1.0}, irls()), ValidationError);
  LearnerSpec oracle;
  oracle.kind = LearnerKind::Oracle;
  CHECK_THROWS_AS(fit_regression({{1.0}}, {1.0}, oracle), ValidationError);
}
