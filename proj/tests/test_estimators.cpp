#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "sate/estimators.hpp"

using namespace sate;

namespace {

DgpSpec mcar_like_lg1(double p) {
  DgpSpec spec = lg1_spec();
  spec.family = DgpFamily::Mcar;
  spec.p_label = p;
  return spec;
}

}  // namespace

TEST_CASE("oracle plug-in lands on the truth at clt scale") {
  DgpSpec spec = lg1_spec();
  Dataset data = generate(spec, 100000, 2024);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::OraclePlugin;
  cfg.oracle = std::make_shared<TruthFunctions>(truth_functions(spec));
  EstimateReport rep = estimate(data, cfg, 1);

  REQUIRE(rep.scale == Scale::SqrtN);
  REQUIRE(rep.n == 100000);
  double se = std::sqrt(rep.variance_hat / rep.n);
  CHECK(std::abs(rep.delta_hat - 2.0) < 4.0 * se);
  CHECK(rep.variance_hat > 0.0);
  CHECK(rep.ci_lo < rep.delta_hat);
  CHECK(rep.ci_hi > rep.delta_hat);
  CHECK(static_cast<int>(rep.influence_values.size()) == rep.n);
  CHECK(std::abs(pairwise_mean(rep.influence_values)) < 1e-10);
}

TEST_CASE("fully labelled data: the general estimator is classical aipw bitwise") {
  DgpSpec spec = mcar_like_lg1(1.0);
  Dataset data = generate(spec, 3000, 5);
  REQUIRE(data.n_labelled() == data.n());

  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::DmlGeneral;
  NuisanceFits fits = cross_fit(data, build_plan(data, cfg, 99, nullptr));
  EstimateReport a = estimate_with_fits(data, fits, EstimatorKind::DmlGeneral, cfg);
  EstimateReport b = estimate_with_fits(data, fits, EstimatorKind::FullDataAipw, cfg);
  CHECK(a.delta_hat == b.delta_hat);
  CHECK(a.variance_hat == b.variance_hat);
  CHECK(a.ci_lo == b.ci_lo);
  CHECK(b.scale == Scale::SqrtN);

  // and through the top-level entry point as well (independent fits, but the
  // degenerate labelling fit is exactly the constant one on both routes)
  EstimateReport a2 = estimate(data, cfg, 42);
  EstimatorConfig cfg_full = cfg;
  cfg_full.kind = EstimatorKind::FullDataAipw;
  EstimateReport b2 = estimate(data, cfg_full, 42);
  CHECK(a2.delta_hat == b2.delta_hat);
}

TEST_CASE("under mcar the pinned-ratio estimator is the general one bitwise") {
  DgpSpec spec = mcar_like_lg1(0.5);
  Dataset data = generate(spec, 4000, 17);

  EstimatorConfig mcar_cfg;
  mcar_cfg.kind = EstimatorKind::DmlMcar;
  EstimateReport tilde = estimate(data, mcar_cfg, 7);

  EstimatorConfig gen_cfg;
  gen_cfg.kind = EstimatorKind::DmlGeneral;
  gen_cfg.r_spec.kind = LearnerKind::ConstantRate;
  EstimateReport general = estimate(data, gen_cfg, 7);

  CHECK(tilde.delta_hat == general.delta_hat);
  CHECK(tilde.scale == Scale::SqrtNl);
  CHECK(general.scale == Scale::SqrtN);
  CHECK(tilde.n_l == general.n_l);
}

TEST_CASE("labelled means equal weighted full means") {
  DgpSpec spec = lg1_spec();
  Dataset data = generate(spec, 5000, 23);
  const double r_n = static_cast<double>(data.n_labelled()) / data.n();

  std::vector<double> labelled_f, weighted_f;
  for (const Observation& o : data.obs) {
    double f = 0.0;
    if (o.r == 1) {
      f = *o.y * *o.y + o.x[0];
      labelled_f.push_back(f);
    }
    weighted_f.push_back(o.r == 1 ? f / r_n : 0.0);
  }
  double lhs = pairwise_mean(labelled_f);
  double rhs = pairwise_mean(weighted_f);
  CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(lhs)));
}

TEST_CASE("influence values average to zero at the estimate") {
  DgpSpec spec = lg1_spec();
  Dataset data = generate(spec, 2000, 29);
  DgpSpec mcar_spec = mcar_like_lg1(0.45);
  Dataset mcar_data = generate(mcar_spec, 2000, 31);

  auto check_centered = [](const Dataset& d, EstimatorConfig cfg) {
    EstimateReport rep = estimate(d, cfg, 3);
    REQUIRE(rep.influence_values.size() == static_cast<size_t>(d.n()));
    CHECK(std::abs(pairwise_mean(rep.influence_values)) < 1e-10);
  };

  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::DmlGeneral;
  check_centered(data, cfg);
  cfg.kind = EstimatorKind::DmlDensityRatio;
  check_centered(data, cfg);
  cfg.kind = EstimatorKind::NoSurrogateBaseline;
  check_centered(data, cfg);
  cfg.kind = EstimatorKind::ZhangBradic;
  check_centered(data, cfg);
  cfg.kind = EstimatorKind::DmlMcar;
  check_centered(mcar_data, cfg);
}

TEST_CASE("alpha moves only the interval") {
  DgpSpec spec = lg1_spec();
  Dataset data = generate(spec, 1500, 37);
  EstimatorConfig a;
  a.kind = EstimatorKind::DmlGeneral;
  a.alpha = 0.05;
  EstimatorConfig b = a;
  b.alpha = 0.2;
  EstimateReport ra = estimate(data, a, 11);
  EstimateReport rb = estimate(data, b, 11);
  CHECK(ra.delta_hat == rb.delta_hat);
  CHECK(ra.variance_hat == rb.variance_hat);
  CHECK(rb.ci_hi - rb.ci_lo < ra.ci_hi - ra.ci_lo);
}

TEST_CASE("variance machinery on synthetic constant scores") {
  // all-unlabelled data with mu-delta identically c: every score equals c
  const double c = 1.5;
  Dataset data;
  data.d_x = 1;
  data.d_s = 1;
  for (int i = 0; i < 100; ++i) {
    Observation o;
    o.x = {static_cast<double>(i) / 100.0};
    o.s = {0.0};
    o.t = i % 2;
    o.r = 0;
    data.obs.push_back(o);
  }
  data.validate();

  NuisanceFits fits;
  fits.folds.k = 1;
  fits.folds.fold_of.assign(100, 0);
  NuisanceHandles h;
  h.e = [](const std::vector<double>&) { return 0.5; };
  h.r = [](int, const std::vector<double>&, const std::vector<double>&) { return 1.0; };
  h.mu = [c](int t, const std::vector<double>&) { return t == 1 ? c : 0.0; };
  h.mu_tilde = [c](int t, const std::vector<double>&, const std::vector<double>&) {
    return t == 1 ? c : 0.0;
  };
  h.lambda = [](const std::vector<double>&) { return 1.0; };
  fits.per_fold.push_back(h);
  fits.train_idx.push_back({});
  fits.r_n_hat = 0.0;

  CiResult res = variance_and_ci(data, 0.0, fits, InfluenceKind::PsiGeneral, 0.05);
  CHECK(res.variance_hat == c * c);
  const double z = normal_quantile(0.975);
  CHECK(res.ci_hi == Catch::Approx(z * std::sqrt(c * c / 100.0)).epsilon(1e-12));
  CHECK(res.ci_lo == Catch::Approx(-z * std::sqrt(c * c / 100.0)).epsilon(1e-12));

  CHECK_THROWS_AS(variance_and_ci(data, 0.0, fits, InfluenceKind::PsiGeneral, 1.5),
                  ValidationError);
  CHECK_THROWS_AS(variance_and_ci(data, 0.0, fits, InfluenceKind::PsiGeneral, 0.0),
                  ValidationError);
}

TEST_CASE("cross-fit estimators land near the truth on a large sample") {
  DgpSpec spec = lg1_spec();
  Dataset data = generate(spec, 20000, 41);

  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::DmlGeneral;
  EstimateReport gen = estimate(data, cfg, 13);
  CHECK(std::abs(gen.delta_hat - 2.0) < 4.0 * std::sqrt(gen.variance_hat / gen.n));

  cfg.kind = EstimatorKind::DmlDensityRatio;
  EstimateReport ratio = estimate(data, cfg, 13);
  REQUIRE(ratio.scale == Scale::SqrtNl);
  CHECK(ratio.n_eff() == data.n_labelled());
  CHECK(std::abs(ratio.delta_hat - 2.0) < 4.0 * std::sqrt(ratio.variance_hat / ratio.n_eff()));

  cfg.kind = EstimatorKind::ZhangBradic;
  EstimateReport zb = estimate(data, cfg, 13);
  REQUIRE(zb.scale == Scale::SqrtN);
  CHECK(std::abs(zb.delta_hat - 2.0) < 4.0 * std::sqrt(zb.variance_hat / zb.n));
}

TEST_CASE("estimator requirements are enforced by name") {
  DgpSpec full = mcar_like_lg1(1.0);
  Dataset full_data = generate(full, 400, 3);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::ZhangBradic;
  CHECK_THROWS_WITH(estimate(full_data, cfg, 1),
                    Catch::Matchers::ContainsSubstring("zhang_bradic"));

  DgpSpec part = lg1_spec();
  Dataset part_data = generate(part, 400, 3);
  cfg.kind = EstimatorKind::FullDataAipw;
  CHECK_THROWS_WITH(estimate(part_data, cfg, 1),
                    Catch::Matchers::ContainsSubstring("full_data_aipw"));

  cfg.kind = EstimatorKind::OraclePlugin;
  CHECK_THROWS_WITH(estimate(part_data, cfg, 1),
                    Catch::Matchers::ContainsSubstring("oracle_plugin"));

  cfg.kind = EstimatorKind::DmlGeneral;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(estimate(part_data, cfg, 1), ValidationError);
}

TEST_CASE("non-finite nuisance evaluations identify the unit") {
  DgpSpec spec = lg1_spec();
  Dataset data = generate(spec, 50, 7);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::DmlGeneral;
  NuisanceFits fits = oracle_fits(data, std::make_shared<TruthFunctions>(truth_functions(spec)));
  fits.per_fold[0].e = [](const std::vector<double>&) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_WITH(estimate_with_fits(data, fits, EstimatorKind::DmlGeneral, cfg),
                    Catch::Matchers::ContainsSubstring("unit"));
}

TEST_CASE("estimator configuration survives json") {
  EstimatorConfig c;
  c.kind = EstimatorKind::DmlDensityRatio;
  c.k = 3;
  c.alpha = 0.1;
  c.clip_eps = 0.02;
  c.c_lambda = 25.0;
  c.r_features = RFeatures::TX;
  c.pooled_outcome_regression = true;
  c.mu_tilde_spec.kind = LearnerKind::BoostedStumps;
  c.mu_tilde_spec.rounds = 120;
  c.truth_dgp = std::make_shared<const DgpSpec>(lg1_spec());

  EstimatorConfig back = estimator_config_from_json(to_json(c));
  CHECK(back.kind == EstimatorKind::DmlDensityRatio);
  CHECK(back.k == 3);
  CHECK(back.alpha == 0.1);
  CHECK(back.clip_eps == 0.02);
  CHECK(back.c_lambda == 25.0);
  CHECK(back.r_features == RFeatures::TX);
  CHECK(back.pooled_outcome_regression);
  CHECK(back.mu_tilde_spec.kind == LearnerKind::BoostedStumps);
  CHECK(back.mu_tilde_spec.rounds == 120);
  REQUIRE(back.truth_dgp);
  CHECK(back.truth_dgp->tau == 1.0);

  nlohmann::json bad = to_json(c);
  bad["kind"] = "nonsense";
  CHECK_THROWS_AS(estimator_config_from_json(bad), ValidationError);
}
