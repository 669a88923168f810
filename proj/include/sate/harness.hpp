#pragma once

// Monte-Carlo experiment runner: replicated estimation over a scenario,
// misspecification matrices, labelling-regime sweeps, and the paired
// imputation-estimator comparison.  Aggregates per-replication results into
// machine-readable reports with the relevant oracle bound alongside.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sate/bounds.hpp"
#include "sate/estimators.hpp"

namespace sate {

inline constexpr const char* kSateVersion = "0.1.0";

// raised when a scenario exceeds the tolerated replication failure rate;
// the command-line driver maps it to its own exit code
struct HarnessAbort : public std::runtime_error {
  explicit HarnessAbort(const std::string& msg) : std::runtime_error(msg) {}
};

struct NamedEstimator {
  std::string name;  // row label in reports and csv; defaults to the kind
  EstimatorConfig config;
};

struct ScenarioConfig {
  std::string scenario_id = "scenario";
  DgpSpec spec;
  long n = 2000;
  int replications = 1;
  std::vector<NamedEstimator> estimators;
  std::uint64_t seed = 1;
  long bounds_budget = 200000;  // 0 disables the oracle bound column
  std::string csv_path;         // optional mc.csv destination
  std::string report_path;      // optional json destination

  void validate() const {
    if (n < 1) throw ValidationError("scenario: n must be positive");
    if (replications < 1) throw ValidationError("scenario: replications must be at least 1");
    if (estimators.empty()) throw ValidationError("scenario: needs at least one estimator");
    if (bounds_budget != 0 && bounds_budget < 10000)
      throw ValidationError("scenario: bounds_budget must be 0 or at least 10^4");
    for (const auto& ne : estimators) ne.config.validate();
  }
};

// one successful replication, exactly the csv row schema
struct McRow {
  std::string scenario_id;
  std::string estimator;
  int rep = 0;
  double delta_hat = 0.0;
  double variance_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool covered = false;
  long n = 0;
  long n_l = 0;
};

struct EstimatorMetrics {
  std::string estimator;
  int replications = 0;  // successful ones
  int failures = 0;
  std::string first_error;
  Scale scale = Scale::SqrtN;
  double mean_delta_hat = 0.0;
  double mean_bias = 0.0;  // mean(delta_hat) - delta_star
  double se_bias = 0.0;    // sd(delta_hat) / sqrt(#successes)
  double mean_n_l = 0.0;
  double scaled_variance = 0.0;  // N_eff * var(delta_hat) across replications
  double mean_variance_hat = 0.0;
  double coverage = 0.0;
  double mean_ci_length = 0.0;
  double oracle_bound = std::numeric_limits<double>::quiet_NaN();
  std::string oracle_bound_name;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["estimator"] = estimator;
    j["replications"] = replications;
    j["failures"] = failures;
    if (!first_error.empty()) j["first_error"] = first_error;
    j["scale"] = to_string(scale);
    j["mean_delta_hat"] = mean_delta_hat;
    j["mean_bias"] = mean_bias;
    j["se_bias"] = se_bias;
    j["mean_n_l"] = mean_n_l;
    j["scaled_variance"] = scaled_variance;
    j["mean_variance_hat"] = mean_variance_hat;
    j["coverage"] = coverage;
    j["mean_ci_length"] = mean_ci_length;
    if (std::isfinite(oracle_bound)) {
      j["oracle_bound"] = oracle_bound;
      j["oracle_bound_name"] = oracle_bound_name;
    }
    return j;
  }
};

struct MetricsReport {
  std::string scenario_id;
  std::string version = kSateVersion;
  nlohmann::json config;  // the full scenario configuration, seeds included
  double delta_star = 0.0;
  BoundSet bounds;  // empty when bounds_budget == 0
  std::vector<EstimatorMetrics> estimators;
  std::vector<McRow> rows;  // successful replications, csv-ready

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario_id"] = scenario_id;
    j["version"] = version;
    j["config"] = config;
    j["delta_star"] = delta_star;
    if (!bounds.entries.empty()) j["bounds"] = bounds.to_json();
    j["estimators"] = nlohmann::json::array();
    for (const auto& m : estimators) j["estimators"].push_back(m.to_json());
    return j;
  }
};

// ---- json round trip for scenario configs ----

inline nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["scenario_id"] = c.scenario_id;
  j["spec"] = to_json(c.spec);
  j["n"] = c.n;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["bounds_budget"] = c.bounds_budget;
  j["estimators"] = nlohmann::json::array();
  for (const auto& ne : c.estimators)
    j["estimators"].push_back({{"name", ne.name}, {"config", to_json(ne.config)}});
  return j;
}

inline ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  try {
    c.spec = dgp_spec_from_json(j.at("spec"));
    if (j.contains("scenario_id")) c.scenario_id = j.at("scenario_id").get<std::string>();
    if (j.contains("n")) c.n = j.at("n").get<long>();
    if (j.contains("replications")) c.replications = j.at("replications").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("bounds_budget")) c.bounds_budget = j.at("bounds_budget").get<long>();
    if (j.contains("csv_path")) c.csv_path = j.at("csv_path").get<std::string>();
    if (j.contains("report_path")) c.report_path = j.at("report_path").get<std::string>();
    for (const auto& je : j.value("estimators", nlohmann::json::array())) {
      NamedEstimator ne;
      ne.config = estimator_config_from_json(je.at("config"));
      ne.name = je.contains("name") ? je.at("name").get<std::string>()
                                    : to_string(ne.config.kind);
      c.estimators.push_back(std::move(ne));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scenario config json: ") + e.what());
  }
  return c;
}

// ---- csv ----

inline void write_mc_csv(std::ostream& os, const std::vector<McRow>& rows) {
  os << "scenario_id,estimator,rep,delta_hat,variance_hat,ci_lo,ci_hi,covered,n,n_l\n";
  os << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.scenario_id << ',' << r.estimator << ',' << r.rep << ',' << r.delta_hat << ','
       << r.variance_hat << ',' << r.ci_lo << ',' << r.ci_hi << ',' << (r.covered ? 1 : 0) << ','
       << r.n << ',' << r.n_l << '\n';
  }
}

inline void write_mc_csv(const std::string& path, const std::vector<McRow>& rows) {
  std::ofstream f(path);
  if (!f) throw ValidationError("harness: cannot open csv path '" + path + "'");
  write_mc_csv(f, rows);
}

namespace detail {

inline std::uint64_t data_seed(std::uint64_t master, int rep) {
  return derive_seed(derive_seed(master, 0x64617461ULL), static_cast<std::uint64_t>(rep));
}

inline std::uint64_t estimator_seed(std::uint64_t master, int rep, std::size_t est_idx) {
  return derive_seed(
      derive_seed(derive_seed(master, 0x65737469ULL), static_cast<std::uint64_t>(rep)),
      static_cast<std::uint64_t>(est_idx));
}

// which oracle bound sits beside this estimator's scaled variance
inline std::pair<BoundId, std::string> oracle_bound_choice(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::DmlGeneral:
    case EstimatorKind::FullDataAipw:
    case EstimatorKind::OraclePlugin: return {BoundId::VStar, "v_star"};
    case EstimatorKind::DmlDensityRatio:
    case EstimatorKind::DmlMcar: return {BoundId::VTilde, "v_tilde"};
    case EstimatorKind::NoSurrogateBaseline: return {BoundId::ZbGap, "v_zb_our"};
    case EstimatorKind::ZhangBradic: return {BoundId::ZbGap, "v_zb_zb"};
  }
  throw ValidationError("bad estimator kind");
}

inline bool uses_oracle(const EstimatorConfig& c) {
  return c.kind == EstimatorKind::OraclePlugin || c.e_spec.kind == LearnerKind::Oracle ||
         c.r_spec.kind == LearnerKind::Oracle || c.mu_tilde_spec.kind == LearnerKind::Oracle ||
         c.mu_spec.kind == LearnerKind::Oracle || c.lambda_spec.kind == LearnerKind::Oracle;
}

}  // namespace detail

inline MetricsReport run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const DgpSpec spec = finalize_spec(cfg.spec);

  MetricsReport report;
  report.scenario_id = cfg.scenario_id;
  report.config = to_json(cfg);

  TruthFunctions truth_n = truth_functions(spec, cfg.n);  // labelling rate at this n
  report.delta_star = truth_n.delta_star;
  auto oracle = std::make_shared<const TruthFunctions>(truth_n);

  // one bound evaluation serves every estimator row
  if (cfg.bounds_budget > 0) {
    std::vector<BoundId> which;
    for (const auto& ne : cfg.estimators) {
      BoundId id = detail::oracle_bound_choice(ne.config.kind).first;
      if (bound_applicable(id, spec) &&
          std::find(which.begin(), which.end(), id) == which.end())
        which.push_back(id);
    }
    if (!which.empty()) {
      BoundRequest breq;
      breq.spec = spec;
      breq.which = which;
      breq.mc_budget = cfg.bounds_budget;
      breq.seed = derive_seed(cfg.seed, 0x626f756eULL);
      report.bounds = compute_bounds(breq);
    }
  }

  struct Cell {
    std::vector<double> delta_hats, variance_hats, ci_lengths, n_ls;
    long covered = 0;
    Scale scale = Scale::SqrtN;
    int failures = 0;
    std::string first_error;
  };
  std::vector<Cell> cells(cfg.estimators.size());

  for (int rep = 0; rep < cfg.replications; ++rep) {
    Dataset data = generate(spec, cfg.n, detail::data_seed(cfg.seed, rep));
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      const NamedEstimator& ne = cfg.estimators[e];
      Cell& cell = cells[e];
      try {
        EstimatorConfig ecfg = ne.config;
        if (detail::uses_oracle(ecfg) && !ecfg.oracle) ecfg.oracle = oracle;
        EstimateReport er =
            estimate(data, ecfg, detail::estimator_seed(cfg.seed, rep, e));
        bool covered = er.ci_lo <= report.delta_star && report.delta_star <= er.ci_hi;
        cell.delta_hats.push_back(er.delta_hat);
        cell.variance_hats.push_back(er.variance_hat);
        cell.ci_lengths.push_back(er.ci_hi - er.ci_lo);
        cell.n_ls.push_back(static_cast<double>(er.n_l));
        cell.covered += covered ? 1 : 0;
        cell.scale = er.scale;
        McRow row;
        row.scenario_id = cfg.scenario_id;
        row.estimator = ne.name;
        row.rep = rep;
        row.delta_hat = er.delta_hat;
        row.variance_hat = er.variance_hat;
        row.ci_lo = er.ci_lo;
        row.ci_hi = er.ci_hi;
        row.covered = covered;
        row.n = er.n;
        row.n_l = er.n_l;
        report.rows.push_back(std::move(row));
      } catch (const std::exception& ex) {
        ++cell.failures;
        if (cell.first_error.empty()) cell.first_error = ex.what();
      }
    }
  }

  for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
    const Cell& cell = cells[e];
    if (cell.failures * 5 > cfg.replications) {  // > 20%
      std::ostringstream msg;
      msg << "scenario '" << cfg.scenario_id << "': estimator '" << cfg.estimators[e].name
          << "' failed " << cell.failures << " of " << cfg.replications
          << " replications (first error: " << cell.first_error << ")";
      throw HarnessAbort(msg.str());
    }
    EstimatorMetrics m;
    m.estimator = cfg.estimators[e].name;
    m.replications = static_cast<int>(cell.delta_hats.size());
    m.failures = cell.failures;
    m.first_error = cell.first_error;
    m.scale = cell.scale;
    if (!cell.delta_hats.empty()) {
      m.mean_delta_hat = pairwise_mean(cell.delta_hats);
      m.mean_bias = m.mean_delta_hat - report.delta_star;
      m.mean_n_l = pairwise_mean(cell.n_ls);
      m.mean_variance_hat = pairwise_mean(cell.variance_hats);
      m.mean_ci_length = pairwise_mean(cell.ci_lengths);
      m.coverage = static_cast<double>(cell.covered) / m.replications;
      if (m.replications >= 2) {
        double var = sample_variance(cell.delta_hats);
        m.se_bias = std::sqrt(var / m.replications);
        double n_eff = cell.scale == Scale::SqrtNl ? m.mean_n_l : static_cast<double>(cfg.n);
        m.scaled_variance = n_eff * var;
      }
    }
    auto [bid, bname] = detail::oracle_bound_choice(cfg.estimators[e].config.kind);
    if (report.bounds.has(bname)) {
      m.oracle_bound = report.bounds.at(bname).value;
      m.oracle_bound_name = bname;
    }
    report.estimators.push_back(std::move(m));
  }

  if (!cfg.csv_path.empty()) write_mc_csv(cfg.csv_path, report.rows);
  if (!cfg.report_path.empty()) {
    std::ofstream f(cfg.report_path);
    if (!f) throw ValidationError("harness: cannot open report path '" + cfg.report_path + "'");
    f << report.to_json().dump(2) << '\n';
  }
  return report;
}

// ---- double-robustness misspecification matrix ----

namespace detail {

// every x feature hidden from one learner; the omission indices follow the
// learner feature layouts (mu~: [x|s], mu: [x], e: [x], r: [t|x|(s)])
inline std::vector<int> x_indices(int from, int count) {
  std::vector<int> v(count);
  for (int i = 0; i < count; ++i) v[i] = from + i;
  return v;
}

}  // namespace detail

inline std::vector<std::pair<std::string, MetricsReport>> misspecification_matrix(
    const ScenarioConfig& base) {
  if (base.estimators.size() != 1 ||
      base.estimators.front().config.kind != EstimatorKind::DmlGeneral)
    throw ValidationError("misspecification matrix: base must hold exactly one dml_general");
  const EstimatorConfig& c0 = base.estimators.front().config;
  const DgpSpec spec = finalize_spec(base.spec);
  const int dx = spec.d_x;

  auto cell = [&](const std::string& name,
                  const std::function<void(EstimatorConfig&)>& tweak) {
    ScenarioConfig cfg = base;
    cfg.scenario_id = base.scenario_id + "/" + name;
    cfg.bounds_budget = 0;  // bounds are properties of the truth, not of bad fits
    cfg.csv_path.clear();
    cfg.report_path.clear();
    cfg.estimators.front().name = name;
    tweak(cfg.estimators.front().config);
    return std::make_pair(name, run_scenario(cfg));
  };

  std::vector<std::pair<std::string, MetricsReport>> out;
  out.push_back(cell("all_correct", [&](EstimatorConfig&) {}));
  out.push_back(cell("mu_tilde_wrong", [&](EstimatorConfig& c) {
    c.mu_tilde_spec = misspecified(c0.mu_tilde_spec, detail::x_indices(0, dx));
  }));
  out.push_back(cell("r_wrong", [&](EstimatorConfig& c) {
    c.r_spec = misspecified(c0.r_spec, detail::x_indices(1, dx));
  }));
  out.push_back(cell("mu_wrong", [&](EstimatorConfig& c) {
    c.mu_spec = misspecified(c0.mu_spec, detail::x_indices(0, dx));
  }));
  out.push_back(cell("e_wrong", [&](EstimatorConfig& c) {
    c.e_spec = misspecified(c0.e_spec, detail::x_indices(0, dx));
  }));
  // both members of the (mu~, r) pair wrong: outside the guarantee, reported
  // for the direction check only
  out.push_back(cell("mu_tilde_r_wrong", [&](EstimatorConfig& c) {
    c.mu_tilde_spec = misspecified(c0.mu_tilde_spec, detail::x_indices(0, dx));
    c.r_spec = misspecified(c0.r_spec, detail::x_indices(1, dx));
  }));
  return out;
}

// ---- labelling-regime sweep ----

struct SweepRow {
  long n = 0;
  int replications = 0;
  double mean_n_l = 0.0;
  double scaled_variance = 0.0;  // N_l * var(delta_tilde)
  double bound = 0.0;            // v_tilde (fixed p) or v_tilde_star (vanishing)
  double ratio = 0.0;
  double median_equiv_gap = std::numeric_limits<double>::quiet_NaN();
  // sqrt(N_l) |delta_hat - delta_tilde|, fixed-p families only

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["replications"] = replications;
    j["mean_n_l"] = mean_n_l;
    j["scaled_variance"] = scaled_variance;
    j["bound"] = bound;
    j["ratio"] = ratio;
    if (std::isfinite(median_equiv_gap)) j["median_equiv_gap"] = median_equiv_gap;
    return j;
  }
};

struct SweepTable {
  std::string scenario_id;
  std::string version = kSateVersion;
  std::string bound_name;
  nlohmann::json config;
  std::vector<SweepRow> rows;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario_id"] = scenario_id;
    j["version"] = version;
    j["bound_name"] = bound_name;
    j["config"] = config;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) j["rows"].push_back(r.to_json());
    return j;
  }
};

inline SweepTable regime_sweep(const ScenarioConfig& base, const std::vector<long>& n_grid) {
  const DgpSpec spec = finalize_spec(base.spec);
  if (spec.family != DgpFamily::Mcar && spec.family != DgpFamily::VanishingLabel)
    throw ValidationError("regime sweep: family must be mcar or vanishing_label");
  if (n_grid.empty()) throw ValidationError("regime sweep: empty n grid");
  if (base.replications < 2)
    throw ValidationError("regime sweep: needs at least 2 replications per n");
  const bool fixed_p = spec.family == DgpFamily::Mcar;

  EstimatorConfig tilde_cfg;
  EstimatorConfig general_cfg;
  if (!base.estimators.empty()) {
    tilde_cfg = base.estimators.front().config;
    if (tilde_cfg.kind != EstimatorKind::DmlDensityRatio)
      throw ValidationError("regime sweep: the base estimator must be dml_density_ratio");
  } else {
    tilde_cfg.kind = EstimatorKind::DmlDensityRatio;
  }
  general_cfg = tilde_cfg;
  general_cfg.kind = EstimatorKind::DmlGeneral;

  SweepTable table;
  table.scenario_id = base.scenario_id;
  table.config = to_json(base);
  table.config["n_grid"] = n_grid;
  table.bound_name = fixed_p ? "v_tilde" : "v_tilde_star";

  BoundRequest breq;
  breq.spec = spec;
  breq.which = {fixed_p ? BoundId::VTilde : BoundId::VTildeStar};
  breq.mc_budget = base.bounds_budget > 0 ? base.bounds_budget : 200000;
  breq.seed = derive_seed(base.seed, 0x626f756eULL);
  const double bound = compute_bounds(breq).at(table.bound_name).value;

  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const long n = n_grid[g];
    if (n < 2) throw ValidationError("regime sweep: n must be at least 2");
    std::vector<double> tilde_hats, n_ls, gaps;
    std::uint64_t grid_seed = derive_seed(base.seed, 0x73770000ULL + g);
    for (int rep = 0; rep < base.replications; ++rep) {
      Dataset data = generate(spec, n, detail::data_seed(grid_seed, rep));
      std::uint64_t est_seed = detail::estimator_seed(grid_seed, rep, 0);
      EstimateReport tilde = estimate(data, tilde_cfg, est_seed);
      tilde_hats.push_back(tilde.delta_hat);
      n_ls.push_back(static_cast<double>(tilde.n_l));
      if (fixed_p) {
        // same seed, so the fold assignment matches and the comparison is the
        // label-weighting alone
        EstimateReport general = estimate(data, general_cfg, est_seed);
        gaps.push_back(std::sqrt(static_cast<double>(tilde.n_l)) *
                       std::abs(general.delta_hat - tilde.delta_hat));
      }
    }
    SweepRow row;
    row.n = n;
    row.replications = base.replications;
    row.mean_n_l = pairwise_mean(n_ls);
    row.scaled_variance = row.mean_n_l * sample_variance(tilde_hats);
    row.bound = bound;
    row.ratio = row.scaled_variance / bound;
    if (fixed_p) {
      std::sort(gaps.begin(), gaps.end());
      std::size_t m = gaps.size();
      row.median_equiv_gap =
          m % 2 == 1 ? gaps[m / 2] : 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]);
    }
    table.rows.push_back(row);
  }
  return table;
}

// ---- paired comparison of the two no-surrogate estimators ----

struct ZbReport {
  std::string scenario_id;
  std::string version = kSateVersion;
  nlohmann::json config;
  long n = 0;
  int replications = 0;
  double p_label = 0.0;
  double var_our_scaled = 0.0;  // N * var(delta_our)
  double var_zb_scaled = 0.0;   // N * var(delta_zb)
  double gap_hat = 0.0;         // N * (var_zb - var_our), paired
  double gap_se = 0.0;
  double gap_closed = 0.0;
  double gap_closed_se = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario_id"] = scenario_id;
    j["version"] = version;
    j["config"] = config;
    j["n"] = n;
    j["replications"] = replications;
    j["p_label"] = p_label;
    j["var_our_scaled"] = var_our_scaled;
    j["var_zb_scaled"] = var_zb_scaled;
    j["gap_hat"] = gap_hat;
    j["gap_se"] = gap_se;
    j["gap_closed"] = gap_closed;
    j["gap_closed_se"] = gap_closed_se;
    return j;
  }
};

inline ZbReport zb_comparison(const ScenarioConfig& base) {
  const DgpSpec spec = finalize_spec(base.spec);
  if (spec.family != DgpFamily::Mcar || spec.p_label >= 1.0)
    throw ValidationError("zb comparison: family must be mcar with p_label < 1");
  if (base.replications < 2)
    throw ValidationError("zb comparison: needs at least 2 replications");

  EstimatorConfig cfg;
  if (!base.estimators.empty()) cfg = base.estimators.front().config;
  cfg.kind = EstimatorKind::NoSurrogateBaseline;  // fits shared with the imputer

  const int reps = base.replications;
  std::vector<double> ours(reps), zbs(reps);
  for (int rep = 0; rep < reps; ++rep) {
    Dataset data = generate(spec, base.n, detail::data_seed(base.seed, rep));
    std::uint64_t est_seed = detail::estimator_seed(base.seed, rep, 0);
    NuisanceFits fits = cross_fit(data, build_plan(data, cfg, est_seed, nullptr));
    ours[rep] = estimate_with_fits(data, fits, EstimatorKind::NoSurrogateBaseline, cfg).delta_hat;
    zbs[rep] = estimate_with_fits(data, fits, EstimatorKind::ZhangBradic, cfg).delta_hat;
  }

  double our_bar = pairwise_mean(ours);
  double zb_bar = pairwise_mean(zbs);
  std::vector<double> u(reps);
  for (int i = 0; i < reps; ++i)
    u[i] = (zbs[i] - zb_bar) * (zbs[i] - zb_bar) - (ours[i] - our_bar) * (ours[i] - our_bar);
  const double nn = static_cast<double>(base.n);
  const double m = static_cast<double>(reps);

  ZbReport out;
  out.scenario_id = base.scenario_id;
  out.config = to_json(base);
  out.n = base.n;
  out.replications = reps;
  out.p_label = spec.p_label;
  out.var_our_scaled = nn * sample_variance(ours);
  out.var_zb_scaled = nn * sample_variance(zbs);
  out.gap_hat = nn * pairwise_mean(u) * m / (m - 1.0);
  out.gap_se = nn * std::sqrt(sample_variance(u) / m);

  BoundRequest breq;
  breq.spec = spec;
  breq.which = {BoundId::ZbGap};
  breq.mc_budget = base.bounds_budget > 0 ? base.bounds_budget : 200000;
  breq.seed = derive_seed(base.seed, 0x626f756eULL);
  BoundSet b = compute_bounds(breq);
  out.gap_closed = b.at("v_zb_gap_closed").value;
  out.gap_closed_se = b.at("v_zb_gap_closed").se;
  return out;
}

}  // namespace sate
