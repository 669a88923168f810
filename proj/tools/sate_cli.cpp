// command-line driver: data generation, estimation, bound oracles, and the
// Monte-Carlo experiment suites, all configured through json.
//
// exit codes: 0 success, 2 validation/configuration error, 3 when a scenario
// exceeds the tolerated replication failure rate.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "sate/sate.hpp"

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw sate::ValidationError("cannot open config file '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw sate::ValidationError("config file '" + path + "': " + e.what());
  }
}

void emit(const json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw sate::ValidationError("cannot open output file '" + out_path + "'");
  f << report.dump(2) << "\n";
}

std::vector<sate::BoundId> parse_which(const std::string& which) {
  std::vector<sate::BoundId> ids;
  if (which.empty() || which == "all") return ids;
  std::stringstream ss(which);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) ids.push_back(sate::bound_id_from_string(tok));
  }
  return ids;
}

sate::ScenarioConfig load_scenario(const std::string& config_path,
                                   const std::optional<std::uint64_t>& seed) {
  if (config_path.empty()) throw sate::ValidationError("--config is required");
  sate::ScenarioConfig cfg = sate::scenario_config_from_json(load_json(config_path));
  if (seed) cfg.seed = *seed;
  return cfg;
}

void write_sweep_csv(const std::string& path, const sate::SweepTable& table) {
  std::ofstream f(path);
  if (!f) throw sate::ValidationError("cannot open output file '" + path + "'");
  f << "n,replications,mean_n_l,scaled_variance,bound,ratio,median_equiv_gap\n";
  f << std::setprecision(17);
  for (const auto& r : table.rows) {
    f << r.n << ',' << r.replications << ',' << r.mean_n_l << ',' << r.scaled_variance << ','
      << r.bound << ',' << r.ratio << ',';
    if (std::isfinite(r.median_equiv_gap)) f << r.median_equiv_gap;
    f << '\n';
  }
}

void write_zb_csv(const std::string& path, const sate::ZbReport& z) {
  std::ofstream f(path);
  if (!f) throw sate::ValidationError("cannot open output file '" + path + "'");
  f << "n,replications,p_label,var_our_scaled,var_zb_scaled,gap_hat,gap_se,gap_closed,"
       "gap_closed_se\n";
  f << std::setprecision(17) << z.n << ',' << z.replications << ',' << z.p_label << ','
    << z.var_our_scaled << ',' << z.var_zb_scaled << ',' << z.gap_hat << ',' << z.gap_se << ','
    << z.gap_closed << ',' << z.gap_closed_se << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surrogate-assisted average treatment effect toolkit"};
  app.set_version_flag("--version", sate::kSateVersion);
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "draw a synthetic dataset and write it as csv");
  std::string gen_config, gen_spec, gen_out;
  long gen_n = 1000;
  std::uint64_t gen_seed = 1;
  gen->add_option("--config", gen_config, "generating-process json");
  gen->add_option("--spec", gen_spec, "alias for --config");
  gen->add_option("--n", gen_n, "sample size");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--out", gen_out, "dataset csv path (stdout when omitted)");
  gen->callback([&] {
    const std::string path = gen_config.empty() ? gen_spec : gen_config;
    if (path.empty()) throw sate::ValidationError("gen: --spec or --config is required");
    sate::DgpSpec spec = sate::dgp_spec_from_json(load_json(path));
    sate::Dataset data = sate::generate(spec, gen_n, gen_seed);
    if (gen_out.empty()) {
      sate::write_dataset_csv(data, std::cout);
    } else {
      sate::write_dataset_csv(data, gen_out);
      json summary;
      summary["out"] = gen_out;
      summary["n"] = data.n();
      summary["n_l"] = data.n_labelled();
      summary["seed"] = gen_seed;
      summary["family"] = sate::to_string(sate::finalize_spec(spec).family);
      std::cout << summary.dump(2) << "\n";
    }
  });

  // ---- estimate ----
  auto* est = app.add_subcommand("estimate", "run one estimator on one dataset");
  std::string est_config, est_data, est_out;
  std::optional<std::uint64_t> est_seed;
  est->add_option("--config", est_config,
                  "json with an 'estimator' object plus either 'data' (csv path) or "
                  "'spec'+'n' to generate");
  est->add_option("--data", est_data, "dataset csv path (overrides the config)");
  est->add_option("--seed", est_seed, "master seed (overrides the config)");
  est->add_option("--out", est_out, "report json path (stdout when omitted)");
  est->callback([&] {
    if (est_config.empty()) throw sate::ValidationError("estimate: --config is required");
    json cfg = load_json(est_config);
    sate::EstimatorConfig econfig;
    if (cfg.contains("estimator"))
      econfig = sate::estimator_config_from_json(cfg.at("estimator"));
    std::uint64_t seed = est_seed ? *est_seed : cfg.value("seed", std::uint64_t{1});

    sate::Dataset data;
    std::uint64_t data_seed = sate::derive_seed(seed, 0x64617461ULL);
    if (!est_data.empty()) {
      data = sate::read_dataset_csv(est_data);
    } else if (cfg.contains("data")) {
      data = sate::read_dataset_csv(cfg.at("data").get<std::string>());
    } else if (cfg.contains("spec")) {
      sate::DgpSpec spec = sate::dgp_spec_from_json(cfg.at("spec"));
      data = sate::generate(spec, cfg.value("n", 1000L), data_seed);
      if (!econfig.truth_dgp && !econfig.oracle)
        econfig.truth_dgp = std::make_shared<const sate::DgpSpec>(spec);
    } else {
      throw sate::ValidationError("estimate: config needs 'data' or 'spec'");
    }
    sate::EstimateReport report =
        sate::estimate(data, econfig, sate::derive_seed(seed, 0x65737469ULL));
    json out = report.to_json();
    out["seed"] = seed;
    emit(out, est_out);
  });

  // ---- bounds ----
  auto* bnd = app.add_subcommand("bounds", "evaluate efficiency bounds for a known truth");
  std::string bnd_config, bnd_spec, bnd_which = "all", bnd_out;
  long bnd_mc = 1000000;
  std::uint64_t bnd_seed = 1;
  bnd->add_option("--config", bnd_config, "generating-process json (or request json)");
  bnd->add_option("--spec", bnd_spec, "alias for --config");
  bnd->add_option("--which", bnd_which, "comma-separated bound names, or 'all'");
  bnd->add_option("--mc", bnd_mc, "Monte-Carlo budget");
  bnd->add_option("--seed", bnd_seed, "master seed");
  bnd->add_option("--out", bnd_out, "report json path (stdout when omitted)");
  bnd->callback([&] {
    const std::string path = bnd_config.empty() ? bnd_spec : bnd_config;
    if (path.empty()) throw sate::ValidationError("bounds: --spec or --config is required");
    json cfg = load_json(path);
    sate::BoundRequest req;
    // accept either a bare generating-process json or {"spec": ..., ...}
    if (cfg.contains("spec")) {
      req.spec = sate::dgp_spec_from_json(cfg.at("spec"));
      if (cfg.contains("which")) {
        for (const auto& w : cfg.at("which"))
          req.which.push_back(sate::bound_id_from_string(w.get<std::string>()));
      }
      req.mc_budget = cfg.value("mc_budget", req.mc_budget);
      req.seed = cfg.value("seed", req.seed);
    } else {
      req.spec = sate::dgp_spec_from_json(cfg);
    }
    if (bnd->count("--which") || req.which.empty()) req.which = parse_which(bnd_which);
    if (bnd->count("--mc")) req.mc_budget = bnd_mc;
    if (bnd->count("--seed")) req.seed = bnd_seed;

    sate::BoundSet bounds = sate::compute_bounds(req);
    sate::DgpSpec spec = sate::finalize_spec(req.spec);
    sate::TruthFunctions tf = sate::truth_functions(spec);
    json out;
    out["spec"] = sate::to_json(spec);
    out["delta_star"] = tf.delta_star;
    out["xi1_star"] = tf.xi1;
    out["xi0_star"] = tf.xi0;
    out["p_label"] = tf.p_label_marginal;
    out["epsilon_overlap"] = spec.epsilon_overlap;
    out["mc_budget"] = req.mc_budget;
    out["seed"] = req.seed;
    out["bounds"] = bounds.to_json();
    emit(out, bnd_out);
  });

  // ---- mc ----
  auto* mc = app.add_subcommand("mc", "replicated Monte-Carlo run of a scenario");
  std::string mc_config, mc_out, mc_csv;
  std::optional<std::uint64_t> mc_seed;
  mc->add_option("--config", mc_config, "scenario json");
  mc->add_option("--seed", mc_seed, "master seed (overrides the config)");
  mc->add_option("--out", mc_out, "report json path (overrides the config)");
  mc->add_option("--csv", mc_csv, "per-replication csv path (overrides the config)");
  mc->callback([&] {
    sate::ScenarioConfig cfg = load_scenario(mc_config, mc_seed);
    if (!mc_out.empty()) cfg.report_path = mc_out;
    if (!mc_csv.empty()) cfg.csv_path = mc_csv;
    sate::MetricsReport report = sate::run_scenario(cfg);
    if (cfg.report_path.empty()) std::cout << report.to_json().dump(2) << "\n";
  });

  // ---- dr-matrix ----
  auto* dr = app.add_subcommand("dr-matrix",
                                "double-robustness misspecification grid for one scenario");
  std::string dr_config, dr_out, dr_csv;
  std::optional<std::uint64_t> dr_seed;
  dr->add_option("--config", dr_config, "base scenario json (one dml_general estimator)");
  dr->add_option("--seed", dr_seed, "master seed (overrides the config)");
  dr->add_option("--out", dr_out, "report json path (stdout when omitted)");
  dr->add_option("--csv", dr_csv, "per-replication csv across all cells");
  dr->callback([&] {
    sate::ScenarioConfig base = load_scenario(dr_config, dr_seed);
    auto cells = sate::misspecification_matrix(base);
    json out;
    out["scenario_id"] = base.scenario_id;
    out["version"] = sate::kSateVersion;
    out["cells"] = json::array();
    std::vector<sate::McRow> rows;
    for (const auto& [name, rep] : cells) {
      json cell;
      cell["cell"] = name;
      cell["report"] = rep.to_json();
      out["cells"].push_back(cell);
      rows.insert(rows.end(), rep.rows.begin(), rep.rows.end());
    }
    if (!dr_csv.empty()) sate::write_mc_csv(dr_csv, rows);
    emit(out, dr_out);
  });

  // ---- sweep ----
  auto* sw = app.add_subcommand("sweep", "labelling-regime sweep over a grid of sample sizes");
  std::string sw_config, sw_out, sw_csv;
  std::optional<std::uint64_t> sw_seed;
  sw->add_option("--config", sw_config, "scenario json with an 'n_grid' array");
  sw->add_option("--seed", sw_seed, "master seed (overrides the config)");
  sw->add_option("--out", sw_out, "report json path (stdout when omitted)");
  sw->add_option("--csv", sw_csv, "sweep table csv path");
  sw->callback([&] {
    if (sw_config.empty()) throw sate::ValidationError("--config is required");
    json cfg_json = load_json(sw_config);
    sate::ScenarioConfig base = sate::scenario_config_from_json(cfg_json);
    if (sw_seed) base.seed = *sw_seed;
    if (!cfg_json.contains("n_grid"))
      throw sate::ValidationError("sweep: config needs an 'n_grid' array");
    std::vector<long> grid = cfg_json.at("n_grid").get<std::vector<long>>();
    sate::SweepTable table = sate::regime_sweep(base, grid);
    if (!sw_csv.empty()) write_sweep_csv(sw_csv, table);
    emit(table.to_json(), sw_out);
  });

  // ---- zb ----
  auto* zb = app.add_subcommand(
      "zb", "paired comparison of the no-surrogate estimator with the imputation estimator");
  std::string zb_config, zb_out, zb_csv;
  std::optional<std::uint64_t> zb_seed;
  zb->add_option("--config", zb_config, "scenario json (mcar, p_label < 1)");
  zb->add_option("--seed", zb_seed, "master seed (overrides the config)");
  zb->add_option("--out", zb_out, "report json path (stdout when omitted)");
  zb->add_option("--csv", zb_csv, "one-row summary csv path");
  zb->callback([&] {
    sate::ScenarioConfig base = load_scenario(zb_config, zb_seed);
    sate::ZbReport report = sate::zb_comparison(base);
    if (!zb_csv.empty()) write_zb_csv(zb_csv, report);
    emit(report.to_json(), zb_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const sate::HarnessAbort& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const sate::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
