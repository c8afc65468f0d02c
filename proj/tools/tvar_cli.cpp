// Batch entry point: estimate | forecast | evaluate | simulate, driven by a
// single JSON config. Flags only pick the subcommand, config path, and
// seed/output-dir overrides so every run is reproducible from its manifest.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tvar/bvar.hpp"
#include "tvar/data_io.hpp"
#include "tvar/forecast.hpp"
#include "tvar/serialize.hpp"
#include "tvar/simulate.hpp"

using json = nlohmann::json;
using namespace tvar;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

// Strict schema walk: every present key must be in the allowed set.
void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) fail(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write " + path.string());
  out << content;
}

struct Run {
  json cfg;
  std::string config_path;
  std::uint64_t seed = 1;
  fs::path out_dir;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void write_manifest(const std::string& subcommand,
                      const std::vector<std::string>& outputs,
                      json extra_timings = json::object()) const {
    json m;
    m["subcommand"] = subcommand;
    m["version"] = kVersion;
    m["config_path"] = config_path;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.dump())));
    m["config_hash"] = hash;
    m["config"] = cfg;  // full copy: the manifest alone reproduces the run
    m["seed"] = seed;
    m["outputs"] = outputs;
    json t = extra_timings;
    t["total_secs"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m["timings"] = t;
    write_file(out_dir / "manifest.json", m.dump(2) + "\n");
  }
};

Run make_run(const std::string& config_path, std::optional<std::uint64_t> seed_override,
             const std::string& out_override) {
  Run run;
  run.config_path = config_path;
  run.cfg = json::parse(read_file(config_path));
  if (!run.cfg.is_object()) fail("config root must be an object");
  run.seed = seed_override ? *seed_override : get_or<std::uint64_t>(run.cfg, "seed", 1);
  std::string out = out_override.empty()
                        ? get_or<std::string>(run.cfg, "output_dir", "out")
                        : out_override;
  run.out_dir = out;
  fs::create_directories(run.out_dir);
  return run;
}

// ------------------------------------------------------------------- blocks

SeriesPanel load_panel(const json& data) {
  check_keys(data, "data", {"csv", "variables", "from", "to"});
  if (!data.contains("csv") || !data.contains("variables"))
    fail("data: 'csv' and 'variables' are required");
  const auto specs = load_variable_specs(data.at("variables").get<std::string>());
  DateRange range;
  if (data.contains("from")) range.from = parse_quarter(data.at("from").get<std::string>());
  if (data.contains("to")) range.to = parse_quarter(data.at("to").get<std::string>());
  const SeriesPanel raw = load_csv(data.at("csv").get<std::string>(), specs, range);
  return transform_panel(raw, specs);
}

struct Priors {
  FactorPrior factor;
  VolatilityPriors vol;
  MinnesotaSpec minnesota;
};

Priors parse_priors(const json& model, int n, int p, int rank) {
  Priors pr;
  pr.factor = FactorPrior::defaults(n, p, rank);
  if (!model.contains("priors")) return pr;
  const json& j = model.at("priors");
  check_keys(j, "model.priors",
             {"var1", "var2", "var3", "phi_mean", "phi_sd", "sig_shape", "sig_rate",
              "mu_var", "omega_df_delta", "b0_var", "lambda2", "lag_decay",
              "intercept_var"});
  if (j.contains("var1")) pr.factor.var1.setConstant(j.at("var1").get<double>());
  if (j.contains("var2")) pr.factor.var2.setConstant(j.at("var2").get<double>());
  if (j.contains("var3")) pr.factor.var3.setConstant(j.at("var3").get<double>());
  pr.vol.phi_mean = get_or(j, "phi_mean", pr.vol.phi_mean);
  pr.vol.phi_sd = get_or(j, "phi_sd", pr.vol.phi_sd);
  pr.vol.sig_shape = get_or(j, "sig_shape", pr.vol.sig_shape);
  pr.vol.sig_rate = get_or(j, "sig_rate", pr.vol.sig_rate);
  pr.vol.mu_var = get_or(j, "mu_var", pr.vol.mu_var);
  pr.vol.omega_df_delta = get_or(j, "omega_df_delta", pr.vol.omega_df_delta);
  pr.vol.b0_var = get_or(j, "b0_var", pr.vol.b0_var);
  pr.minnesota.lambda2 = get_or(j, "lambda2", pr.minnesota.lambda2);
  pr.minnesota.lag_decay = get_or(j, "lag_decay", pr.minnesota.lag_decay);
  pr.minnesota.intercept_var = get_or(j, "intercept_var", pr.minnesota.intercept_var);
  return pr;
}

McmcConfig parse_mcmc(const json& cfg, std::uint64_t seed) {
  McmcConfig m;
  m.seed = seed;
  if (!cfg.contains("mcmc")) return m;
  const json& j = cfg.at("mcmc");
  check_keys(j, "mcmc", {"burn_in", "draws", "thin", "mode"});
  m.burn_in = get_or(j, "burn_in", m.burn_in);
  m.draws = get_or(j, "draws", m.draws);
  m.thin = get_or(j, "thin", m.thin);
  const std::string mode = get_or<std::string>(j, "mode", "auto");
  if (mode == "auto")
    m.mode = SamplerMode::Auto;
  else if (mode == "joint")
    m.mode = SamplerMode::JointBlock;
  else if (mode == "per-rank")
    m.mode = SamplerMode::PerRank;
  else
    fail("mcmc.mode: expected auto|joint|per-rank, got '" + mode + "'");
  return m;
}

struct ModelBlock {
  ModelFamily family = ModelFamily::TVAR;
  int rank = 1;
  int lags = 4;
  bool intercept = false;
  json raw;
};

ModelBlock parse_model(const json& cfg) {
  if (!cfg.contains("model")) fail("config: 'model' block is required");
  const json& j = cfg.at("model");
  check_keys(j, "model", {"family", "rank", "lags", "intercept", "priors"});
  ModelBlock m;
  m.family = parse_family(get_or<std::string>(j, "family", "TVAR"));
  m.rank = get_or(j, "rank", m.rank);
  m.lags = get_or(j, "lags", m.lags);
  m.intercept = get_or(j, "intercept", m.intercept);
  m.raw = j;
  return m;
}

PosteriorDraws estimate_from_config(const VarDataset& ds, const ModelBlock& model,
                                    const McmcConfig& mcmc, const Priors& priors) {
  if (model.family == ModelFamily::BVAR) {
    Rng rng = substream(mcmc.seed, 17);
    return sample_posterior(fit_conjugate(ds, priors.minnesota), mcmc.draws, rng);
  }
  McmcConfig cfg = mcmc;
  cfg.rank = model.rank;
  cfg.regime = family_regime(model.family);
  return run_chain(ds, cfg, priors.factor, priors.vol);
}

// --------------------------------------------------------------- estimate

int cmd_estimate(Run& run) {
  check_keys(run.cfg, "config",
             {"seed", "output_dir", "data", "model", "mcmc", "forecast"});
  const SeriesPanel panel = load_panel(run.cfg.at("data"));
  const ModelBlock model = parse_model(run.cfg);
  const VarDataset ds = build_dataset(panel, model.lags, model.intercept);
  const McmcConfig mcmc = parse_mcmc(run.cfg, run.seed);
  const Priors priors = parse_priors(model.raw, ds.n(), ds.p, model.rank);

  const auto t0 = std::chrono::steady_clock::now();
  const PosteriorDraws draws = estimate_from_config(ds, model, mcmc, priors);
  const double est_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path draws_path = run.out_dir / "draws.csv";
  write_draws(draws_path.string(), draws);
  run.write_manifest("estimate", {draws_path.string()},
                     {{"estimate_secs", est_secs},
                      {"theta_secs", draws.timings.theta_secs},
                      {"vol_secs", draws.timings.vol_secs}});
  std::cout << "estimate: " << draws.draws.size() << " draws -> " << draws_path.string()
            << "\n";
  return 0;
}

// --------------------------------------------------------------- forecast

int cmd_forecast(Run& run) {
  check_keys(run.cfg, "config",
             {"seed", "output_dir", "data", "model", "mcmc", "forecast"});
  const SeriesPanel panel = load_panel(run.cfg.at("data"));
  const ModelBlock model = parse_model(run.cfg);
  const VarDataset ds = build_dataset(panel, model.lags, model.intercept);
  const McmcConfig mcmc = parse_mcmc(run.cfg, run.seed);
  const Priors priors = parse_priors(model.raw, ds.n(), ds.p, model.rank);

  std::vector<int> horizons = {1, 4};
  int paths = 5;
  if (run.cfg.contains("forecast")) {
    const json& f = run.cfg.at("forecast");
    check_keys(f, "forecast", {"horizons", "paths_per_draw", "origins", "targets"});
    horizons = get_or(f, "horizons", horizons);
    paths = get_or(f, "paths_per_draw", paths);
  }

  const PosteriorDraws draws = estimate_from_config(ds, model, mcmc, priors);
  std::ostringstream csv;
  csv << "horizon,variable,point_forecast\n";
  for (int h : horizons) {
    Rng rng = substream(run.seed, 2000 + h);
    const VectorXd pt = point_forecast(draws, ds, h, paths, rng);
    for (int i = 0; i < pt.size(); ++i)
      csv << h << "," << panel.names[i] << "," << pt[i] << "\n";
  }
  const fs::path out = run.out_dir / "forecasts.csv";
  write_file(out, csv.str());
  run.write_manifest("forecast", {out.string()});
  std::cout << "forecast: horizons " << horizons.size() << " -> " << out.string() << "\n";
  return 0;
}

// --------------------------------------------------------------- evaluate

int cmd_evaluate(Run& run) {
  check_keys(run.cfg, "config",
             {"seed", "output_dir", "data", "mcmc", "forecast", "evaluate"});
  const SeriesPanel panel = load_panel(run.cfg.at("data"));
  const McmcConfig mcmc = parse_mcmc(run.cfg, run.seed);

  if (!run.cfg.contains("evaluate")) fail("config: 'evaluate' block is required");
  const json& ev = run.cfg.at("evaluate");
  check_keys(ev, "evaluate",
             {"models", "lag_order", "intercept", "workers", "checkpoint_dir",
              "full_sample_standardization"});
  if (!ev.contains("models")) fail("evaluate: 'models' list is required");

  std::vector<ModelSpec> models;
  for (const json& m : ev.at("models")) {
    check_keys(m, "evaluate.models[]", {"label", "family", "rank", "crippled"});
    ModelSpec spec;
    spec.family = parse_family(m.at("family").get<std::string>());
    spec.rank = get_or(m, "rank", 1);
    spec.crippled = get_or(m, "crippled", false);
    spec.label = get_or<std::string>(m, "label",
                                     family_name(spec.family) +
                                         (spec.family == ModelFamily::BVAR
                                              ? ""
                                              : "-R" + std::to_string(spec.rank)));
    models.push_back(spec);
  }

  if (!run.cfg.contains("forecast")) fail("config: 'forecast' block is required");
  const json& f = run.cfg.at("forecast");
  check_keys(f, "forecast", {"horizons", "paths_per_draw", "origins", "targets"});
  if (!f.contains("origins")) fail("forecast: 'origins' list is required");
  ForecastTask task;
  task.horizons = get_or(f, "horizons", task.horizons);
  task.paths_per_draw = get_or(f, "paths_per_draw", task.paths_per_draw);
  task.target_variables =
      get_or(f, "targets", std::vector<std::string>{});
  const json& origins = f.at("origins");
  if (origins.is_array() && origins.size() == 2 && origins[0].is_string() &&
      f.contains("origins") && origins[1].is_string() &&
      parse_quarter(origins[0].get<std::string>()) <
          parse_quarter(origins[1].get<std::string>())) {
    // two-element form ["2001Q1", "2019Q4"] expands to the inclusive range
    for (Quarter q = parse_quarter(origins[0].get<std::string>());
         q <= parse_quarter(origins[1].get<std::string>()); q = q.next())
      task.origins.push_back(q);
  } else {
    for (const json& o : origins)
      task.origins.push_back(parse_quarter(o.get<std::string>()));
  }

  EvalOptions opts;
  opts.lag_order = get_or(ev, "lag_order", opts.lag_order);
  opts.intercept = get_or(ev, "intercept", opts.intercept);
  opts.workers = get_or(ev, "workers", 0);  // 0 = available cores
  if (opts.workers <= 0)
    opts.workers = std::max(1u, std::thread::hardware_concurrency());
  opts.checkpoint_dir = get_or<std::string>(ev, "checkpoint_dir", "");
  opts.full_sample_standardization =
      get_or(ev, "full_sample_standardization", false);
  opts.seed = run.seed;

  const EvalReport report = run_recursive_eval(panel, models, task, mcmc, opts);

  const fs::path jpath = run.out_dir / "report.json";
  const fs::path lpath = run.out_dir / "lpl.csv";
  const fs::path rpath = run.out_dir / "rmsfe.csv";
  write_file(jpath, report.to_json());
  write_file(lpath, report.lpl_csv());
  write_file(rpath, report.rmsfe_csv());
  run.write_manifest("evaluate", {jpath.string(), lpath.string(), rpath.string()});
  for (const auto& m : report.models) {
    std::cout << m << ":";
    for (int h : report.horizons)
      std::cout << "  lpl(h=" << h << ") = " << report.avg_lpl(m, h);
    std::cout << "\n";
  }
  if (!report.failures.empty())
    std::cout << "failures: " << report.failures.size() << " (see report.json)\n";
  return 0;
}

// --------------------------------------------------------------- simulate

json factors_to_json(const CPFactors& f) {
  auto mat = [](const MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  return {{"theta1", mat(f.theta1)}, {"theta2", mat(f.theta2)},
          {"theta3", mat(f.theta3)}};
}

int cmd_simulate(Run& run) {
  check_keys(run.cfg, "config", {"seed", "output_dir", "simulate"});
  if (!run.cfg.contains("simulate")) fail("config: 'simulate' block is required");
  const json& j = run.cfg.at("simulate");
  check_keys(j, "simulate",
             {"n", "p", "T", "rank", "regime", "spectral_target", "csv_phi",
              "csv_sigma_h2", "sv_b21", "start"});
  SimConfig sim;
  sim.n = get_or(j, "n", sim.n);
  sim.p = get_or(j, "p", sim.p);
  sim.T = get_or(j, "T", sim.T);
  sim.rank = get_or(j, "rank", sim.rank);
  sim.spectral_target = get_or(j, "spectral_target", sim.spectral_target);
  sim.csv_phi = get_or(j, "csv_phi", sim.csv_phi);
  sim.csv_sigma_h2 = get_or(j, "csv_sigma_h2", sim.csv_sigma_h2);
  sim.sv_b21 = get_or(j, "sv_b21", sim.sv_b21);
  if (j.contains("start")) sim.start = parse_quarter(j.at("start").get<std::string>());
  const std::string regime = get_or<std::string>(j, "regime", "homoskedastic");
  if (regime == "homoskedastic")
    sim.regime = VolRegime::Homoskedastic;
  else if (regime == "common-sv")
    sim.regime = VolRegime::CommonSV;
  else if (regime == "cholesky-sv")
    sim.regime = VolRegime::CholeskySV;
  else
    fail("simulate.regime: expected homoskedastic|common-sv|cholesky-sv, got '" +
         regime + "'");
  sim.seed = run.seed;

  const SimResult res = simulate_tvar(sim);

  std::ostringstream csv;
  csv << "date";
  for (const auto& name : res.panel.names) csv << "," << name;
  csv << "\n";
  csv.precision(17);
  for (int t = 0; t < res.panel.rows(); ++t) {
    csv << res.panel.dates[t].str();
    for (int i = 0; i < res.panel.cols(); ++i) csv << "," << res.panel.values(t, i);
    csv << "\n";
  }
  const fs::path ppath = run.out_dir / "panel.csv";
  write_file(ppath, csv.str());

  json truth;
  truth["regime"] = regime;
  truth["factors"] = factors_to_json(res.factors);
  if (const auto* c = std::get_if<CommonSV>(&res.vol)) {
    truth["vol"] = {{"phi", c->phi},
                    {"sigma_h2", c->sigma_h2},
                    {"h", std::vector<double>(c->h.data(), c->h.data() + c->h.size())}};
  } else if (const auto* s = std::get_if<CholeskySV>(&res.vol)) {
    json b0 = json::array();
    for (int i = 0; i < s->B0.rows(); ++i)
      for (int k = 0; k < i; ++k) b0.push_back({{"row", i}, {"col", k}, {"value", s->B0(i, k)}});
    truth["vol"] = {{"b0_lower", b0}};
  }
  const fs::path tpath = run.out_dir / "truth.json";
  write_file(tpath, truth.dump(2) + "\n");

  run.write_manifest("simulate", {ppath.string(), tpath.string()});
  std::cout << "simulate: " << res.panel.rows() << " rows -> " << ppath.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor VAR toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  std::optional<std::uint64_t> seed_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed_override, "override config seed");
    sub->add_option("-o,--output-dir", out_override, "override output directory");
  };
  CLI::App* est = app.add_subcommand("estimate", "run one MCMC estimation");
  CLI::App* fct = app.add_subcommand("forecast", "estimate and forecast from the sample end");
  CLI::App* evl = app.add_subcommand("evaluate", "recursive out-of-sample evaluation");
  CLI::App* sml = app.add_subcommand("simulate", "generate synthetic data with recorded truth");
  for (CLI::App* sub : {est, fct, evl, sml}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    Run run = make_run(config_path, seed_override, out_override);
    if (est->parsed()) return cmd_estimate(run);
    if (fct->parsed()) return cmd_forecast(run);
    if (evl->parsed()) return cmd_evaluate(run);
    if (sml->parsed()) return cmd_simulate(run);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
