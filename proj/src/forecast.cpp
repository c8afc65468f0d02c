#include "tvar/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "tvar/linalg.hpp"

namespace tvar {

namespace {

using nlohmann::json;

// multivariate normal log density via Cholesky
double mvn_log_density(const VectorXd& x, const VectorXd& mean, const MatrixXd& sigma) {
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
  const VectorXd dev = llt.matrixL().solve(x - mean);
  const double logdet = 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * (x.size() * std::log(2.0 * std::numbers::pi) + logdet + dev.squaredNorm());
}

// Lag buffer holding (y_T, y_{T-1}, ..., y_{T-p+1}); builds x_{T+k} vectors.
struct LagBuffer {
  std::vector<VectorXd> lags;  // most recent first
  bool intercept = false;

  static LagBuffer from_dataset(const VarDataset& ds) {
    LagBuffer buf;
    buf.intercept = ds.intercept;
    const int T = ds.T();
    for (int l = 0; l < ds.p; ++l) {
      if (T - 1 - l >= 0) {
        buf.lags.push_back(ds.Y.row(T - 1 - l).transpose());
      } else {
        // reach into the initial conditions stored in X row 0
        const int n = ds.n();
        buf.lags.push_back(ds.X.block(0, (l - T) * n, 1, n).transpose());
      }
    }
    return buf;
  }

  VectorXd design_vector() const {
    const int n = static_cast<int>(lags[0].size());
    const int p = static_cast<int>(lags.size());
    VectorXd x(n * p + (intercept ? 1 : 0));
    for (int l = 0; l < p; ++l) x.segment(l * n, n) = lags[l];
    if (intercept) x[n * p] = 1.0;
    return x;
  }

  void push(const VectorXd& y) {
    for (std::size_t l = lags.size() - 1; l > 0; --l) lags[l] = lags[l - 1];
    lags[0] = y;
  }
};

// One simulated path to the given horizon; returns the final-step
// conditional mean and covariance for Rao-Blackwellized evaluation.
std::pair<VectorXd, MatrixXd> simulate_to_horizon(const Draw& draw, LagBuffer buf,
                                                  int horizon, Rng& rng) {
  const auto sigmas = forecast_sigma(draw.vol, horizon, rng);
  VectorXd mean;
  for (int k = 0; k < horizon; ++k) {
    mean = draw.A.transpose() * buf.design_vector();
    if (k + 1 < horizon) {
      Eigen::LLT<MatrixXd> llt(sigmas[k]);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("simulate_to_horizon: forecast covariance not SPD");
      const VectorXd y = mean + MatrixXd(llt.matrixL()) *
                                    draw_std_normal(static_cast<int>(mean.size()), rng);
      buf.push(y);
    }
  }
  return {mean, sigmas[horizon - 1]};
}

}  // namespace

ModelFamily parse_family(const std::string& name) {
  if (name == "BVAR") return ModelFamily::BVAR;
  if (name == "TVAR") return ModelFamily::TVAR;
  if (name == "TVAR-CSV") return ModelFamily::TVAR_CSV;
  if (name == "TVAR-SV") return ModelFamily::TVAR_SV;
  throw std::invalid_argument("unknown model family: " + name);
}

std::string family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::BVAR: return "BVAR";
    case ModelFamily::TVAR: return "TVAR";
    case ModelFamily::TVAR_CSV: return "TVAR-CSV";
    case ModelFamily::TVAR_SV: return "TVAR-SV";
  }
  return "?";
}

VolRegime family_regime(ModelFamily family) {
  switch (family) {
    case ModelFamily::TVAR_CSV: return VolRegime::CommonSV;
    case ModelFamily::TVAR_SV: return VolRegime::CholeskySV;
    default: return VolRegime::Homoskedastic;
  }
}

double log_mean_exp(const std::vector<double>& logs) {
  if (logs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double m = *std::max_element(logs.begin(), logs.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - m);
  return m + std::log(acc / logs.size());
}

PredictiveResult predictive_density(const PosteriorDraws& draws, const VarDataset& ds,
                                    const VectorXd& y_future, int horizon,
                                    int paths_per_draw, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("predictive_density: horizon must be >= 1");
  const LagBuffer buf = LagBuffer::from_dataset(ds);
  PredictiveResult result;
  std::vector<double> logs;
  logs.reserve(draws.draws.size() * paths_per_draw);
  for (const auto& draw : draws.draws) {
    for (int j = 0; j < paths_per_draw; ++j) {
      const auto [mean, sigma] = simulate_to_horizon(draw, buf, horizon, rng);
      const double ld = mvn_log_density(y_future, mean, sigma);
      if (std::isfinite(ld)) {
        logs.push_back(ld);
      } else {
        ++result.dropped;
      }
    }
  }
  result.log_density = log_mean_exp(logs);
  return result;
}

VectorXd point_forecast(const PosteriorDraws& draws, const VarDataset& ds,
                        int horizon, int paths_per_draw, Rng& rng) {
  const LagBuffer buf = LagBuffer::from_dataset(ds);
  VectorXd acc = VectorXd::Zero(ds.n());
  int count = 0;
  for (const auto& draw : draws.draws) {
    for (int j = 0; j < paths_per_draw; ++j) {
      acc += simulate_to_horizon(draw, buf, horizon, rng).first;
      ++count;
    }
  }
  return acc / std::max(count, 1);
}

double EvalReport::avg_lpl(const std::string& model, int h) const {
  return lpl.at(model).at(h).mean();
}

double EvalReport::rmsfe(const std::string& model, int h, const std::string& var) const {
  return std::sqrt(sqerr.at(model).at(h).at(var).mean());
}

double EvalReport::relative_rmsfe(const std::string& model, int h,
                                  const std::string& var) const {
  return rmsfe(model, h, var) / rmsfe(benchmark, h, var);
}

std::string EvalReport::to_json() const {
  json j;
  j["benchmark"] = benchmark;
  j["models"] = models;
  j["horizons"] = horizons;
  j["variables"] = variables;
  j["failures"] = failures;
  j["dropped_densities"] = dropped_densities;
  for (const auto& m : models) {
    for (int h : horizons) {
      j["lpl"][m][std::to_string(h)] = avg_lpl(m, h);
      for (const auto& v : variables) {
        j["rmsfe"][m][std::to_string(h)][v] = rmsfe(m, h, v);
        j["relative_rmsfe"][m][std::to_string(h)][v] = relative_rmsfe(m, h, v);
      }
    }
  }
  return j.dump(2);
}

std::string EvalReport::lpl_csv() const {
  std::ostringstream out;
  out << "horizon";
  for (const auto& m : models) out << "," << m;
  out << "\n";
  for (int h : horizons) {
    out << h;
    for (const auto& m : models) out << "," << avg_lpl(m, h);
    out << "\n";
  }
  return out.str();
}

std::string EvalReport::rmsfe_csv() const {
  std::ostringstream out;
  out << "variable,horizon";
  for (const auto& m : models) out << "," << m;
  out << "\n";
  for (const auto& v : variables) {
    for (int h : horizons) {
      out << v << "," << h;
      for (const auto& m : models) out << "," << relative_rmsfe(m, h, v);
      out << "\n";
    }
  }
  return out.str();
}

PosteriorDraws estimate_model(const VarDataset& ds, const ModelSpec& model,
                              const McmcConfig& mcmc, std::uint64_t seed) {
  PosteriorDraws draws;
  if (model.family == ModelFamily::BVAR) {
    Rng rng = substream(seed, 17);
    const auto post = fit_conjugate(ds, MinnesotaSpec{});
    draws = sample_posterior(post, mcmc.draws, rng);
  } else {
    McmcConfig cfg = mcmc;
    cfg.rank = model.rank;
    cfg.regime = family_regime(model.family);
    cfg.seed = seed;
    draws = run_chain(ds, cfg, FactorPrior::defaults(ds.n(), ds.p, model.rank),
                      VolatilityPriors{});
  }
  if (model.crippled) {
    for (auto& d : draws.draws) {
      const MatrixXd U = residuals(ds, d.A);
      MatrixXd omega = (U.transpose() * U / std::max(ds.T(), 1));
      d.vol = Homoskedastic{MatrixXd(omega.diagonal().asDiagonal())};
    }
  }
  return draws;
}

namespace {

struct OriginResult {
  std::string origin;
  // per model label: horizon -> (lpl, dropped, point, realized) in original units
  struct Cell {
    double lpl = 0.0;
    int dropped = 0;
    VectorXd point;
    VectorXd realized;
  };
  std::map<std::string, std::map<int, Cell>> cells;
  std::vector<std::string> failed_models;

  json to_json() const {
    json j;
    j["origin"] = origin;
    j["failed_models"] = failed_models;
    for (const auto& [model, by_h] : cells) {
      for (const auto& [h, cell] : by_h) {
        json c;
        c["lpl"] = cell.lpl;
        c["dropped"] = cell.dropped;
        c["point"] = std::vector<double>(cell.point.data(), cell.point.data() + cell.point.size());
        c["realized"] =
            std::vector<double>(cell.realized.data(), cell.realized.data() + cell.realized.size());
        j["cells"][model][std::to_string(h)] = c;
      }
    }
    return j;
  }

  static OriginResult from_json(const json& j) {
    OriginResult r;
    r.origin = j.at("origin").get<std::string>();
    r.failed_models = j.at("failed_models").get<std::vector<std::string>>();
    if (j.contains("cells")) {
      for (const auto& [model, by_h] : j.at("cells").items()) {
        for (const auto& [hs, c] : by_h.items()) {
          Cell cell;
          cell.lpl = c.at("lpl").get<double>();
          cell.dropped = c.at("dropped").get<int>();
          const auto pt = c.at("point").get<std::vector<double>>();
          const auto rl = c.at("realized").get<std::vector<double>>();
          cell.point = Eigen::Map<const VectorXd>(pt.data(), pt.size());
          cell.realized = Eigen::Map<const VectorXd>(rl.data(), rl.size());
          r.cells[model][std::stoi(hs)] = cell;
        }
      }
    }
    return r;
  }
};

OriginResult evaluate_origin(const SeriesPanel& panel, int origin_row,
                             const std::vector<ModelSpec>& models,
                             const ForecastTask& task, const McmcConfig& mcmc,
                             const EvalOptions& opts) {
  OriginResult result;
  result.origin = panel.dates[origin_row].str();

  const int train_rows = origin_row + 1;
  SeriesPanel train = panel;
  train.values = panel.values.topRows(train_rows).eval();
  train.dates.assign(panel.dates.begin(), panel.dates.begin() + train_rows);

  const auto [std_panel, stats] =
      standardize(train, opts.full_sample_standardization ? 0 : train_rows);
  const VarDataset ds = build_dataset(std_panel, opts.lag_order, opts.intercept);
  const double jacobian = -stats.sd.array().log().sum();

  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const auto& model = models[mi];
    const std::uint64_t model_seed =
        opts.seed ^ (0x9e3779b97f4a7c15ULL * (origin_row * 131 + mi + 1));
    PosteriorDraws draws;
    try {
      draws = estimate_model(ds, model, mcmc, model_seed);
    } catch (const std::exception&) {
      result.failed_models.push_back(model.label);
      continue;
    }
    for (int h : task.horizons) {
      if (origin_row + h >= panel.rows()) continue;
      const VectorXd realized_raw = panel.values.row(origin_row + h).transpose();
      const VectorXd realized_std =
          (realized_raw - stats.mean).cwiseQuotient(stats.sd);
      Rng rng = substream(model_seed, 1000 + h);
      const auto pd =
          predictive_density(draws, ds, realized_std, h, task.paths_per_draw, rng);
      Rng rng_pt = substream(model_seed, 2000 + h);
      const VectorXd pt_std = point_forecast(draws, ds, h, task.paths_per_draw, rng_pt);

      OriginResult::Cell cell;
      cell.lpl = pd.log_density + jacobian;  // density in original transformed units
      cell.dropped = pd.dropped;
      cell.point = pt_std.cwiseProduct(stats.sd) + stats.mean;
      cell.realized = realized_raw;
      result.cells[model.label][h] = cell;
    }
  }
  return result;
}

}  // namespace

EvalReport run_recursive_eval(const SeriesPanel& panel,
                              const std::vector<ModelSpec>& models,
                              const ForecastTask& task, const McmcConfig& mcmc,
                              const EvalOptions& opts) {
  panel.validate();
  if (models.empty()) throw std::invalid_argument("run_recursive_eval: no models");
  if (task.origins.empty()) throw std::invalid_argument("run_recursive_eval: no origins");

  // map origins to panel rows
  std::vector<int> origin_rows;
  const int max_h = *std::max_element(task.horizons.begin(), task.horizons.end());
  for (const auto& q : task.origins) {
    const auto it = std::find(panel.dates.begin(), panel.dates.end(), q);
    if (it == panel.dates.end())
      throw std::invalid_argument("origin " + q.str() + " not in panel");
    const int row = static_cast<int>(it - panel.dates.begin());
    if (row + max_h >= panel.rows())
      throw std::invalid_argument("origin " + q.str() +
                                  " leaves no observation at max horizon");
    origin_rows.push_back(row);
  }

  namespace fs = std::filesystem;
  if (!opts.checkpoint_dir.empty()) fs::create_directories(opts.checkpoint_dir);

  const auto run_one = [&](int idx) -> OriginResult {
    const std::string ckpt =
        opts.checkpoint_dir.empty()
            ? std::string()
            : opts.checkpoint_dir + "/origin_" + task.origins[idx].str() + ".json";
    if (!ckpt.empty() && fs::exists(ckpt)) {
      std::ifstream in(ckpt);
      json j;
      in >> j;
      return OriginResult::from_json(j);
    }
    OriginResult r =
        evaluate_origin(panel, origin_rows[idx], models, task, mcmc, opts);
    if (!ckpt.empty()) {
      const std::string tmp = ckpt + ".tmp";
      std::ofstream out(tmp);
      out << r.to_json().dump(2);
      out.close();
      fs::rename(tmp, ckpt);
    }
    return r;
  };

  std::vector<OriginResult> results(origin_rows.size());
  const int workers = std::max(opts.workers, 1);
  if (workers == 1) {
    for (std::size_t i = 0; i < origin_rows.size(); ++i) results[i] = run_one(i);
  } else {
    std::vector<std::future<void>> futures;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next.fetch_add(1); i < origin_rows.size();
             i = next.fetch_add(1)) {
          results[i] = run_one(i);
        }
      }));
    }
    for (auto& f : futures) f.get();
  }

  // order-independent associative reduction
  EvalReport report;
  report.benchmark = models.front().label;
  for (const auto& m : models) report.models.push_back(m.label);
  report.horizons = task.horizons;
  report.variables =
      task.target_variables.empty() ? panel.names : task.target_variables;
  std::vector<int> var_index;
  for (const auto& v : report.variables) {
    const auto it = std::find(panel.names.begin(), panel.names.end(), v);
    if (it == panel.names.end())
      throw std::invalid_argument("target variable " + v + " not in panel");
    var_index.push_back(static_cast<int>(it - panel.names.begin()));
  }

  for (const auto& r : results) {
    for (const auto& f : r.failed_models)
      report.failures.push_back(r.origin + ":" + f);
    for (const auto& m : report.models) {
      const auto it = r.cells.find(m);
      if (it == r.cells.end()) continue;
      for (const auto& [h, cell] : it->second) {
        auto& lc = report.lpl[m][h];
        lc.sum += cell.lpl;
        lc.count += 1;
        report.dropped_densities += cell.dropped;
        for (std::size_t vi = 0; vi < report.variables.size(); ++vi) {
          const double e = cell.point[var_index[vi]] - cell.realized[var_index[vi]];
          auto& sc = report.sqerr[m][h][report.variables[vi]];
          sc.sum += e * e;
          sc.count += 1;
        }
      }
    }
  }
  return report;
}

}  // namespace tvar
