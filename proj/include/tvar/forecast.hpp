#pragma once

#include <map>
#include <string>
#include <vector>

#include "tvar/bvar.hpp"
#include "tvar/data_io.hpp"
#include "tvar/sampler.hpp"

namespace tvar {

enum class ModelFamily { BVAR, TVAR, TVAR_CSV, TVAR_SV };

ModelFamily parse_family(const std::string& name);
std::string family_name(ModelFamily family);
VolRegime family_regime(ModelFamily family);

struct ModelSpec {
  std::string label;
  ModelFamily family = ModelFamily::BVAR;
  int rank = 1;
  // Replaces every draw's error covariance with a fixed diagonal matrix
  // (training residual variances); a deliberately crippled control.
  bool crippled = false;
};

struct ForecastTask {
  std::vector<Quarter> origins;
  std::vector<int> horizons = {1, 4};
  int paths_per_draw = 5;
  std::vector<std::string> target_variables;  // empty = all
};

struct PredictiveResult {
  double log_density = 0.0;
  int dropped = 0;  // non-finite per-path densities excluded
};

// Log predictive density of y_future at the given horizon: intermediate
// steps simulated, the final step Rao-Blackwellized as a Gaussian density,
// combined across draws and paths with a stable log-mean-exp.
PredictiveResult predictive_density(const PosteriorDraws& draws, const VarDataset& ds,
                                    const VectorXd& y_future, int horizon,
                                    int paths_per_draw, Rng& rng);

// Posterior predictive mean across draws and simulated paths.
VectorXd point_forecast(const PosteriorDraws& draws, const VarDataset& ds,
                        int horizon, int paths_per_draw, Rng& rng);

// Numerically stable log(mean(exp(x))).
double log_mean_exp(const std::vector<double>& logs);

struct EvalCell {
  double sum = 0.0;
  int count = 0;

  double mean() const { return count ? sum / count : std::numeric_limits<double>::quiet_NaN(); }
};

struct EvalReport {
  std::vector<std::string> models;
  std::string benchmark;
  std::vector<std::string> variables;
  std::vector<int> horizons;
  // joint log predictive likelihood per model x horizon
  std::map<std::string, std::map<int, EvalCell>> lpl;
  // squared forecast errors (de-standardized units) per model x horizon x variable
  std::map<std::string, std::map<int, std::map<std::string, EvalCell>>> sqerr;
  // origins where a model failed to estimate
  std::vector<std::string> failures;
  int dropped_densities = 0;

  double avg_lpl(const std::string& model, int h) const;
  double rmsfe(const std::string& model, int h, const std::string& var) const;
  double relative_rmsfe(const std::string& model, int h, const std::string& var) const;

  std::string to_json() const;
  // Tables mirroring the layout: joint LPL per horizon, relative RMSFE per
  // variable, LPL by rank when models form a rank sweep.
  std::string lpl_csv() const;
  std::string rmsfe_csv() const;
};

struct EvalOptions {
  int lag_order = 4;
  bool intercept = false;
  bool full_sample_standardization = false;  // replication mode
  int workers = 1;
  std::string checkpoint_dir;  // empty = no checkpointing
  std::uint64_t seed = 1;
};

// Recursive expanding-window exercise: per origin, re-standardize on the
// training window, re-estimate every model, score densities and points.
EvalReport run_recursive_eval(const SeriesPanel& panel,
                              const std::vector<ModelSpec>& models,
                              const ForecastTask& task, const McmcConfig& mcmc,
                              const EvalOptions& opts);

// Estimates one model on a prepared (standardized) dataset.
PosteriorDraws estimate_model(const VarDataset& ds, const ModelSpec& model,
                              const McmcConfig& mcmc, std::uint64_t seed);

}  // namespace tvar
