#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "test_helpers.hpp"
#include "tvar/forecast.hpp"
#include "tvar/simulate.hpp"

using namespace tvar;
using testutil::random_matrix;

namespace {

double mvn_logpdf(const VectorXd& x, const VectorXd& mean, const MatrixXd& sigma) {
  const Eigen::LLT<MatrixXd> llt(sigma);
  const VectorXd dev = llt.matrixL().solve(x - mean);
  const double logdet = 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * (x.size() * std::log(2.0 * std::numbers::pi) + logdet + dev.squaredNorm());
}

PosteriorDraws single_draw(const MatrixXd& A, const MatrixXd& omega) {
  PosteriorDraws d;
  d.draws.push_back(Draw{CPFactors{}, A, Homoskedastic{omega}, VectorXd()});
  return d;
}

}  // namespace

TEST_CASE("one-step density is the exact Gaussian, no simulation noise") {
  Rng rng(71);
  const int n = 3, p = 2;
  const VarDataset ds = build_dataset(
      testutil::panel_from_matrix(random_matrix(12, n, rng)), p);
  const MatrixXd A = random_matrix(n * p, n, rng, 0.2);
  const MatrixXd omega = testutil::random_spd(n, rng);
  const VectorXd y_future = random_matrix(n, 1, rng).col(0);

  // conditional mean from the last p rows of the panel
  VectorXd x(n * p);
  x.head(n) = ds.Y.row(ds.T() - 1).transpose();
  x.tail(n) = ds.Y.row(ds.T() - 2).transpose();
  const double exact = mvn_logpdf(y_future, A.transpose() * x, omega);

  Rng rng2(72);
  const auto pd = predictive_density(single_draw(A, omega), ds, y_future, 1, 7, rng2);
  CHECK(pd.log_density == doctest::Approx(exact).epsilon(1e-12));
  CHECK(pd.dropped == 0);
}

TEST_CASE("one-step density with several draws is log-mean-exp of the parts") {
  Rng rng(73);
  const int n = 2, p = 1;
  const VarDataset ds = build_dataset(
      testutil::panel_from_matrix(random_matrix(8, n, rng)), p);
  const VectorXd y_future = random_matrix(n, 1, rng).col(0);
  PosteriorDraws draws;
  std::vector<double> logs;
  for (int m = 0; m < 4; ++m) {
    const MatrixXd A = random_matrix(n, n, rng, 0.3);
    const MatrixXd omega = testutil::random_spd(n, rng);
    draws.draws.push_back(Draw{CPFactors{}, A, Homoskedastic{omega}, VectorXd()});
    const VectorXd mean = A.transpose() * ds.Y.row(ds.T() - 1).transpose();
    logs.push_back(mvn_logpdf(y_future, mean, omega));
  }
  Rng rng2(74);
  const auto pd = predictive_density(draws, ds, y_future, 1, 3, rng2);
  CHECK(pd.log_density == doctest::Approx(log_mean_exp(logs)).epsilon(1e-12));
}

TEST_CASE("log_mean_exp: shift invariance and extremes") {
  const std::vector<double> logs = {-1.0, -2.0, -0.5};
  const double base = log_mean_exp(logs);
  std::vector<double> shifted;
  for (double v : logs) shifted.push_back(v + 700.0);
  CHECK(log_mean_exp(shifted) == doctest::Approx(base + 700.0).epsilon(1e-12));
  std::vector<double> down;
  for (double v : logs) down.push_back(v - 700.0);
  CHECK(log_mean_exp(down) == doctest::Approx(base - 700.0).epsilon(1e-12));
  CHECK(log_mean_exp({-3.0}) == doctest::Approx(-3.0));
  CHECK(std::isnan(log_mean_exp({})));
}

TEST_CASE("two-step density matches the closed-form AR(1) predictive") {
  // univariate, fixed coefficients: y_{T+2} | y_T ~ N(a^2 y_T, a^2 s2 + s2)
  Rng rng(75);
  const double a = 0.6, s2 = 0.5;
  MatrixXd Yraw(6, 1);
  Yraw << 0.1, -0.3, 0.2, 0.4, -0.1, 1.2;
  const VarDataset ds = build_dataset(testutil::panel_from_matrix(Yraw), 1);
  const MatrixXd A = MatrixXd::Constant(1, 1, a);
  const MatrixXd omega = MatrixXd::Constant(1, 1, s2);
  const double yT = Yraw(5, 0);
  const VectorXd y_future = VectorXd::Constant(1, 0.9);
  const double exact =
      mvn_logpdf(y_future, VectorXd::Constant(1, a * a * yT),
                 MatrixXd::Constant(1, 1, a * a * s2 + s2));
  // many simulated paths of the intermediate step
  Rng rng2(76);
  const auto pd = predictive_density(single_draw(A, omega), ds, y_future, 2, 200000, rng2);
  CHECK(pd.log_density == doctest::Approx(exact).epsilon(0.01));
}

TEST_CASE("point forecast is the iterated mean for fixed coefficients") {
  Rng rng(77);
  const double a = 0.7;
  MatrixXd Yraw(5, 1);
  Yraw << 0.0, 0.5, -0.5, 0.25, 2.0;
  const VarDataset ds = build_dataset(testutil::panel_from_matrix(Yraw), 1);
  const auto draws = single_draw(MatrixXd::Constant(1, 1, a),
                                 MatrixXd::Constant(1, 1, 0.1));
  Rng rng1(78);
  const VectorXd f1 = point_forecast(draws, ds, 1, 10, rng1);
  CHECK(f1[0] == doctest::Approx(a * 2.0).epsilon(1e-12));
  Rng rng2(79);
  const VectorXd f2 = point_forecast(draws, ds, 2, 100000, rng2);
  CHECK(f2[0] == doctest::Approx(a * a * 2.0).epsilon(0.02));
}

TEST_CASE("doubling paths leaves a multi-step density essentially unchanged") {
  SimConfig sim;
  sim.n = 2;
  sim.p = 1;
  sim.T = 40;
  sim.seed = 9;
  const SimResult data = simulate_tvar(sim);
  const VarDataset ds = build_dataset(data.panel, 1);
  Rng rng(80);
  PosteriorDraws draws;
  for (int m = 0; m < 20; ++m) {
    draws.draws.push_back(Draw{CPFactors{}, random_matrix(2, 2, rng, 0.2),
                               Homoskedastic{testutil::random_spd(2, rng)}, VectorXd()});
  }
  const VectorXd y_future = random_matrix(2, 1, rng).col(0);
  Rng a(81), b(82);
  const double d1 = predictive_density(draws, ds, y_future, 3, 400, a).log_density;
  const double d2 = predictive_density(draws, ds, y_future, 3, 800, b).log_density;
  CHECK(std::abs(d1 - d2) < 0.05);
}

TEST_CASE("EvalReport arithmetic: rmsfe and 2x error scaling") {
  EvalReport r;
  r.models = {"bench", "alt"};
  r.benchmark = "bench";
  r.variables = {"y1"};
  r.horizons = {1};
  r.sqerr["bench"][1]["y1"] = EvalCell{8.0, 2};  // mean 4 -> rmsfe 2
  r.sqerr["alt"][1]["y1"] = EvalCell{32.0, 2};   // errors doubled -> rmsfe 4
  r.lpl["bench"][1] = EvalCell{-10.0, 2};
  r.lpl["alt"][1] = EvalCell{-6.0, 2};
  CHECK(r.rmsfe("bench", 1, "y1") == doctest::Approx(2.0));
  CHECK(r.rmsfe("alt", 1, "y1") == doctest::Approx(4.0));
  CHECK(r.relative_rmsfe("alt", 1, "y1") == doctest::Approx(2.0));
  CHECK(r.avg_lpl("alt", 1) == doctest::Approx(-3.0));
  const std::string j = r.to_json();
  CHECK(j.find("\"relative_rmsfe\"") != std::string::npos);
  CHECK(r.lpl_csv().find("bench,alt") != std::string::npos);
  CHECK(r.rmsfe_csv().find("y1,1") != std::string::npos);
}

TEST_CASE("family parsing round-trips and maps regimes") {
  for (const auto& name : {"BVAR", "TVAR", "TVAR-CSV", "TVAR-SV"})
    CHECK(family_name(parse_family(name)) == name);
  CHECK_THROWS(parse_family("VAR"));
  CHECK(family_regime(ModelFamily::TVAR_CSV) == VolRegime::CommonSV);
  CHECK(family_regime(ModelFamily::TVAR_SV) == VolRegime::CholeskySV);
  CHECK(family_regime(ModelFamily::TVAR) == VolRegime::Homoskedastic);
}

TEST_CASE("crippled models carry diagonal covariances") {
  SimConfig sim;
  sim.n = 3;
  sim.p = 1;
  sim.T = 50;
  sim.seed = 10;
  const VarDataset ds = build_dataset(simulate_tvar(sim).panel, 1);
  McmcConfig mcmc;
  mcmc.burn_in = 10;
  mcmc.draws = 5;
  ModelSpec spec{"bvar-diag", ModelFamily::BVAR, 1, true};
  const PosteriorDraws draws = estimate_model(ds, spec, mcmc, 3);
  for (const auto& d : draws.draws) {
    const auto& omega = std::get<Homoskedastic>(d.vol).omega;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < i; ++j) CHECK(omega(i, j) == 0.0);
  }
}

TEST_CASE("recursive eval: determinism, parallel equivalence and checkpoints") {
  SimConfig sim;
  sim.n = 2;
  sim.p = 1;
  sim.T = 60;
  sim.seed = 14;
  const SimResult data = simulate_tvar(sim);

  std::vector<ModelSpec> models = {{"BVAR", ModelFamily::BVAR, 1, false},
                                   {"TVAR-R1", ModelFamily::TVAR, 1, false}};
  ForecastTask task;
  task.horizons = {1, 2};
  task.paths_per_draw = 2;
  // four origins near the end of the sample
  const int rows = data.panel.rows();
  for (int k = 7; k >= 4; --k) task.origins.push_back(data.panel.dates[rows - 1 - k]);

  McmcConfig mcmc;
  mcmc.burn_in = 20;
  mcmc.draws = 20;
  EvalOptions opts;
  opts.lag_order = 1;
  opts.seed = 5;

  const EvalReport a = run_recursive_eval(data.panel, models, task, mcmc, opts);
  const EvalReport b = run_recursive_eval(data.panel, models, task, mcmc, opts);
  CHECK(a.to_json() == b.to_json());

  EvalOptions par = opts;
  par.workers = 3;
  const EvalReport c = run_recursive_eval(data.panel, models, task, mcmc, par);
  CHECK(a.to_json() == c.to_json());

  // checkpointed run resumes to the identical report
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "tvar_eval_ckpt_test").string();
  fs::remove_all(dir);
  EvalOptions ck = opts;
  ck.checkpoint_dir = dir;
  const EvalReport d = run_recursive_eval(data.panel, models, task, mcmc, ck);
  CHECK(a.to_json() == d.to_json());
  // second pass reads every origin back from disk
  CHECK(fs::exists(dir + "/origin_" + task.origins[0].str() + ".json"));
  const EvalReport e = run_recursive_eval(data.panel, models, task, mcmc, ck);
  CHECK(a.to_json() == e.to_json());
  fs::remove_all(dir);

  // sanity on content
  for (const auto& m : a.models)
    for (int h : a.horizons) CHECK(std::isfinite(a.avg_lpl(m, h)));
  CHECK(a.failures.empty());
}

TEST_CASE("recursive eval rejects bad origins and variables") {
  SimConfig sim;
  sim.n = 2;
  sim.p = 1;
  sim.T = 30;
  sim.seed = 15;
  const SimResult data = simulate_tvar(sim);
  std::vector<ModelSpec> models = {{"BVAR", ModelFamily::BVAR, 1, false}};
  McmcConfig mcmc;
  mcmc.draws = 5;
  mcmc.burn_in = 5;
  EvalOptions opts;
  opts.lag_order = 1;
  {
    ForecastTask task;
    task.origins = {Quarter{1800, 1}};
    CHECK_THROWS(run_recursive_eval(data.panel, models, task, mcmc, opts));
  }
  {
    ForecastTask task;
    task.origins = {data.panel.dates.back()};  // no room for any horizon
    CHECK_THROWS(run_recursive_eval(data.panel, models, task, mcmc, opts));
  }
  {
    ForecastTask task;
    task.origins = {data.panel.dates[20]};
    task.target_variables = {"nope"};
    CHECK_THROWS(run_recursive_eval(data.panel, models, task, mcmc, opts));
  }
}
