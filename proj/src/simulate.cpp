#include "tvar/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "tvar/linalg.hpp"

namespace tvar {

namespace {

double companion_spectral_radius(const MatrixXd& A_lags, int n, int p) {
  MatrixXd comp = MatrixXd::Zero(n * p, n * p);
  comp.topRows(n) = A_lags.transpose();  // (A_1, ..., A_p) blocks
  if (p > 1) comp.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
  return comp.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

SimResult simulate_tvar(const SimConfig& cfg) {
  Rng rng = substream(cfg.seed, 99);
  const int n = cfg.n, p = cfg.p, R = cfg.rank;

  CPFactors f;
  f.theta1.resize(n, R);
  f.theta2.resize(n, R);
  f.theta3.resize(p, R);
  for (int r = 0; r < R; ++r) {
    for (int i = 0; i < n; ++i) {
      f.theta1(i, r) = draw_normal(rng, 0.0, 0.5);
      f.theta2(i, r) = draw_normal(rng, 0.0, 0.5);
    }
    for (int k = 0; k < p; ++k) f.theta3(k, r) = draw_normal(rng, 0.0, 0.5);
  }
  // enforce stationarity by shrinking theta3
  for (int attempt = 0; attempt < 200; ++attempt) {
    const double rho = companion_spectral_radius(cp_matricized(f, 1).transpose(), n, p);
    if (rho < cfg.spectral_target) break;
    f.theta3 *= 0.9 * cfg.spectral_target / rho;
  }

  const int burn = 50;
  const int total = cfg.T + p + burn;

  // volatility path over the T modeled rows
  VolatilityState vol = Homoskedastic{MatrixXd::Identity(n, n)};
  if (cfg.regime == VolRegime::CommonSV) {
    CommonSV csv;
    csv.phi = cfg.csv_phi;
    csv.sigma_h2 = cfg.csv_sigma_h2;
    csv.omega = MatrixXd::Identity(n, n);
    csv.h.resize(cfg.T);
    const double sd = std::sqrt(csv.sigma_h2);
    csv.h[0] = draw_normal(rng, 0.0, sd / std::sqrt(1.0 - csv.phi * csv.phi));
    for (int t = 1; t < cfg.T; ++t)
      csv.h[t] = csv.phi * csv.h[t - 1] + draw_normal(rng, 0.0, sd);
    vol = csv;
  } else if (cfg.regime == VolRegime::CholeskySV) {
    CholeskySV sv;
    sv.mu = VectorXd::Zero(n);
    sv.phi = VectorXd::Constant(n, cfg.csv_phi);
    sv.sigma2 = VectorXd::Constant(n, cfg.csv_sigma_h2);
    sv.B0 = MatrixXd::Identity(n, n);
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) sv.B0(i, j) = cfg.sv_b21;
    sv.H.resize(cfg.T, n);
    for (int i = 0; i < n; ++i) {
      const double sd = std::sqrt(sv.sigma2[i]);
      sv.H(0, i) = draw_normal(rng, sv.mu[i], sd / std::sqrt(1.0 - sv.phi[i] * sv.phi[i]));
      for (int t = 1; t < cfg.T; ++t)
        sv.H(t, i) = sv.mu[i] + sv.phi[i] * (sv.H(t - 1, i) - sv.mu[i]) +
                     draw_normal(rng, 0.0, sd);
    }
    vol = sv;
  }

  const MatrixXd A_lags = cp_matricized(f, 1).transpose();  // np x n
  MatrixXd y = MatrixXd::Zero(total, n);
  for (int t = p; t < total; ++t) {
    VectorXd x(n * p);
    for (int l = 1; l <= p; ++l) x.segment((l - 1) * n, n) = y.row(t - l).transpose();
    // burn-in rows use the t=0 covariance of the volatility path
    const int vt = std::max(t - (burn + p), 0);
    const MatrixXd sigma = sigma_at(vol, std::min(vt, cfg.T - 1));
    const VectorXd u = MatrixXd(sigma.llt().matrixL()) * draw_std_normal(n, rng);
    y.row(t) = (A_lags.transpose() * x + u).transpose();
  }

  SimResult result{SeriesPanel{}, f, vol};
  result.panel.values = y.bottomRows(cfg.T + p).eval();
  Quarter q = cfg.start;
  for (int t = 0; t < cfg.T + p; ++t) {
    result.panel.dates.push_back(q);
    q = q.next();
  }
  for (int i = 0; i < n; ++i) result.panel.names.push_back("y" + std::to_string(i + 1));
  return result;
}

}  // namespace tvar
