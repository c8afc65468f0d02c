#include "tvar/volatility.hpp"

#include <cmath>
#include <stdexcept>

#include "tvar/linalg.hpp"

namespace tvar {

namespace {

// Omori, Chib, Shephard, Nakajima (2007), 10-component approximation of
// the log chi^2_1 distribution.
const double kMixP[10] = {0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                          0.18842, 0.12047, 0.05591, 0.01575, 0.00115};
const double kMixM[10] = {1.92677, 1.34744, 0.73504, 0.02266, -0.85173,
                          -1.97278, -3.46788, -5.55246, -8.68384, -14.65000};
const double kMixV[10] = {0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                          0.98583, 1.57469, 2.54498, 4.16591, 7.33342};

MatrixXd spd_inverse(const MatrixXd& m, double* logdet = nullptr) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("volatility: covariance not SPD");
  if (logdet) {
    *logdet = 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  }
  return llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
}

double stationary_phi_logterm(double phi, double dev1_sq, double s2) {
  // h_1 ~ N(mean, s2/(1-phi^2)) contribution that the proposal ignores
  return 0.5 * std::log(1.0 - phi * phi) - dev1_sq * (1.0 - phi * phi) / (2.0 * s2);
}

// MH update of an AR(1) coefficient given the demeaned path, with a
// stationarity-truncated Gaussian proposal built from the t>=2 likelihood.
double update_ar1_phi(const VectorXd& dev, double phi, double s2,
                      const VolatilityPriors& priors, Rng& rng,
                      VolDiagnostics* diag) {
  const int T = static_cast<int>(dev.size());
  const double prior_prec = 1.0 / (priors.phi_sd * priors.phi_sd);
  double a = prior_prec * priors.phi_mean, k = prior_prec;
  for (int t = 1; t < T; ++t) {
    k += dev[t - 1] * dev[t - 1] / s2;
    a += dev[t] * dev[t - 1] / s2;
  }
  const double prop = draw_truncated_normal(rng, a / k, std::sqrt(1.0 / k), -1.0, 1.0);
  double log_ratio = 0.0;
  if (T >= 1) {
    const double d1 = dev[0] * dev[0];
    log_ratio = stationary_phi_logterm(prop, d1, s2) - stationary_phi_logterm(phi, d1, s2);
  }
  if (diag) ++diag->phi_proposals;
  if (std::log(draw_uniform(rng)) < log_ratio) {
    if (diag) ++diag->phi_accepts;
    return prop;
  }
  return phi;
}

double ar1_ss(const VectorXd& dev, double phi) {
  // (1-phi^2) dev_1^2 + sum_{t>=2} (dev_t - phi dev_{t-1})^2
  const int T = static_cast<int>(dev.size());
  if (T == 0) return 0.0;
  double ss = (1.0 - phi * phi) * dev[0] * dev[0];
  for (int t = 1; t < T; ++t) {
    const double e = dev[t] - phi * dev[t - 1];
    ss += e * e;
  }
  return ss;
}

double draw_prior_phi(const VolatilityPriors& priors, Rng& rng) {
  return draw_truncated_normal(rng, priors.phi_mean, priors.phi_sd, -1.0, 1.0);
}

}  // namespace

const Eigen::Matrix<double, 10, 1>& AuxMixture::weights() {
  static const auto v = [] {
    Eigen::Matrix<double, 10, 1> m;
    for (int i = 0; i < 10; ++i) m[i] = kMixP[i];
    return m;
  }();
  return v;
}

const Eigen::Matrix<double, 10, 1>& AuxMixture::means() {
  static const auto v = [] {
    Eigen::Matrix<double, 10, 1> m;
    for (int i = 0; i < 10; ++i) m[i] = kMixM[i];
    return m;
  }();
  return v;
}

const Eigen::Matrix<double, 10, 1>& AuxMixture::variances() {
  static const auto v = [] {
    Eigen::Matrix<double, 10, 1> m;
    for (int i = 0; i < 10; ++i) m[i] = kMixV[i];
    return m;
  }();
  return v;
}

int state_T(const VolatilityState& state) {
  if (const auto* csv = std::get_if<CommonSV>(&state))
    return static_cast<int>(csv->h.size());
  if (const auto* sv = std::get_if<CholeskySV>(&state))
    return static_cast<int>(sv->H.rows());
  return 0;
}

int state_n(const VolatilityState& state) {
  if (const auto* hom = std::get_if<Homoskedastic>(&state))
    return static_cast<int>(hom->omega.rows());
  if (const auto* csv = std::get_if<CommonSV>(&state))
    return static_cast<int>(csv->omega.rows());
  return static_cast<int>(std::get<CholeskySV>(state).B0.rows());
}

MatrixXd sigma_at(const VolatilityState& state, int t) {
  if (const auto* hom = std::get_if<Homoskedastic>(&state)) return hom->omega;
  if (const auto* csv = std::get_if<CommonSV>(&state))
    return std::exp(csv->h[t]) * csv->omega;
  const auto& sv = std::get<CholeskySV>(state);
  const int n = static_cast<int>(sv.B0.rows());
  const MatrixXd binv = sv.B0.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(n, n));
  return binv * sv.H.row(t).array().exp().matrix().asDiagonal() * binv.transpose();
}

SigmaPath build_sigma_path(const VolatilityState& state, int T) {
  SigmaPath path;
  path.sigma.reserve(T);
  path.inv.reserve(T);
  path.logdet.resize(T);
  if (const auto* hom = std::get_if<Homoskedastic>(&state)) {
    double ld = 0.0;
    const MatrixXd inv = spd_inverse(hom->omega, &ld);
    for (int t = 0; t < T; ++t) {
      path.sigma.push_back(hom->omega);
      path.inv.push_back(inv);
      path.logdet[t] = ld;
    }
    return path;
  }
  if (const auto* csv = std::get_if<CommonSV>(&state)) {
    if (static_cast<int>(csv->h.size()) < T)
      throw std::invalid_argument("build_sigma_path: h shorter than T");
    double ld = 0.0;
    const MatrixXd oinv = spd_inverse(csv->omega, &ld);
    const int n = static_cast<int>(csv->omega.rows());
    for (int t = 0; t < T; ++t) {
      const double s = std::exp(csv->h[t]);
      path.sigma.push_back(s * csv->omega);
      path.inv.push_back(oinv / s);
      path.logdet[t] = ld + n * csv->h[t];
    }
    return path;
  }
  const auto& sv = std::get<CholeskySV>(state);
  if (static_cast<int>(sv.H.rows()) < T)
    throw std::invalid_argument("build_sigma_path: H shorter than T");
  const int n = static_cast<int>(sv.B0.rows());
  const MatrixXd binv = sv.B0.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(n, n));
  for (int t = 0; t < T; ++t) {
    const VectorXd d = sv.H.row(t).array().exp();
    path.sigma.push_back(binv * d.asDiagonal() * binv.transpose());
    // Sigma^{-1} = B0' D^{-1} B0
    path.inv.push_back(sv.B0.transpose() * d.cwiseInverse().asDiagonal() * sv.B0);
    path.logdet[t] = sv.H.row(t).sum();
  }
  return path;
}

Homoskedastic update_homoskedastic(const Homoskedastic& state, const MatrixXd& U,
                                   const VolatilityPriors& priors, Rng& rng) {
  const int n = static_cast<int>(state.omega.rows());
  const int T = static_cast<int>(U.rows());
  const MatrixXd scale = MatrixXd::Identity(n, n) + U.transpose() * U;
  return Homoskedastic{draw_inv_wishart(n + priors.omega_df_delta + T, scale, rng)};
}

CommonSV update_common_sv(const CommonSV& state, const MatrixXd& U,
                          const VolatilityPriors& priors, Rng& rng,
                          VolDiagnostics* diag) {
  const int T = static_cast<int>(U.rows());
  const int n = static_cast<int>(state.omega.rows());
  CommonSV next = state;

  if (T == 0) {
    next.phi = draw_prior_phi(priors, rng);
    next.sigma_h2 = draw_inv_gamma(priors.sig_shape, priors.sig_rate, rng);
    next.omega = draw_inv_wishart(n + priors.omega_df_delta,
                                  MatrixXd::Identity(n, n), rng);
    next.h.resize(0);
    return next;
  }
  if (static_cast<int>(state.h.size()) != T)
    throw std::invalid_argument("update_common_sv: h length != residual rows");

  // (a) h path: independence MH, Gaussian proposal from a second-order
  // expansion of the exact conditional around its mode.
  const MatrixXd oinv = spd_inverse(next.omega);
  VectorXd s(T);
  for (int t = 0; t < T; ++t) s[t] = U.row(t) * oinv * U.row(t).transpose();

  const SymTridiag prior_prec = ar1_precision(T, next.phi, next.sigma_h2);
  const auto target = [&](const VectorXd& h) {
    double v = 0.0;
    for (int t = 0; t < T; ++t) v += -0.5 * n * h[t] - 0.5 * s[t] * std::exp(-h[t]);
    return v - 0.5 * h.dot(prior_prec.multiply(h));
  };

  // the target is strictly concave; damped Newton with a loose stopping rule
  // (the proposal only has to be close, the MH step corrects the rest)
  VectorXd mode = next.h;
  const double grad_tol = 1e-6 * (1.0 + prior_prec.diag().maxCoeff());
  for (int iter = 0; iter < 100; ++iter) {
    VectorXd grad = -prior_prec.multiply(mode);
    VectorXd curv(T);
    for (int t = 0; t < T; ++t) {
      const double se = 0.5 * s[t] * std::exp(-mode[t]);
      grad[t] += -0.5 * n + se;
      curv[t] = se;
    }
    if (grad.lpNorm<Eigen::Infinity>() < grad_tol) break;
    SymTridiag hess(prior_prec.diag() + curv, prior_prec.off());
    hess.factor();
    VectorXd step = hess.solve(grad);
    double step_scale = 1.0;
    const double f0 = target(mode);
    while (step_scale > 1e-6 && !(target(mode + step_scale * step) >= f0))
      step_scale *= 0.5;
    if (step_scale * step.lpNorm<Eigen::Infinity>() < 1e-10) break;
    mode += step_scale * step;
  }
  if (!mode.allFinite())
    throw std::runtime_error("update_common_sv: mode finding diverged");

  VectorXd curv(T);
  for (int t = 0; t < T; ++t) curv[t] = 0.5 * s[t] * std::exp(-mode[t]);
  SymTridiag prop_prec(prior_prec.diag() + curv, prior_prec.off());
  prop_prec.factor();
  const VectorXd b_prop = prop_prec.multiply(mode);
  const VectorXd h_prop = prop_prec.sample(b_prop, rng);
  const double log_alpha = target(h_prop) - target(next.h) -
                           (prop_prec.log_density(h_prop, b_prop) -
                            prop_prec.log_density(next.h, b_prop));
  if (diag) ++diag->h_proposals;
  if (std::log(draw_uniform(rng)) < log_alpha) {
    next.h = h_prop;
    if (diag) ++diag->h_accepts;
  }

  // (b) phi, (c) sigma_h2
  next.phi = update_ar1_phi(next.h, next.phi, next.sigma_h2, priors, rng, diag);
  next.sigma_h2 = draw_inv_gamma(priors.sig_shape + 0.5 * T,
                                 priors.sig_rate + 0.5 * ar1_ss(next.h, next.phi), rng);

  // (d) Omega from the rescaled residuals e^{-h_t/2} u_t
  MatrixXd scale = MatrixXd::Identity(n, n);
  for (int t = 0; t < T; ++t)
    scale += std::exp(-next.h[t]) * U.row(t).transpose() * U.row(t);
  next.omega = draw_inv_wishart(n + priors.omega_df_delta + T, scale, rng);
  return next;
}

CholeskySV update_cholesky_sv(const CholeskySV& state, const MatrixXd& U,
                              const VolatilityPriors& priors, Rng& rng,
                              VolDiagnostics* diag) {
  const int T = static_cast<int>(U.rows());
  const int n = static_cast<int>(state.B0.rows());
  CholeskySV next = state;

  if (T == 0) {
    for (int i = 0; i < n; ++i) {
      next.mu[i] = draw_normal(rng, 0.0, std::sqrt(priors.mu_var));
      next.phi[i] = draw_prior_phi(priors, rng);
      next.sigma2[i] = draw_inv_gamma(priors.sig_shape, priors.sig_rate, rng);
      for (int j = 0; j < i; ++j)
        next.B0(i, j) = draw_normal(rng, 0.0, std::sqrt(priors.b0_var));
    }
    next.H.resize(0, n);
    return next;
  }
  if (next.H.rows() != T)
    throw std::invalid_argument("update_cholesky_sv: H rows != residual rows");

  // (a)-(c) per-series log-volatility paths and AR(1) parameters
  const MatrixXd E = U * next.B0.transpose();  // orthogonalized residuals
  const auto& mw = AuxMixture::weights();
  const auto& mm = AuxMixture::means();
  const auto& mv = AuxMixture::variances();
  for (int i = 0; i < n; ++i) {
    const VectorXd ystar = (E.col(i).array().square() + kSvOffset).log();

    // mixture indicators given h
    VectorXd inv_v(T), adj(T);
    for (int t = 0; t < T; ++t) {
      Eigen::Matrix<double, 10, 1> w;
      for (int j = 0; j < 10; ++j) {
        const double dev = ystar[t] - next.H(t, i) - mm[j];
        w[j] = mw[j] / std::sqrt(mv[j]) * std::exp(-0.5 * dev * dev / mv[j]);
      }
      const int comp = draw_discrete(w, rng);
      inv_v[t] = 1.0 / mv[comp];
      adj[t] = (ystar[t] - mm[comp]) * inv_v[t];
    }

    // h path: Gaussian state-space draw with banded precision
    const SymTridiag prior_prec = ar1_precision(T, next.phi[i], next.sigma2[i]);
    SymTridiag post(prior_prec.diag() + inv_v, prior_prec.off());
    post.factor();
    const VectorXd b =
        prior_prec.multiply(VectorXd::Constant(T, next.mu[i])) + adj;
    next.H.col(i) = post.sample(b, rng);

    // mu_i
    VectorXd dev = next.H.col(i).array() - next.mu[i];
    {
      const double phi_i = next.phi[i], s2 = next.sigma2[i];
      double k = (1.0 - phi_i * phi_i) / s2 + 1.0 / priors.mu_var;
      double a = (1.0 - phi_i * phi_i) / s2 * next.H(0, i);
      for (int t = 1; t < T; ++t) {
        k += (1.0 - phi_i) * (1.0 - phi_i) / s2;
        a += (1.0 - phi_i) * (next.H(t, i) - phi_i * next.H(t - 1, i)) / s2;
      }
      next.mu[i] = draw_normal(rng, a / k, std::sqrt(1.0 / k));
      dev = next.H.col(i).array() - next.mu[i];
    }

    next.phi[i] = update_ar1_phi(dev, next.phi[i], next.sigma2[i], priors, rng, diag);
    next.sigma2[i] = draw_inv_gamma(priors.sig_shape + 0.5 * T,
                                    priors.sig_rate + 0.5 * ar1_ss(dev, next.phi[i]), rng);
  }

  // (d) free B0 elements: row i regresses u_i on -(u_1, ..., u_{i-1}) with
  // variance e^{h_{i,t}}
  for (int i = 1; i < n; ++i) {
    MatrixXd K = MatrixXd::Identity(i, i) / priors.b0_var;
    VectorXd b = VectorXd::Zero(i);
    for (int t = 0; t < T; ++t) {
      const double w = std::exp(-next.H(t, i));
      const VectorXd x = -U.row(t).head(i).transpose();
      K += w * x * x.transpose();
      b += w * x * U(t, i);
    }
    next.B0.row(i).head(i) = draw_gaussian_precision(K, b, rng).transpose();
  }
  return next;
}

VolatilityState update_volatility(const VolatilityState& state, const MatrixXd& U,
                                  const VolatilityPriors& priors, Rng& rng,
                                  VolDiagnostics* diag) {
  if (const auto* hom = std::get_if<Homoskedastic>(&state))
    return update_homoskedastic(*hom, U, priors, rng);
  if (const auto* csv = std::get_if<CommonSV>(&state))
    return update_common_sv(*csv, U, priors, rng, diag);
  return update_cholesky_sv(std::get<CholeskySV>(state), U, priors, rng, diag);
}

std::vector<MatrixXd> forecast_sigma(const VolatilityState& state, int horizon, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("forecast_sigma: horizon must be >= 1");
  std::vector<MatrixXd> out;
  out.reserve(horizon);
  if (const auto* hom = std::get_if<Homoskedastic>(&state)) {
    for (int k = 0; k < horizon; ++k) out.push_back(hom->omega);
    return out;
  }
  if (const auto* csv = std::get_if<CommonSV>(&state)) {
    const double sd = std::sqrt(csv->sigma_h2);
    double h = csv->h.size() > 0
                   ? csv->h[csv->h.size() - 1]
                   : draw_normal(rng, 0.0, sd / std::sqrt(1.0 - csv->phi * csv->phi));
    for (int k = 0; k < horizon; ++k) {
      h = csv->phi * h + draw_normal(rng, 0.0, sd);
      out.push_back(std::exp(h) * csv->omega);
    }
    return out;
  }
  const auto& sv = std::get<CholeskySV>(state);
  const int n = static_cast<int>(sv.B0.rows());
  const int T = static_cast<int>(sv.H.rows());
  const MatrixXd binv = sv.B0.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(n, n));
  VectorXd h(n);
  for (int i = 0; i < n; ++i) {
    h[i] = T > 0 ? sv.H(T - 1, i)
                 : draw_normal(rng, sv.mu[i],
                               std::sqrt(sv.sigma2[i] / (1.0 - sv.phi[i] * sv.phi[i])));
  }
  for (int k = 0; k < horizon; ++k) {
    for (int i = 0; i < n; ++i) {
      h[i] = sv.mu[i] + sv.phi[i] * (h[i] - sv.mu[i]) +
             draw_normal(rng, 0.0, std::sqrt(sv.sigma2[i]));
    }
    out.push_back(binv * h.array().exp().matrix().asDiagonal() * binv.transpose());
  }
  return out;
}

}  // namespace tvar
