#include "tvar/sampler.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "tvar/linalg.hpp"

namespace tvar {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VectorXd prior_term(const VectorXd& mean, const VectorXd& var) {
  return mean.cwiseQuotient(var);
}

}  // namespace

FactorPrior FactorPrior::defaults(int n, int p, int R) {
  FactorPrior prior;
  prior.mean1 = VectorXd::Zero(n * R);
  prior.mean2 = VectorXd::Zero(n * R);
  prior.mean3 = VectorXd::Zero(p * R);
  prior.var1 = VectorXd::Constant(n * R, 1.0);
  prior.var2 = VectorXd::Constant(n * R, 1.0);
  // lag loadings multiply two unit-scale factors; looser scale
  prior.var3 = VectorXd::Constant(p * R, 10.0);
  return prior;
}

void McmcConfig::validate() const {
  if (draws < 1 || thin < 1 || burn_in < 0 || rank < 1)
    throw std::invalid_argument("McmcConfig: draws/thin/rank must be positive");
}

SamplerMode resolve_mode(SamplerMode mode, int n, int R) {
  if (mode != SamplerMode::Auto) return mode;
  return n * R <= 400 ? SamplerMode::JointBlock : SamplerMode::PerRank;
}

MatrixXd draw_theta1_joint(const MatrixXd& Yeff, const MatrixXd& X,
                           const CPFactors& factors, const SigmaPath& sp,
                           const FactorPrior& prior, Rng& rng) {
  const int n = factors.n(), R = factors.rank();
  const int T = static_cast<int>(Yeff.rows());
  const MatrixXd W = X * cp_companion(factors, 1);  // T x R

  MatrixXd K = MatrixXd(prior.var1.cwiseInverse().asDiagonal());
  VectorXd b = prior_term(prior.mean1, prior.var1);
  // Sigma is block diagonal, so K accumulates (w_t w_t') kron Sigma_t^{-1}
  for (int t = 0; t < T; ++t) {
    const MatrixXd siy = sp.inv[t] * Yeff.row(t).transpose();
    for (int r = 0; r < R; ++r) {
      for (int s = 0; s <= r; ++s) {
        K.block(r * n, s * n, n, n) += W(t, r) * W(t, s) * sp.inv[t];
      }
      b.segment(r * n, n) += W(t, r) * siy;
    }
  }
  for (int r = 0; r < R; ++r)
    for (int s = r + 1; s < R; ++s)
      K.block(r * n, s * n, n, n) = K.block(s * n, r * n, n, n).transpose();

  const VectorXd theta = draw_gaussian_precision(K, b, rng);
  return Eigen::Map<const MatrixXd>(theta.data(), n, R);
}

VectorXd draw_theta1_rank(const MatrixXd& Yeff, const MatrixXd& X,
                          const CPFactors& factors, int r, const SigmaPath& sp,
                          const FactorPrior& prior, Rng& rng) {
  const int n = factors.n(), R = factors.rank();
  const int T = static_cast<int>(Yeff.rows());
  if (r < 0 || r >= R) throw std::invalid_argument("draw_theta1_rank: bad rank index");
  const MatrixXd W = X * cp_companion(factors, 1);
  const MatrixXd mean = W * factors.theta1.transpose();  // T x n

  MatrixXd K = MatrixXd(prior.var1.segment(r * n, n).cwiseInverse().asDiagonal());
  VectorXd b = prior_term(prior.mean1.segment(r * n, n), prior.var1.segment(r * n, n));
  for (int t = 0; t < T; ++t) {
    const double w = W(t, r);
    const VectorXd ytilde =
        Yeff.row(t).transpose() - mean.row(t).transpose() + w * factors.theta1.col(r);
    K += w * w * sp.inv[t];
    b += w * (sp.inv[t] * ytilde);
  }
  return draw_gaussian_precision(K, b, rng);
}

RegressorMap::RegressorMap(const VarDataset& ds, const CPFactors& factors, int mode)
    : ds_(&ds), factors_(&factors), mode_(mode) {
  if (mode != 2 && mode != 3)
    throw std::invalid_argument("RegressorMap: mode must be 2 or 3");
  const int T = ds.T(), n = ds.n(), p = ds.p, R = factors.rank();
  const int rows = mode == 2 ? n : p;
  coef_.resize(static_cast<Eigen::Index>(T) * rows, R);
  for (int t = 0; t < T; ++t) {
    const MatrixXd xt = ds.XTensor.slice1(t);  // n x p
    if (mode == 2) {
      coef_.middleRows(static_cast<Eigen::Index>(t) * rows, rows) = xt * factors.theta3;
    } else {
      coef_.middleRows(static_cast<Eigen::Index>(t) * rows, rows) =
          xt.transpose() * factors.theta2;
    }
  }
}

int RegressorMap::theta_dim() const {
  const int rows = mode_ == 2 ? factors_->n() : factors_->p();
  return rows * factors_->rank();
}

MatrixXd RegressorMap::Zt(int t) const {
  const int n = factors_->n(), R = factors_->rank();
  const int rows = mode_ == 2 ? n : factors_->p();
  const auto C = coef_.middleRows(static_cast<Eigen::Index>(t) * rows, rows);
  MatrixXd Z = MatrixXd::Zero(n, rows * R);
  for (int j = 0; j < rows; ++j)
    for (int r = 0; r < R; ++r) Z.col(j * R + r) = C(j, r) * factors_->theta1.col(r);
  return Z;
}

MatrixXd RegressorMap::apply(const VectorXd& theta) const {
  const int T = ds_->T(), R = factors_->rank();
  const int rows = mode_ == 2 ? factors_->n() : factors_->p();
  if (theta.size() != theta_dim())
    throw std::invalid_argument("RegressorMap::apply: theta length mismatch");
  const Eigen::Map<const MatrixXd> Theta(theta.data(), R, rows);  // col j = row j of factor
  MatrixXd mean(T, factors_->n());
  VectorXd m(R);
  for (int t = 0; t < T; ++t) {
    const auto C = coef_.middleRows(static_cast<Eigen::Index>(t) * rows, rows);
    for (int r = 0; r < R; ++r) m[r] = C.col(r).dot(Theta.row(r).transpose());
    mean.row(t) = (factors_->theta1 * m).transpose();
  }
  return mean;
}

void RegressorMap::accumulate(const MatrixXd& Yeff, const SigmaPath& sp,
                              MatrixXd& K, VectorXd& b) const {
  const int T = ds_->T();
  for (int t = 0; t < T; ++t) {
    const MatrixXd Z = Zt(t);
    const MatrixXd SiZ = sp.inv[t] * Z;
    K.noalias() += Z.transpose() * SiZ;
    b.noalias() += SiZ.transpose() * Yeff.row(t).transpose();
  }
}

RegressorMap build_theta2_regressors(const VarDataset& ds, const CPFactors& factors) {
  return RegressorMap(ds, factors, 2);
}

RegressorMap build_theta3_regressors(const VarDataset& ds, const CPFactors& factors) {
  return RegressorMap(ds, factors, 3);
}

namespace {

// Shared by theta2 (mode 2) and theta3 (mode 3): the two conditionals have
// the same shape with the per-t coefficient slices swapped.
MatrixXd draw_row_stacked(const MatrixXd& Yeff, const VarDataset& ds,
                          const CPFactors& factors, const SigmaPath& sp,
                          const VectorXd& prior_mean, const VectorXd& prior_var,
                          Rng& rng, SamplerMode mode, int tensor_mode) {
  const int T = ds.T(), n = factors.n(), R = factors.rank();
  const int rows = tensor_mode == 2 ? n : factors.p();
  const MatrixXd& current = tensor_mode == 2 ? factors.theta2 : factors.theta3;
  RegressorMap map(ds, factors, tensor_mode);

  if (mode == SamplerMode::JointBlock) {
    MatrixXd K = MatrixXd(prior_var.cwiseInverse().asDiagonal());
    VectorXd b = prior_term(prior_mean, prior_var);
    map.accumulate(Yeff, sp, K, b);
    const VectorXd theta = draw_gaussian_precision(K, b, rng);
    MatrixXd out(rows, R);
    for (int j = 0; j < rows; ++j)
      for (int r = 0; r < R; ++r) out(j, r) = theta[j * R + r];
    return out;
  }

  // per-rank sweep; the running conditional mean is adjusted after each rank
  MatrixXd out = current;
  VectorXd m(R);
  MatrixXd mean(T, n);
  std::vector<MatrixXd> C(T);  // per-t coefficient slices, rows x R
  for (int t = 0; t < T; ++t) {
    const MatrixXd xt = ds.XTensor.slice1(t);
    C[t] = tensor_mode == 2 ? MatrixXd(xt * factors.theta3)
                            : MatrixXd(xt.transpose() * factors.theta2);
    for (int r = 0; r < R; ++r) m[r] = C[t].col(r).dot(out.col(r));
    mean.row(t) = (factors.theta1 * m).transpose();
  }
  for (int r = 0; r < R; ++r) {
    VectorXd pv(rows), pm(rows);
    for (int j = 0; j < rows; ++j) {
      pv[j] = prior_var[j * R + r];
      pm[j] = prior_mean[j * R + r];
    }
    MatrixXd K = MatrixXd(pv.cwiseInverse().asDiagonal());
    VectorXd b = pm.cwiseQuotient(pv);
    for (int t = 0; t < T; ++t) {
      const VectorXd c = C[t].col(r);
      const VectorXd si_th1 = sp.inv[t] * factors.theta1.col(r);
      const double g = factors.theta1.col(r).dot(si_th1);
      const VectorXd ytilde = Yeff.row(t).transpose() - mean.row(t).transpose() +
                              (c.dot(out.col(r))) * factors.theta1.col(r);
      K.noalias() += g * c * c.transpose();
      b.noalias() += c * si_th1.dot(ytilde);
    }
    const VectorXd fresh = draw_gaussian_precision(K, b, rng);
    for (int t = 0; t < T; ++t) {
      mean.row(t) +=
          (C[t].col(r).dot(fresh - out.col(r))) * factors.theta1.col(r).transpose();
    }
    out.col(r) = fresh;
  }
  return out;
}

}  // namespace

MatrixXd draw_theta2(const MatrixXd& Yeff, const VarDataset& ds,
                     const CPFactors& factors, const SigmaPath& sp,
                     const FactorPrior& prior, Rng& rng, SamplerMode mode) {
  return draw_row_stacked(Yeff, ds, factors, sp, prior.mean2, prior.var2, rng,
                          resolve_mode(mode, factors.n(), factors.rank()), 2);
}

MatrixXd draw_theta3(const MatrixXd& Yeff, const VarDataset& ds,
                     const CPFactors& factors, const SigmaPath& sp,
                     const FactorPrior& prior, Rng& rng, SamplerMode mode) {
  return draw_row_stacked(Yeff, ds, factors, sp, prior.mean3, prior.var3, rng,
                          resolve_mode(mode, factors.n(), factors.rank()), 3);
}

VectorXd draw_intercept(const MatrixXd& Y, const MatrixXd& X,
                        const MatrixXd& A_lags, const SigmaPath& sp,
                        double prior_var, Rng& rng) {
  const int T = static_cast<int>(Y.rows());
  const int n = static_cast<int>(Y.cols());
  MatrixXd K = MatrixXd::Identity(n, n) / prior_var;
  VectorXd b = VectorXd::Zero(n);
  const MatrixXd resid = Y - X * A_lags;
  for (int t = 0; t < T; ++t) {
    K += sp.inv[t];
    b += sp.inv[t] * resid.row(t).transpose();
  }
  return draw_gaussian_precision(K, b, rng);
}

MatrixXd compose_A(const CPFactors& factors, const VectorXd& intercept) {
  const MatrixXd A_lags = cp_matricized(factors, 1).transpose();  // np x n
  if (intercept.size() == 0) return A_lags;
  MatrixXd A(A_lags.rows() + 1, A_lags.cols());
  A.topRows(A_lags.rows()) = A_lags;
  A.bottomRows(1) = intercept.transpose();
  return A;
}

CPFactors init_factors(const VarDataset& ds, int R, const FactorPrior& prior, Rng& rng) {
  const int n = ds.n(), p = ds.p, T = ds.T();
  CPFactors f;
  f.theta3 = MatrixXd::Constant(p, R, 1.0 / p);
  if (T > n * p) {
    // rank-R truncated SVD of the LS estimate, summed over lags
    const MatrixXd XtX = ds.X.transpose() * ds.X +
                         1e-8 * MatrixXd::Identity(n * p, n * p);
    const MatrixXd A_ls = XtX.ldlt().solve(ds.X.transpose() * ds.Y);  // np x n
    MatrixXd N = MatrixXd::Zero(n, n);
    for (int l = 0; l < p; ++l) N += A_ls.middleRows(l * n, n).transpose();
    Eigen::JacobiSVD<MatrixXd> svd(N, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.theta1.resize(n, R);
    f.theta2.resize(n, R);
    for (int r = 0; r < R; ++r) {
      const double s = r < svd.singularValues().size()
                           ? std::sqrt(svd.singularValues()[r])
                           : 0.0;
      f.theta1.col(r) = s * svd.matrixU().col(r % n);
      f.theta2.col(r) = s * svd.matrixV().col(r % n);
    }
  } else {
    f.theta1.resize(n, R);
    f.theta2.resize(n, R);
    for (int r = 0; r < R; ++r) {
      for (int i = 0; i < n; ++i) {
        f.theta1(i, r) = draw_normal(rng, prior.mean1[r * n + i],
                                     std::sqrt(prior.var1[r * n + i]));
        f.theta2(i, r) = draw_normal(rng, prior.mean2[i * R + r],
                                     std::sqrt(prior.var2[i * R + r]));
      }
    }
  }
  return f;
}

VolatilityState init_volatility(VolRegime regime, const MatrixXd& U0) {
  const int T = static_cast<int>(U0.rows());
  const int n = static_cast<int>(U0.cols());
  const MatrixXd omega0 = U0.transpose() * U0 / std::max(T, 1) +
                          0.1 * MatrixXd::Identity(n, n);
  switch (regime) {
    case VolRegime::Homoskedastic:
      return Homoskedastic{omega0};
    case VolRegime::CommonSV:
      return CommonSV{VectorXd::Zero(T), 0.95, 0.04, omega0};
    case VolRegime::CholeskySV: {
      CholeskySV sv;
      sv.mu.resize(n);
      for (int i = 0; i < n; ++i)
        sv.mu[i] = std::log(std::max(omega0(i, i), 1e-8));
      sv.H = sv.mu.transpose().replicate(T, 1);
      sv.phi = VectorXd::Constant(n, 0.95);
      sv.sigma2 = VectorXd::Constant(n, 0.04);
      sv.B0 = MatrixXd::Identity(n, n);
      return sv;
    }
  }
  throw std::logic_error("init_volatility: unknown regime");
}

void gibbs_sweep(const VarDataset& ds, const McmcConfig& cfg,
                 const FactorPrior& fprior, const VolatilityPriors& vprior,
                 CPFactors& factors, VolatilityState& vol, VectorXd& intercept,
                 Rng& rng, VolDiagnostics* vdiag, BlockTimings* timings) {
  const SamplerMode mode = resolve_mode(cfg.mode, ds.n(), cfg.rank);
  const SigmaPath sp = build_sigma_path(vol, ds.T());

  MatrixXd Yeff = ds.Y;
  if (ds.intercept) Yeff.rowwise() -= intercept.transpose();

  const auto t0 = std::chrono::steady_clock::now();
  if (mode == SamplerMode::JointBlock) {
    factors.theta1 = draw_theta1_joint(Yeff, ds.X, factors, sp, fprior, rng);
  } else {
    for (int r = 0; r < factors.rank(); ++r)
      factors.theta1.col(r) = draw_theta1_rank(Yeff, ds.X, factors, r, sp, fprior, rng);
  }
  factors.theta2 = draw_theta2(Yeff, ds, factors, sp, fprior, rng, mode);
  factors.theta3 = draw_theta3(Yeff, ds, factors, sp, fprior, rng, mode);
  if (ds.intercept) {
    intercept = draw_intercept(ds.Y, ds.X, cp_matricized(factors, 1).transpose(),
                               sp, cfg.intercept_var, rng);
  }
  if (timings) timings->theta_secs += seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  const MatrixXd U = residuals(ds, compose_A(factors, ds.intercept ? intercept : VectorXd()));
  vol = update_volatility(vol, U, vprior, rng, vdiag);
  if (timings) timings->vol_secs += seconds_since(t1);
}

PosteriorDraws run_chain(const VarDataset& ds, const McmcConfig& cfg,
                         const FactorPrior& fprior, const VolatilityPriors& vprior) {
  cfg.validate();
  Rng rng = substream(cfg.seed, 0);

  CPFactors factors = init_factors(ds, cfg.rank, fprior, rng);
  VectorXd intercept = ds.intercept ? VectorXd::Zero(ds.n()) : VectorXd();
  const MatrixXd U0 =
      residuals(ds, compose_A(factors, ds.intercept ? intercept : VectorXd()));
  VolatilityState vol = init_volatility(cfg.regime, U0);

  PosteriorDraws out;
  out.draws.reserve(cfg.draws);
  const int total = cfg.burn_in + cfg.draws * cfg.thin;
  for (int sweep = 0; sweep < total; ++sweep) {
    try {
      gibbs_sweep(ds, cfg, fprior, vprior, factors, vol, intercept, rng,
                  &out.vol_diag, &out.timings);
    } catch (const std::exception& e) {
      throw std::runtime_error("run_chain: sweep " + std::to_string(sweep) +
                               " failed: " + e.what());
    }
    const int post = sweep - cfg.burn_in + 1;
    if (post > 0 && post % cfg.thin == 0) {
      out.draws.push_back(Draw{factors,
                               compose_A(factors, ds.intercept ? intercept : VectorXd()),
                               vol, intercept});
    }
  }
  return out;
}

}  // namespace tvar
