#pragma once

#include "tvar/sampler.hpp"
#include "tvar/var_data.hpp"

namespace tvar {

// Minnesota prior in natural conjugate form: vec(A) | Sigma ~
// N(vec(A0), Sigma kron V0) with V0 diagonal, Sigma ~ IW(nu0, S0).
struct MinnesotaSpec {
  double lambda2 = 0.04;       // overall shrinkage
  double lag_decay = 2.0;      // prior variance scales by 1 / l^lag_decay
  double intercept_var = 100.0;
  VectorXd s2;                 // per-variable AR-residual variances; empty = fit AR(4)

  // s2 from univariate AR(ar_lags) least-squares residual variances.
  static VectorXd ar_residual_variances(const MatrixXd& Y, int ar_lags = 4);
};

struct NiwPrior {
  MatrixXd A0;
  MatrixXd K0;  // prior precision of A columns (V0^{-1})
  MatrixXd S0;
  double nu0 = 0.0;
};

struct ConjugatePosterior {
  MatrixXd A_hat;  // k x n posterior mean of A
  MatrixXd Kp;     // k x k posterior precision factor (V0^{-1} + X'X)
  MatrixXd S;      // posterior IW scale
  double nu = 0.0; // posterior IW degrees of freedom
  bool intercept = false;
};

// Exact matric-normal--inverse-Wishart posterior; no MCMC.
ConjugatePosterior fit_conjugate(const VarDataset& ds, const MinnesotaSpec& spec);

// Conjugate update for an arbitrary NIW prior; fit_conjugate builds the
// Minnesota prior and delegates here. Chaining posteriors as priors gives
// exact split-sample updating.
ConjugatePosterior fit_niw(const MatrixXd& X, const MatrixXd& Y,
                           const NiwPrior& prior, bool intercept = false);

inline NiwPrior as_prior(const ConjugatePosterior& post) {
  return NiwPrior{post.A_hat, post.Kp, post.S, post.nu};
}

// M exact draws: Sigma ~ IW(nu, S), A | Sigma matric normal. Draws carry a
// Homoskedastic volatility state so they share the forecast interfaces.
PosteriorDraws sample_posterior(const ConjugatePosterior& post, int M, Rng& rng);

}  // namespace tvar
