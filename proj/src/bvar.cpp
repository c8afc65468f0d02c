#include "tvar/bvar.hpp"

#include <cmath>
#include <stdexcept>

#include "tvar/linalg.hpp"

namespace tvar {

VectorXd MinnesotaSpec::ar_residual_variances(const MatrixXd& Y, int ar_lags) {
  const int T = static_cast<int>(Y.rows());
  const int n = static_cast<int>(Y.cols());
  const int p = std::min(ar_lags, T - ar_lags > 2 ? ar_lags : 1);
  VectorXd s2(n);
  for (int i = 0; i < n; ++i) {
    const int Te = T - p;
    MatrixXd X(Te, p + 1);
    VectorXd y(Te);
    for (int t = 0; t < Te; ++t) {
      y[t] = Y(t + p, i);
      X(t, 0) = 1.0;
      for (int l = 1; l <= p; ++l) X(t, l) = Y(t + p - l, i);
    }
    const VectorXd beta = (X.transpose() * X +
                           1e-10 * MatrixXd::Identity(p + 1, p + 1))
                              .ldlt()
                              .solve(X.transpose() * y);
    const VectorXd e = y - X * beta;
    s2[i] = std::max(e.squaredNorm() / std::max(Te - p - 1, 1), 1e-12);
  }
  return s2;
}

ConjugatePosterior fit_niw(const MatrixXd& X, const MatrixXd& Y, const NiwPrior& prior,
                           bool intercept) {
  const int T = static_cast<int>(Y.rows());
  ConjugatePosterior post;
  post.Kp = prior.K0 + X.transpose() * X;
  post.A_hat = chol_precision(post.Kp).solve(prior.K0 * prior.A0 + X.transpose() * Y);
  post.nu = prior.nu0 + T;
  post.S = prior.S0 + Y.transpose() * Y + prior.A0.transpose() * prior.K0 * prior.A0 -
           post.A_hat.transpose() * post.Kp * post.A_hat;
  post.S = 0.5 * (post.S + post.S.transpose());
  post.intercept = intercept;
  return post;
}

ConjugatePosterior fit_conjugate(const VarDataset& ds, const MinnesotaSpec& spec) {
  if (ds.T() < 1) throw std::invalid_argument("fit_conjugate: empty dataset");
  if (spec.lambda2 <= 0.0)
    throw std::invalid_argument("fit_conjugate: lambda2 must be positive");
  const int n = ds.n(), p = ds.p;
  const VectorXd s2 =
      spec.s2.size() > 0 ? spec.s2 : MinnesotaSpec::ar_residual_variances(ds.Y);
  if (s2.size() != n || (s2.array() <= 0.0).any())
    throw std::invalid_argument("fit_conjugate: singular prior scale");

  const int k = ds.design_cols();
  VectorXd v0(k);
  for (int l = 1; l <= p; ++l)
    for (int j = 0; j < n; ++j)
      v0[(l - 1) * n + j] = spec.lambda2 / (std::pow(l, spec.lag_decay) * s2[j]);
  if (ds.intercept) v0[k - 1] = spec.intercept_var;

  NiwPrior prior{MatrixXd::Zero(k, n), MatrixXd(v0.cwiseInverse().asDiagonal()),
                 MatrixXd(s2.asDiagonal()), static_cast<double>(n) + 2.0};
  return fit_niw(ds.design(), ds.Y, prior, ds.intercept);
}

PosteriorDraws sample_posterior(const ConjugatePosterior& post, int M, Rng& rng) {
  const int k = static_cast<int>(post.A_hat.rows());
  const int n = static_cast<int>(post.A_hat.cols());
  const auto lltK = chol_precision(post.Kp);
  PosteriorDraws out;
  out.draws.reserve(M);
  for (int m = 0; m < M; ++m) {
    const MatrixXd sigma = draw_inv_wishart(post.nu, post.S, rng);
    MatrixXd Z(k, n);
    for (int j = 0; j < n; ++j) Z.col(j) = draw_std_normal(k, rng);
    const MatrixXd A = post.A_hat +
                       lltK.matrixU().solve(Z) * sigma.llt().matrixL().transpose();
    out.draws.push_back(Draw{CPFactors{}, A, Homoskedastic{sigma},
                             post.intercept ? VectorXd(A.row(k - 1)) : VectorXd()});
  }
  return out;
}

}  // namespace tvar
