#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "tvar/random.hpp"

namespace tvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// u_t ~ N(0, Omega), constant over time.
struct Homoskedastic {
  MatrixXd omega;
};

// Sigma_t = e^{h_t} Omega; h_t a zero-mean stationary AR(1),
// h_1 ~ N(0, sigma_h2 / (1 - phi^2)).
struct CommonSV {
  VectorXd h;  // length T
  double phi = 0.95;
  double sigma_h2 = 0.04;
  MatrixXd omega;
};

// Sigma_t = B0^{-1} D_t B0^{-T}, D_t = diag(e^{h_{1,t}}, ..., e^{h_{n,t}}),
// h_{i,t} = mu_i + phi_i (h_{i,t-1} - mu_i) + N(0, sigma2_i),
// h_{i,1} ~ N(mu_i, sigma2_i / (1 - phi_i^2)). B0 unit lower triangular.
struct CholeskySV {
  MatrixXd H;  // T x n log-volatility paths
  VectorXd mu, phi, sigma2;
  MatrixXd B0;
};

using VolatilityState = std::variant<Homoskedastic, CommonSV, CholeskySV>;

struct VolatilityPriors {
  double phi_mean = 0.95;
  double phi_sd = 0.1;          // truncated to (-1, 1)
  double sig_shape = 5.0;       // sigma_h2, sigma2_i ~ InverseGamma(shape, rate)
  double sig_rate = 0.16;
  double mu_var = 10.0;         // mu_i ~ N(0, mu_var)
  double omega_df_delta = 3.0;  // Omega ~ InverseWishart(n + delta, I_n)
  double b0_var = 10.0;         // free B0 elements ~ N(0, b0_var)
};

struct VolDiagnostics {
  int h_proposals = 0;
  int h_accepts = 0;
  int phi_proposals = 0;
  int phi_accepts = 0;

  double h_accept_rate() const {
    return h_proposals ? static_cast<double>(h_accepts) / h_proposals : 0.0;
  }
};

// Offset inside log(eps^2 + offset) for the auxiliary-mixture step.
inline constexpr double kSvOffset = 1e-4;

// 10-component Gaussian mixture approximating the log chi^2_1 distribution
// (Omori, Chib, Shephard, Nakajima 2007).
struct AuxMixture {
  static const Eigen::Matrix<double, 10, 1>& weights();
  static const Eigen::Matrix<double, 10, 1>& means();
  static const Eigen::Matrix<double, 10, 1>& variances();
};

int state_T(const VolatilityState& state);
int state_n(const VolatilityState& state);

// Sigma_t for 0-based t in [0, T). Homoskedastic accepts any t.
MatrixXd sigma_at(const VolatilityState& state, int t);

// Per-t covariance, inverse and log-determinant, via triangular factorization.
struct SigmaPath {
  std::vector<MatrixXd> sigma;
  std::vector<MatrixXd> inv;
  VectorXd logdet;

  int T() const { return static_cast<int>(sigma.size()); }
};

SigmaPath build_sigma_path(const VolatilityState& state, int T);

// Conjugate inverse-Wishart update of Omega given residuals U (T x n).
Homoskedastic update_homoskedastic(const Homoskedastic& state, const MatrixXd& U,
                                   const VolatilityPriors& priors, Rng& rng);

// Gibbs update: h by mode-based independence MH on the full path with
// tridiagonal precision, phi by MH with a stationarity-truncated Gaussian
// proposal, sigma_h2 conjugate inverse-gamma, Omega conjugate
// inverse-Wishart on the rescaled residuals. With T = 0 returns a prior draw.
CommonSV update_common_sv(const CommonSV& state, const MatrixXd& U,
                          const VolatilityPriors& priors, Rng& rng,
                          VolDiagnostics* diag = nullptr);

// Gibbs update: each h_{i,.} path by the auxiliary-mixture method with a
// banded AR(1) precision, (mu_i, phi_i, sigma2_i) by conjugate/MH steps,
// free B0 elements row-by-row from Gaussian conditionals.
CholeskySV update_cholesky_sv(const CholeskySV& state, const MatrixXd& U,
                              const VolatilityPriors& priors, Rng& rng,
                              VolDiagnostics* diag = nullptr);

VolatilityState update_volatility(const VolatilityState& state, const MatrixXd& U,
                                  const VolatilityPriors& priors, Rng& rng,
                                  VolDiagnostics* diag = nullptr);

// Simulates the volatility law forward one path; returns Sigma_{T+1..T+h}.
std::vector<MatrixXd> forecast_sigma(const VolatilityState& state, int horizon, Rng& rng);

}  // namespace tvar
