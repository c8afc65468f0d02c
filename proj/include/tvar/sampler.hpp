#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tvar/tensor.hpp"
#include "tvar/var_data.hpp"
#include "tvar/volatility.hpp"

namespace tvar {

// Independent Gaussian priors on the stacked factor vectors. theta1 stacks
// the columns of Theta1 (index r*n + i); theta2 and theta3 stack the rows
// of Theta2 and Theta3 (index j*R + r). Covariances are diagonal.
struct FactorPrior {
  VectorXd mean1, mean2, mean3;
  VectorXd var1, var2, var3;

  // Zero means; variance 1 for theta1/theta2, 10 for theta3.
  static FactorPrior defaults(int n, int p, int R);
};

enum class SamplerMode { Auto, JointBlock, PerRank };
enum class VolRegime { Homoskedastic, CommonSV, CholeskySV };

struct McmcConfig {
  int burn_in = 1000;
  int draws = 1000;
  int thin = 1;
  int rank = 1;
  SamplerMode mode = SamplerMode::Auto;
  VolRegime regime = VolRegime::Homoskedastic;
  std::uint64_t seed = 1;
  double intercept_var = 10.0;

  void validate() const;
};

struct Draw {
  CPFactors factors;
  MatrixXd A;  // np x n, or (np+1) x n with the intercept row last
  VolatilityState vol;
  VectorXd intercept;  // empty when no intercept
};

struct BlockTimings {
  double theta_secs = 0.0;
  double vol_secs = 0.0;
};

struct PosteriorDraws {
  std::vector<Draw> draws;
  VolDiagnostics vol_diag;
  BlockTimings timings;
};

// --- conditional draws (Yeff = Y minus any intercept contribution) ---

MatrixXd draw_theta1_joint(const MatrixXd& Yeff, const MatrixXd& X,
                           const CPFactors& factors, const SigmaPath& sp,
                           const FactorPrior& prior, Rng& rng);

VectorXd draw_theta1_rank(const MatrixXd& Yeff, const MatrixXd& X,
                          const CPFactors& factors, int r, const SigmaPath& sp,
                          const FactorPrior& prior, Rng& rng);

// Lazily evaluated regressor map W with vec(Y') = W theta + vec(U'),
// theta the row-stacked factor vector of the given mode (2 or 3).
// Selector products are row/column slices of the lag tensor, never dense
// Kronecker products.
class RegressorMap {
 public:
  RegressorMap(const VarDataset& ds, const CPFactors& factors, int mode);

  int theta_dim() const;
  // n x theta_dim design block for observation t: mean_t = Zt(t) * theta
  MatrixXd Zt(int t) const;
  // Conditional means as a T x n matrix (row t = mean_t').
  MatrixXd apply(const VectorXd& theta) const;
  // Accumulates K += sum_t Zt' Sigma_t^{-1} Zt and b += sum_t Zt' Sigma_t^{-1} y_t.
  void accumulate(const MatrixXd& Yeff, const SigmaPath& sp, MatrixXd& K,
                  VectorXd& b) const;

 private:
  const VarDataset* ds_;
  const CPFactors* factors_;
  int mode_;
  MatrixXd coef_;  // per-t slices X_t Theta3 (mode 2) or X_t' Theta2 (mode 3), stacked
};

RegressorMap build_theta2_regressors(const VarDataset& ds, const CPFactors& factors);
RegressorMap build_theta3_regressors(const VarDataset& ds, const CPFactors& factors);

MatrixXd draw_theta2(const MatrixXd& Yeff, const VarDataset& ds,
                     const CPFactors& factors, const SigmaPath& sp,
                     const FactorPrior& prior, Rng& rng, SamplerMode mode);

MatrixXd draw_theta3(const MatrixXd& Yeff, const VarDataset& ds,
                     const CPFactors& factors, const SigmaPath& sp,
                     const FactorPrior& prior, Rng& rng, SamplerMode mode);

VectorXd draw_intercept(const MatrixXd& Y, const MatrixXd& X,
                        const MatrixXd& A_lags, const SigmaPath& sp,
                        double prior_var, Rng& rng);

// Coefficient matrix (design_cols x n) from factors plus optional intercept.
MatrixXd compose_A(const CPFactors& factors, const VectorXd& intercept);

SamplerMode resolve_mode(SamplerMode mode, int n, int R);

CPFactors init_factors(const VarDataset& ds, int R, const FactorPrior& prior, Rng& rng);
VolatilityState init_volatility(VolRegime regime, const MatrixXd& U0);

// One Gibbs sweep in place: theta1 -> theta2 -> theta3 -> intercept ->
// volatility.
void gibbs_sweep(const VarDataset& ds, const McmcConfig& cfg,
                 const FactorPrior& fprior, const VolatilityPriors& vprior,
                 CPFactors& factors, VolatilityState& vol, VectorXd& intercept,
                 Rng& rng, VolDiagnostics* vdiag = nullptr,
                 BlockTimings* timings = nullptr);

// Full Gibbs chain: theta1 -> theta2 -> theta3 -> intercept -> volatility.
PosteriorDraws run_chain(const VarDataset& ds, const McmcConfig& cfg,
                         const FactorPrior& fprior, const VolatilityPriors& vprior);

}  // namespace tvar
