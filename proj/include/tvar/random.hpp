#pragma once

#include <Eigen/Dense>
#include <random>

namespace tvar {

using Rng = std::mt19937_64;

inline double draw_normal(Rng& rng, double mean = 0.0, double sd = 1.0) {
  std::normal_distribution<double> d(mean, sd);
  return d(rng);
}

inline double draw_uniform(Rng& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(rng);
}

inline Eigen::VectorXd draw_std_normal(int n, Rng& rng) {
  Eigen::VectorXd z(n);
  std::normal_distribution<double> d(0.0, 1.0);
  for (int i = 0; i < n; ++i) z[i] = d(rng);
  return z;
}

inline double draw_gamma(double shape, double scale, Rng& rng) {
  std::gamma_distribution<double> d(shape, scale);
  return d(rng);
}

// InverseGamma(shape, rate): density ∝ x^{-shape-1} e^{-rate/x}
inline double draw_inv_gamma(double shape, double rate, Rng& rng) {
  return rate / draw_gamma(shape, 1.0, rng);
}

// N(mean, sd^2) truncated to (lo, hi), by rejection. Intended for
// stationarity-truncated AR(1) proposals where the acceptance rate is high.
double draw_truncated_normal(Rng& rng, double mean, double sd, double lo, double hi);

// Wishart(df, scale) via the Bartlett decomposition; df > dim - 1.
Eigen::MatrixXd draw_wishart(double df, const Eigen::MatrixXd& scale, Rng& rng);

// InverseWishart(df, scale): X ~ W(df, scale^{-1}) then X^{-1}.
Eigen::MatrixXd draw_inv_wishart(double df, const Eigen::MatrixXd& scale, Rng& rng);

// Draws an index from unnormalized weights.
int draw_discrete(const Eigen::VectorXd& weights, Rng& rng);

// Derive an independent stream from a base seed and a stream label;
// used so parallel workers reproduce the sequential results.
Rng substream(std::uint64_t seed, std::uint64_t stream);

}  // namespace tvar
