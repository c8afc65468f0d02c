#include "tvar/random.hpp"

#include <stdexcept>

namespace tvar {

double draw_truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double x = draw_normal(rng, mean, sd);
    if (x > lo && x < hi) return x;
  }
  throw std::runtime_error("draw_truncated_normal: rejection sampling stalled");
}

Eigen::MatrixXd draw_wishart(double df, const Eigen::MatrixXd& scale, Rng& rng) {
  const int d = static_cast<int>(scale.rows());
  if (df <= d - 1) throw std::invalid_argument("draw_wishart: df too small");
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("draw_wishart: scale not SPD");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    A(i, i) = std::sqrt(draw_gamma(0.5 * (df - i), 2.0, rng));
    for (int j = 0; j < i; ++j) A(i, j) = draw_normal(rng);
  }
  const Eigen::MatrixXd LA = llt.matrixL() * A;
  return LA * LA.transpose();
}

Eigen::MatrixXd draw_inv_wishart(double df, const Eigen::MatrixXd& scale, Rng& rng) {
  const Eigen::MatrixXd W =
      draw_wishart(df, scale.llt().solve(Eigen::MatrixXd::Identity(scale.rows(), scale.cols())), rng);
  return W.llt().solve(Eigen::MatrixXd::Identity(W.rows(), W.cols()));
}

int draw_discrete(const Eigen::VectorXd& weights, Rng& rng) {
  const double total = weights.sum();
  double u = draw_uniform(rng) * total;
  for (int i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u <= 0.0) return i;
  }
  return static_cast<int>(weights.size()) - 1;
}

Rng substream(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 mixing of (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return Rng(z);
}

}  // namespace tvar
