#include "tvar/linalg.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tvar {

Eigen::LLT<Eigen::MatrixXd> chol_precision(Eigen::MatrixXd K) {
  const double scale = K.diagonal().mean();
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  double jitter = 1e-10;
  while (llt.info() != Eigen::Success && jitter <= 1e-6) {
    K.diagonal().array() += jitter * scale;
    llt.compute(K);
    jitter *= 100.0;
  }
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("chol_precision: matrix not SPD after jitter");
  return llt;
}

Eigen::VectorXd draw_gaussian_precision(const Eigen::MatrixXd& K,
                                        const Eigen::VectorXd& b, Rng& rng) {
  const auto llt = chol_precision(K);
  const Eigen::VectorXd mean = llt.solve(b);
  const Eigen::VectorXd z = draw_std_normal(static_cast<int>(b.size()), rng);
  // x = mean + L'^{-1} z has covariance K^{-1}
  return mean + llt.matrixU().solve(z);
}

SymTridiag::SymTridiag(Eigen::VectorXd diag, Eigen::VectorXd off)
    : diag_(std::move(diag)), off_(std::move(off)) {
  if (off_.size() != diag_.size() - 1)
    throw std::invalid_argument("SymTridiag: off length must be T-1");
}

Eigen::VectorXd SymTridiag::multiply(const Eigen::VectorXd& x) const {
  const int T = size();
  Eigen::VectorXd y = diag_.cwiseProduct(x);
  for (int t = 0; t + 1 < T; ++t) {
    y[t] += off_[t] * x[t + 1];
    y[t + 1] += off_[t] * x[t];
  }
  return y;
}

void SymTridiag::factor() {
  const int T = size();
  ld_.resize(T);
  loff_.resize(T - 1);
  double d = diag_[0];
  for (int t = 0; t < T; ++t) {
    if (d <= 0.0) throw std::runtime_error("SymTridiag: not positive definite");
    ld_[t] = d;
    if (t + 1 < T) {
      loff_[t] = off_[t] / d;
      d = diag_[t + 1] - off_[t] * loff_[t];
    }
  }
  factored_ = true;
}

Eigen::VectorXd SymTridiag::solve(const Eigen::VectorXd& b) const {
  const int T = size();
  Eigen::VectorXd x(T);
  x[0] = b[0];
  for (int t = 1; t < T; ++t) x[t] = b[t] - loff_[t - 1] * x[t - 1];
  for (int t = 0; t < T; ++t) x[t] /= ld_[t];
  for (int t = T - 2; t >= 0; --t) x[t] -= loff_[t] * x[t + 1];
  return x;
}

double SymTridiag::log_det() const { return ld_.array().log().sum(); }

Eigen::VectorXd SymTridiag::sample(const Eigen::VectorXd& b, Rng& rng) const {
  const int T = size();
  const Eigen::VectorXd mean = solve(b);
  // x = mean + L'^{-1} D^{-1/2} z
  Eigen::VectorXd x = draw_std_normal(T, rng).cwiseQuotient(ld_.cwiseSqrt());
  for (int t = T - 2; t >= 0; --t) x[t] -= loff_[t] * x[t + 1];
  return mean + x;
}

double SymTridiag::log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
  const Eigen::VectorXd dev = x - solve(b);
  const double quad = dev.dot(multiply(dev));
  return 0.5 * (log_det() - size() * std::log(2.0 * std::numbers::pi) - quad);
}

SymTridiag ar1_precision(int T, double phi, double s2) {
  Eigen::VectorXd d(T), off(std::max(T - 1, 0));
  if (T == 1) {
    d[0] = (1.0 - phi * phi) / s2;
    return SymTridiag(d, off);
  }
  d.setConstant((1.0 + phi * phi) / s2);
  d[0] = 1.0 / s2;  // (1-phi^2)/s2 from the stationary init plus phi^2/s2
  d[T - 1] = 1.0 / s2;
  off.setConstant(-phi / s2);
  return SymTridiag(d, off);
}

double log_normal_pdf(double x, double mean, double var) {
  const double dev = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + dev * dev / var);
}

}  // namespace tvar
