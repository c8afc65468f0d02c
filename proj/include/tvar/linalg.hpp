#pragma once

#include <Eigen/Dense>

#include "tvar/random.hpp"

namespace tvar {

// Cholesky of a precision matrix with escalating diagonal jitter
// (1e-10 .. 1e-6 times the mean diagonal) before giving up.
Eigen::LLT<Eigen::MatrixXd> chol_precision(Eigen::MatrixXd K);

// Draw from N(K^{-1} b, K^{-1}) given the precision K and linear term b.
Eigen::VectorXd draw_gaussian_precision(const Eigen::MatrixXd& K,
                                        const Eigen::VectorXd& b, Rng& rng);

// Symmetric positive definite tridiagonal matrix, O(T) factor/solve/sample.
// Used for AR(1) log-volatility precisions.
class SymTridiag {
 public:
  // diag has length T, off has length T-1 (subdiagonal).
  SymTridiag(Eigen::VectorXd diag, Eigen::VectorXd off);

  int size() const { return static_cast<int>(diag_.size()); }
  const Eigen::VectorXd& diag() const { return diag_; }
  const Eigen::VectorXd& off() const { return off_; }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;

  // Factor as L D L' (unit-lower bidiagonal L, positive D); throws if not PD.
  void factor();
  bool factored() const { return factored_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  double log_det() const;
  // mean = solve(b), draw from N(mean, K^{-1})
  Eigen::VectorXd sample(const Eigen::VectorXd& b, Rng& rng) const;
  // log N(x; solve(b), K^{-1})
  double log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const;

 private:
  Eigen::VectorXd diag_, off_;
  Eigen::VectorXd ld_, loff_;  // D and subdiagonal of L
  bool factored_ = false;
};

// AR(1) precision with stationary initialization: h_1 ~ N(0, s2/(1-phi^2)),
// h_t = phi h_{t-1} + N(0, s2). Result is the T x T prior precision of h.
SymTridiag ar1_precision(int T, double phi, double s2);

double log_normal_pdf(double x, double mean, double var);

}  // namespace tvar
