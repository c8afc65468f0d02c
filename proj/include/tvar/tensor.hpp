#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Dense third-order tensor. Flat storage is column-major generalized:
// element (i1,i2,i3), 0-based, lives at i1 + d1*i2 + d1*d2*i3, so the first
// index runs fastest and the mode-1 matricization is a plain reshape.
class Tensor3 {
 public:
  Tensor3(int d1, int d2, int d3);
  Tensor3(int d1, int d2, int d3, std::vector<double> values);

  int dim(int k) const { return dims_[k - 1]; }
  const std::vector<double>& values() const { return values_; }

  double operator()(int i1, int i2, int i3) const {
    return values_[flat_index(i1, i2, i3)];
  }
  double& operator()(int i1, int i2, int i3) {
    return values_[flat_index(i1, i2, i3)];
  }

  std::size_t flat_index(int i1, int i2, int i3) const;

  // Slice t along mode 1, returned as the d2 x d3 matrix Z with
  // Z(i2,i3) = (*this)(t,i2,i3).
  MatrixXd slice1(int i1) const;

  bool same_dims(const Tensor3& other) const;

 private:
  int dims_[3];
  std::vector<double> values_;
};

// CP factor matrices of a rank-R decomposition of an (n,n,p) tensor.
// theta1, theta2 are n x R; theta3 is p x R.
struct CPFactors {
  MatrixXd theta1;
  MatrixXd theta2;
  MatrixXd theta3;

  int rank() const { return static_cast<int>(theta1.cols()); }
  int n() const { return static_cast<int>(theta1.rows()); }
  int p() const { return static_cast<int>(theta3.rows()); }

  void validate() const;  // throws std::invalid_argument on mismatch
};

// Permutation satisfying apply_transpose(vec(Z)) == vec(Z') for every
// rows x cols matrix Z. Stored as an index map, never as a dense matrix.
class CommutationMatrix {
 public:
  CommutationMatrix(int rows, int cols);

  int size() const { return static_cast<int>(map_.size()); }

  // P' vec(Z) = vec(Z')
  VectorXd apply_transpose(const VectorXd& v) const;
  // P vec(W); inverse of apply_transpose
  VectorXd apply(const VectorXd& v) const;

  // map()[k] = l where (P' v)[l] = v[k]
  const std::vector<int>& map() const { return map_; }

 private:
  int rows_, cols_;
  std::vector<int> map_;
};

// A(i,j,k) = sum_r theta1(i,r) * theta2(j,r) * theta3(k,r)
Tensor3 cp_compose(const CPFactors& factors);

// Mode-k matricization: mode-1 of an (a,b,c) tensor is a x bc, mode-2 is
// b x ac, mode-3 is c x ab; the mode-2 column index is j = (i3-1)*a + i1
// (1-based). dematricize inverts it given the original dims.
MatrixXd matricize(const Tensor3& t, int mode);
Tensor3 dematricize(const MatrixXd& m, int mode, int d1, int d2, int d3);

// Column-wise Kronecker companions: Theta_{-1} = (theta3^r kron theta2^r)_r,
// Theta_{-2} = (theta3^r kron theta1^r)_r, Theta_{-3} = (theta2^r kron theta1^r)_r.
MatrixXd cp_companion(const CPFactors& factors, int mode);

// Theta_k * Theta_{-k}', equal to matricize(cp_compose(factors), k) without
// forming the tensor.
MatrixXd cp_matricized(const CPFactors& factors, int mode);

CommutationMatrix commutation(int n, int p);

}  // namespace tvar
