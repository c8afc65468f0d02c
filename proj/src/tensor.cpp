#include "tvar/tensor.hpp"

#include <stdexcept>
#include <string>

namespace tvar {

Tensor3::Tensor3(int d1, int d2, int d3) : dims_{d1, d2, d3} {
  if (d1 < 1 || d2 < 1 || d3 < 1) {
    throw std::invalid_argument("Tensor3: dims must be positive");
  }
  values_.assign(static_cast<std::size_t>(d1) * d2 * d3, 0.0);
}

Tensor3::Tensor3(int d1, int d2, int d3, std::vector<double> values)
    : dims_{d1, d2, d3}, values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(d1) * d2 * d3) {
    throw std::invalid_argument("Tensor3: values length != d1*d2*d3");
  }
}

std::size_t Tensor3::flat_index(int i1, int i2, int i3) const {
  return static_cast<std::size_t>(i1) +
         static_cast<std::size_t>(dims_[0]) * (i2 + static_cast<std::size_t>(dims_[1]) * i3);
}

MatrixXd Tensor3::slice1(int i1) const {
  MatrixXd z(dims_[1], dims_[2]);
  for (int k = 0; k < dims_[2]; ++k)
    for (int j = 0; j < dims_[1]; ++j) z(j, k) = (*this)(i1, j, k);
  return z;
}

bool Tensor3::same_dims(const Tensor3& other) const {
  return dims_[0] == other.dims_[0] && dims_[1] == other.dims_[1] &&
         dims_[2] == other.dims_[2];
}

void CPFactors::validate() const {
  if (theta1.cols() != theta2.cols() || theta1.cols() != theta3.cols()) {
    throw std::invalid_argument("CPFactors: factor matrices disagree on rank");
  }
  if (theta1.rows() != theta2.rows()) {
    throw std::invalid_argument("CPFactors: theta1 and theta2 row counts differ");
  }
  if (theta1.cols() < 1) {
    throw std::invalid_argument("CPFactors: rank must be positive");
  }
}

CommutationMatrix::CommutationMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), map_(static_cast<std::size_t>(rows) * cols) {
  // k = (i-1)*rows + j, l = (j-1)*cols + i for i in 1..cols, j in 1..rows
  for (int i = 1; i <= cols; ++i) {
    for (int j = 1; j <= rows; ++j) {
      map_[(i - 1) * rows + j - 1] = (j - 1) * cols + i - 1;
    }
  }
}

VectorXd CommutationMatrix::apply_transpose(const VectorXd& v) const {
  VectorXd out(v.size());
  for (int k = 0; k < size(); ++k) out[map_[k]] = v[k];
  return out;
}

VectorXd CommutationMatrix::apply(const VectorXd& v) const {
  VectorXd out(v.size());
  for (int k = 0; k < size(); ++k) out[k] = v[map_[k]];
  return out;
}

Tensor3 cp_compose(const CPFactors& factors) {
  factors.validate();
  const int n = factors.n(), p = factors.p(), R = factors.rank();
  Tensor3 t(n, n, p);
  for (int r = 0; r < R; ++r) {
    for (int k = 0; k < p; ++k) {
      const double t3 = factors.theta3(k, r);
      for (int j = 0; j < n; ++j) {
        const double t23 = factors.theta2(j, r) * t3;
        for (int i = 0; i < n; ++i) {
          t(i, j, k) += factors.theta1(i, r) * t23;
        }
      }
    }
  }
  return t;
}

MatrixXd matricize(const Tensor3& t, int mode) {
  const int d1 = t.dim(1), d2 = t.dim(2), d3 = t.dim(3);
  switch (mode) {
    case 1: {
      return Eigen::Map<const MatrixXd>(t.values().data(), d1, d2 * d3);
    }
    case 2: {
      MatrixXd m(d2, d1 * d3);
      for (int i3 = 0; i3 < d3; ++i3)
        for (int i2 = 0; i2 < d2; ++i2)
          for (int i1 = 0; i1 < d1; ++i1) m(i2, i3 * d1 + i1) = t(i1, i2, i3);
      return m;
    }
    case 3: {
      MatrixXd m(d3, d1 * d2);
      for (int i3 = 0; i3 < d3; ++i3)
        for (int i2 = 0; i2 < d2; ++i2)
          for (int i1 = 0; i1 < d1; ++i1) m(i3, i2 * d1 + i1) = t(i1, i2, i3);
      return m;
    }
    default:
      throw std::invalid_argument("matricize: mode must be 1, 2 or 3");
  }
}

Tensor3 dematricize(const MatrixXd& m, int mode, int d1, int d2, int d3) {
  Tensor3 t(d1, d2, d3);
  // Inverse of the column index maps. Written as mod(j,T) in 1-based
  // notation, with a multiple of T reading as T, not 0; the 0-based loops
  // below avoid the ambiguity entirely.
  switch (mode) {
    case 1:
      if (m.rows() != d1 || m.cols() != d2 * d3)
        throw std::invalid_argument("dematricize: shape mismatch");
      for (int i3 = 0; i3 < d3; ++i3)
        for (int i2 = 0; i2 < d2; ++i2)
          for (int i1 = 0; i1 < d1; ++i1) t(i1, i2, i3) = m(i1, i3 * d2 + i2);
      break;
    case 2:
      if (m.rows() != d2 || m.cols() != d1 * d3)
        throw std::invalid_argument("dematricize: shape mismatch");
      for (int i3 = 0; i3 < d3; ++i3)
        for (int i2 = 0; i2 < d2; ++i2)
          for (int i1 = 0; i1 < d1; ++i1) t(i1, i2, i3) = m(i2, i3 * d1 + i1);
      break;
    case 3:
      if (m.rows() != d3 || m.cols() != d1 * d2)
        throw std::invalid_argument("dematricize: shape mismatch");
      for (int i3 = 0; i3 < d3; ++i3)
        for (int i2 = 0; i2 < d2; ++i2)
          for (int i1 = 0; i1 < d1; ++i1) t(i1, i2, i3) = m(i3, i2 * d1 + i1);
      break;
    default:
      throw std::invalid_argument("dematricize: mode must be 1, 2 or 3");
  }
  return t;
}

MatrixXd cp_companion(const CPFactors& factors, int mode) {
  factors.validate();
  const int R = factors.rank();
  const MatrixXd* outer = nullptr;
  const MatrixXd* inner = nullptr;
  switch (mode) {
    case 1: outer = &factors.theta3; inner = &factors.theta2; break;
    case 2: outer = &factors.theta3; inner = &factors.theta1; break;
    case 3: outer = &factors.theta2; inner = &factors.theta1; break;
    default: throw std::invalid_argument("cp_companion: mode must be 1, 2 or 3");
  }
  const int no = static_cast<int>(outer->rows());
  const int ni = static_cast<int>(inner->rows());
  MatrixXd comp(no * ni, R);
  for (int r = 0; r < R; ++r)
    for (int a = 0; a < no; ++a)
      comp.block(a * ni, r, ni, 1) = (*outer)(a, r) * inner->col(r);
  return comp;
}

MatrixXd cp_matricized(const CPFactors& factors, int mode) {
  const MatrixXd comp = cp_companion(factors, mode);
  switch (mode) {
    case 1: return factors.theta1 * comp.transpose();
    case 2: return factors.theta2 * comp.transpose();
    case 3: return factors.theta3 * comp.transpose();
    default: throw std::invalid_argument("cp_matricized: mode must be 1, 2 or 3");
  }
}

CommutationMatrix commutation(int n, int p) {
  if (n < 1 || p < 1) throw std::invalid_argument("commutation: n, p must be >= 1");
  return CommutationMatrix(n, p);
}

}  // namespace tvar
