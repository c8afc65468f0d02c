#pragma once

#include <string>
#include <vector>

#include "tvar/tensor.hpp"

namespace tvar {

// Quarter stamp, e.g. 1969Q1. Ordered, steps by one quarter.
struct Quarter {
  int year = 0;
  int q = 1;  // 1..4

  Quarter next() const { return q == 4 ? Quarter{year + 1, 1} : Quarter{year, q + 1}; }
  std::string str() const;

  auto operator<=>(const Quarter&) const = default;
};

// Parses "1969Q1" or FRED-QD "1/1/1969" (month 1/4/7/10 -> quarter).
Quarter parse_quarter(const std::string& s);

struct SeriesPanel {
  MatrixXd values;                 // T_raw x n
  std::vector<std::string> names;  // n
  std::vector<Quarter> dates;      // T_raw, strictly increasing by one quarter

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }

  void validate() const;  // throws on date gaps / size mismatch
};

struct VarDataset {
  MatrixXd Y;       // T x n
  MatrixXd X;       // T x np, row t = (y_{t-1}', ..., y_{t-p}')
  Tensor3 XTensor;  // (T, n, p), vec(XTensor[t,:,:]) = x_t
  int p = 1;
  bool intercept = false;

  int T() const { return static_cast<int>(Y.rows()); }
  int n() const { return static_cast<int>(Y.cols()); }

  // X with the intercept ones column appended when present.
  MatrixXd design() const;
  int design_cols() const { return n() * p + (intercept ? 1 : 0); }
};

// First p observations of the panel are consumed as initial conditions.
VarDataset build_dataset(const SeriesPanel& panel, int p, bool intercept = false);

// U = Y - design * A. A is np x n, or (np+1) x n with the intercept
// coefficients in the last row.
MatrixXd residuals(const VarDataset& ds, const MatrixXd& A);

}  // namespace tvar
