#include "tvar/var_data.hpp"

#include <cstdio>
#include <stdexcept>

namespace tvar {

std::string Quarter::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04dQ%d", year, q);
  return buf;
}

Quarter parse_quarter(const std::string& s) {
  int y = 0, q = 0, m = 0, d = 0;
  char c = 0;
  if (std::sscanf(s.c_str(), "%d%c%d", &y, &c, &q) == 3 && (c == 'Q' || c == 'q')) {
    if (q < 1 || q > 4 || y < 1) throw std::invalid_argument("bad quarter stamp: " + s);
    return {y, q};
  }
  if (std::sscanf(s.c_str(), "%d/%d/%d", &m, &d, &y) == 3) {
    if (m == 1 || m == 4 || m == 7 || m == 10) return {y, (m - 1) / 3 + 1};
    throw std::invalid_argument("date not on a quarter boundary: " + s);
  }
  throw std::invalid_argument("unparseable date: " + s);
}

void SeriesPanel::validate() const {
  if (values.cols() != static_cast<Eigen::Index>(names.size()))
    throw std::invalid_argument("SeriesPanel: names/values column mismatch");
  if (values.rows() != static_cast<Eigen::Index>(dates.size()))
    throw std::invalid_argument("SeriesPanel: dates/values row mismatch");
  for (std::size_t t = 1; t < dates.size(); ++t) {
    if (dates[t] != dates[t - 1].next())
      throw std::invalid_argument("SeriesPanel: date gap after " + dates[t - 1].str());
  }
  if (!values.allFinite())
    throw std::invalid_argument("SeriesPanel: non-finite values");
}

MatrixXd VarDataset::design() const {
  if (!intercept) return X;
  MatrixXd d(X.rows(), X.cols() + 1);
  d.leftCols(X.cols()) = X;
  d.rightCols(1).setOnes();
  return d;
}

VarDataset build_dataset(const SeriesPanel& panel, int p, bool intercept) {
  panel.validate();
  if (p < 1) throw std::invalid_argument("build_dataset: p must be >= 1");
  const int T_raw = panel.rows(), n = panel.cols();
  if (T_raw <= p)
    throw std::invalid_argument("build_dataset: insufficient data (T_raw <= p)");
  const int T = T_raw - p;

  VarDataset ds{MatrixXd(T, n), MatrixXd(T, n * p), Tensor3(T, n, p), p, intercept};
  for (int t = 0; t < T; ++t) {
    ds.Y.row(t) = panel.values.row(t + p);
    for (int l = 1; l <= p; ++l) {
      ds.X.block(t, (l - 1) * n, 1, n) = panel.values.row(t + p - l);
      for (int i = 0; i < n; ++i)
        ds.XTensor(t, i, l - 1) = panel.values(t + p - l, i);
    }
  }
  return ds;
}

MatrixXd residuals(const VarDataset& ds, const MatrixXd& A) {
  const MatrixXd d = ds.design();
  if (A.rows() != d.cols() || A.cols() != ds.n())
    throw std::invalid_argument("residuals: coefficient matrix not conformable");
  return ds.Y - d * A;
}

}  // namespace tvar
