#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "test_helpers.hpp"
#include "tvar/var_data.hpp"

using namespace tvar;

TEST_CASE("quarter arithmetic and parsing") {
  Quarter q{1969, 4};
  CHECK(q.next() == Quarter{1970, 1});
  CHECK(q.str() == "1969Q4");
  CHECK(parse_quarter("1969Q1") == Quarter{1969, 1});
  CHECK(parse_quarter("1/1/1969") == Quarter{1969, 1});
  CHECK(parse_quarter("10/1/1984") == Quarter{1984, 4});
  CHECK_THROWS(parse_quarter("1969Q5"));
  CHECK_THROWS(parse_quarter("3/1/1969"));  // not a quarter-start month
}

TEST_CASE("minimal lag construction: n=1, p=1, values 1,2,3") {
  MatrixXd v(3, 1);
  v << 1.0, 2.0, 3.0;
  const auto ds = build_dataset(testutil::panel_from_matrix(v), 1);
  CHECK(ds.T() == 2);
  CHECK(ds.Y(0, 0) == 2.0);
  CHECK(ds.Y(1, 0) == 3.0);
  CHECK(ds.X(0, 0) == 1.0);
  CHECK(ds.X(1, 0) == 2.0);
}

TEST_CASE("lag stacking matches the element-wise oracle") {
  Rng rng(21);
  const int n = 3, p = 2, Traw = 12;
  const MatrixXd v = testutil::random_matrix(Traw, n, rng);
  const auto ds = build_dataset(testutil::panel_from_matrix(v), p);
  CHECK(ds.T() == Traw - p);
  for (int t = 0; t < ds.T(); ++t)
    for (int l = 1; l <= p; ++l)
      for (int i = 0; i < n; ++i) {
        // row t of Y is panel row t+p; lag l regressor is panel row t+p-l
        CHECK(ds.X(t, (l - 1) * n + i) == v(t + p - l, i));
        CHECK(ds.XTensor(t, i, l - 1) == v(t + p - l, i));
      }
}

TEST_CASE("XTensor slices vec to the X rows") {
  Rng rng(22);
  const auto ds = build_dataset(
      testutil::panel_from_matrix(testutil::random_matrix(10, 2, rng)), 3);
  for (int t = 0; t < ds.T(); ++t) {
    const VectorXd xt = testutil::vec(ds.XTensor.slice1(t));
    CHECK((xt.transpose() - ds.X.row(t)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("lag consistency: shared rows between p=1 and p=2 datasets") {
  Rng rng(23);
  const MatrixXd v = testutil::random_matrix(9, 2, rng);
  const auto panel = testutil::panel_from_matrix(v);
  const auto d1 = build_dataset(panel, 1);
  const auto d2 = build_dataset(panel, 2);
  // d2 row t corresponds to d1 row t+1; first lag block must agree
  for (int t = 0; t < d2.T(); ++t) {
    CHECK((d2.Y.row(t) - d1.Y.row(t + 1)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((d2.X.row(t).head(2) - d1.X.row(t + 1)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("residual identities") {
  Rng rng(24);
  const int n = 2, p = 2;
  const auto ds = build_dataset(
      testutil::panel_from_matrix(testutil::random_matrix(20, n, rng)), p);
  SUBCASE("zero coefficients leave Y") {
    const MatrixXd U = residuals(ds, MatrixXd::Zero(n * p, n));
    CHECK((U - ds.Y).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("exact fit gives zero residuals") {
    const MatrixXd A = testutil::random_matrix(n * p, n, rng);
    VarDataset fitted = ds;
    fitted.Y = ds.X * A;
    CHECK(residuals(fitted, A).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("intercept design appends a ones column and uses the last A row") {
  Rng rng(25);
  const int n = 2, p = 1;
  auto ds = build_dataset(
      testutil::panel_from_matrix(testutil::random_matrix(8, n, rng)), p, true);
  CHECK(ds.design_cols() == n * p + 1);
  const MatrixXd D = ds.design();
  CHECK((D.col(n * p) - VectorXd::Ones(ds.T())).cwiseAbs().maxCoeff() == 0.0);
  MatrixXd A = MatrixXd::Zero(n * p + 1, n);
  A.row(n * p) << 0.5, -0.25;
  const MatrixXd U = residuals(ds, A);
  CHECK((U.col(0) - (ds.Y.col(0).array() - 0.5).matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((U.col(1) - (ds.Y.col(1).array() + 0.25).matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("panel validation catches date gaps") {
  Rng rng(26);
  auto panel = testutil::panel_from_matrix(testutil::random_matrix(4, 1, rng));
  panel.dates[2] = panel.dates[2].next();  // skip a quarter
  CHECK_THROWS(panel.validate());
}

TEST_CASE("build_dataset requires enough observations") {
  Rng rng(27);
  const auto panel = testutil::panel_from_matrix(testutil::random_matrix(3, 2, rng));
  CHECK_THROWS(build_dataset(panel, 3));
}
