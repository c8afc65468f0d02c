#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "test_helpers.hpp"
#include "tvar/linalg.hpp"
#include "tvar/sampler.hpp"
#include "tvar/simulate.hpp"

using namespace tvar;
using testutil::GlsOracle;
using testutil::random_factors;
using testutil::random_matrix;
using testutil::random_sigma_path;

namespace {

// First-principles designs built with explicit loops straight from
// y_t = A_(1) x_t, A(i,j,k) = sum_r th1(i,r) th2(j,r) th3(k,r). The stacked
// response is vec(Y') (rows t*n + i).

MatrixXd dense_W1(const VarDataset& ds, const CPFactors& f) {
  const int T = ds.T(), n = f.n(), p = f.p(), R = f.rank();
  MatrixXd W = MatrixXd::Zero(T * n, n * R);  // theta1 stacked by columns: r*n+i
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < R; ++r) {
        double w = 0.0;
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < p; ++k)
            w += f.theta2(j, r) * f.theta3(k, r) * ds.X(t, k * n + j);
        W(t * n + i, r * n + i) = w;
      }
  return W;
}

MatrixXd dense_W2(const VarDataset& ds, const CPFactors& f) {
  const int T = ds.T(), n = f.n(), p = f.p(), R = f.rank();
  MatrixXd W = MatrixXd::Zero(T * n, n * R);  // theta2 stacked by rows: j*R+r
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int r = 0; r < R; ++r) {
          double c = 0.0;
          for (int k = 0; k < p; ++k) c += f.theta3(k, r) * ds.X(t, k * n + j);
          W(t * n + i, j * R + r) = f.theta1(i, r) * c;
        }
  return W;
}

MatrixXd dense_W3(const VarDataset& ds, const CPFactors& f) {
  const int T = ds.T(), n = f.n(), p = f.p(), R = f.rank();
  MatrixXd W = MatrixXd::Zero(T * n, p * R);  // theta3 stacked by rows: k*R+r
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < p; ++k)
        for (int r = 0; r < R; ++r) {
          double c = 0.0;
          for (int j = 0; j < n; ++j) c += f.theta2(j, r) * ds.X(t, k * n + j);
          W(t * n + i, k * R + r) = f.theta1(i, r) * c;
        }
  return W;
}

VectorXd stack_rows(const MatrixXd& Y) {  // vec(Y')
  return testutil::vec(MatrixXd(Y.transpose()));
}

VectorXd theta1_vec(const CPFactors& f) { return testutil::vec(f.theta1); }
VectorXd theta2_vec(const CPFactors& f) {
  return testutil::vec(MatrixXd(f.theta2.transpose()));
}
VectorXd theta3_vec(const CPFactors& f) {
  return testutil::vec(MatrixXd(f.theta3.transpose()));
}

// oracle draw reproducing draw_gaussian_precision's use of the rng
VectorXd oracle_draw(const MatrixXd& K, const VectorXd& mean, Rng& rng) {
  const Eigen::LLT<MatrixXd> llt(K);
  const VectorXd z = draw_std_normal(static_cast<int>(mean.size()), rng);
  return mean + llt.matrixU().solve(z);
}

VarDataset random_dataset(int n, int p, int T, Rng& rng) {
  return build_dataset(
      testutil::panel_from_matrix(random_matrix(T + p, n, rng)), p);
}

}  // namespace

TEST_CASE("representation identities: the three stacked regressions agree") {
  Rng rng(51);
  for (auto [n, p, R, T] : {std::tuple{3, 2, 2, 8}, {4, 3, 3, 10}, {2, 1, 1, 5}}) {
    const VarDataset ds = random_dataset(n, p, T, rng);
    const CPFactors f = random_factors(n, p, R, rng);
    // mean from the coefficient tensor, quadruple loop
    const Tensor3 A = cp_compose(f);
    MatrixXd mean = MatrixXd::Zero(T, n);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < p; ++k)
            mean(t, i) += A(i, j, k) * ds.X(t, k * n + j);
    const VectorXd vm = stack_rows(mean);
    CHECK((dense_W1(ds, f) * theta1_vec(f) - vm).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((dense_W2(ds, f) * theta2_vec(f) - vm).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((dense_W3(ds, f) * theta3_vec(f) - vm).cwiseAbs().maxCoeff() < 1e-10);
    // matrix form of the same statement
    const MatrixXd mean2 = ds.X * cp_matricized(f, 1).transpose();
    CHECK((mean2 - mean).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("RegressorMap reproduces the dense designs") {
  Rng rng(52);
  const int n = 3, p = 2, R = 2, T = 7;
  const VarDataset ds = random_dataset(n, p, T, rng);
  const CPFactors f = random_factors(n, p, R, rng);
  const MatrixXd W2 = dense_W2(ds, f);
  const MatrixXd W3 = dense_W3(ds, f);
  const RegressorMap m2 = build_theta2_regressors(ds, f);
  const RegressorMap m3 = build_theta3_regressors(ds, f);
  for (int t = 0; t < T; ++t) {
    CHECK((m2.Zt(t) - W2.middleRows(t * n, n)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((m3.Zt(t) - W3.middleRows(t * n, n)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK((stack_rows(m2.apply(theta2_vec(f))) - W2 * theta2_vec(f))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK((stack_rows(m3.apply(theta3_vec(f))) - W3 * theta3_vec(f))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("joint draws match the dense GLS oracle") {
  Rng rng(53);
  const int n = 3, p = 2, R = 2, T = 20;
  const VarDataset ds = random_dataset(n, p, T, rng);
  const CPFactors f = random_factors(n, p, R, rng);
  const SigmaPath sp = random_sigma_path(T, n, rng);
  const MatrixXd S = testutil::blockdiag_sigma(sp);
  const MatrixXd Yeff = random_matrix(T, n, rng);
  const VectorXd y = stack_rows(Yeff);
  const FactorPrior prior = FactorPrior::defaults(n, p, R);

  SUBCASE("theta1") {
    const GlsOracle o(dense_W1(ds, f), y, S, prior.mean1, prior.var1);
    Rng impl(777), orc(777);
    const MatrixXd got = draw_theta1_joint(Yeff, ds.X, f, sp, prior, impl);
    const VectorXd want = oracle_draw(o.K, o.mean, orc);
    CHECK((testutil::vec(got) - want).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("theta2") {
    const GlsOracle o(dense_W2(ds, f), y, S, prior.mean2, prior.var2);
    Rng impl(778), orc(778);
    const MatrixXd got =
        draw_theta2(Yeff, ds, f, sp, prior, impl, SamplerMode::JointBlock);
    VectorXd got_vec = testutil::vec(MatrixXd(got.transpose()));
    const VectorXd want = oracle_draw(o.K, o.mean, orc);
    CHECK((got_vec - want).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("theta3") {
    const GlsOracle o(dense_W3(ds, f), y, S, prior.mean3, prior.var3);
    Rng impl(779), orc(779);
    const MatrixXd got =
        draw_theta3(Yeff, ds, f, sp, prior, impl, SamplerMode::JointBlock);
    VectorXd got_vec = testutil::vec(MatrixXd(got.transpose()));
    const VectorXd want = oracle_draw(o.K, o.mean, orc);
    CHECK((got_vec - want).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("per-rank draws match a sequential dense GLS oracle") {
  Rng rng(54);
  const int n = 3, p = 2, R = 2, T = 20;
  const VarDataset ds = random_dataset(n, p, T, rng);
  const CPFactors f = random_factors(n, p, R, rng);
  const SigmaPath sp = random_sigma_path(T, n, rng);
  const MatrixXd S = testutil::blockdiag_sigma(sp);
  const MatrixXd Yeff = random_matrix(T, n, rng);
  const VectorXd y = stack_rows(Yeff);
  const FactorPrior prior = FactorPrior::defaults(n, p, R);

  SUBCASE("theta1 rank block") {
    for (int r = 0; r < R; ++r) {
      const MatrixXd W = dense_W1(ds, f);
      // residualize the other ranks, regress on the rank-r columns
      VectorXd resid = y;
      VectorXd th = theta1_vec(f);
      for (int s = 0; s < R; ++s)
        if (s != r) resid -= W.middleCols(s * n, n) * th.segment(s * n, n);
      const GlsOracle o(W.middleCols(r * n, n), resid, S,
                        prior.mean1.segment(r * n, n), prior.var1.segment(r * n, n));
      Rng impl(800 + r), orc(800 + r);
      const VectorXd got = draw_theta1_rank(Yeff, ds.X, f, r, sp, prior, impl);
      const VectorXd want = oracle_draw(o.K, o.mean, orc);
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("theta2 sequential sweep") {
    const MatrixXd W = dense_W2(ds, f);
    Rng impl(801), orc(801);
    const MatrixXd got = draw_theta2(Yeff, ds, f, sp, prior, impl, SamplerMode::PerRank);
    // oracle: sweep ranks, conditioning on already-updated ranks
    MatrixXd cur = f.theta2;
    for (int r = 0; r < R; ++r) {
      // columns of W for rank r are j*R + r
      MatrixXd Wr(T * n, n);
      VectorXd resid = y;
      for (int j = 0; j < n; ++j) Wr.col(j) = W.col(j * R + r);
      for (int s = 0; s < R; ++s)
        if (s != r)
          for (int j = 0; j < n; ++j) resid -= W.col(j * R + s) * cur(j, s);
      VectorXd pm(n), pv(n);
      for (int j = 0; j < n; ++j) {
        pm[j] = prior.mean2[j * R + r];
        pv[j] = prior.var2[j * R + r];
      }
      const GlsOracle o(Wr, resid, S, pm, pv);
      cur.col(r) = oracle_draw(o.K, o.mean, orc);
    }
    CHECK((got - cur).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("theta3 sequential sweep") {
    const MatrixXd W = dense_W3(ds, f);
    Rng impl(802), orc(802);
    const MatrixXd got = draw_theta3(Yeff, ds, f, sp, prior, impl, SamplerMode::PerRank);
    MatrixXd cur = f.theta3;
    for (int r = 0; r < R; ++r) {
      MatrixXd Wr(T * n, p);
      VectorXd resid = y;
      for (int k = 0; k < p; ++k) Wr.col(k) = W.col(k * R + r);
      for (int s = 0; s < R; ++s)
        if (s != r)
          for (int k = 0; k < p; ++k) resid -= W.col(k * R + s) * cur(k, s);
      VectorXd pm(p), pv(p);
      for (int k = 0; k < p; ++k) {
        pm[k] = prior.mean3[k * R + r];
        pv[k] = prior.var3[k * R + r];
      }
      const GlsOracle o(Wr, resid, S, pm, pv);
      cur.col(r) = oracle_draw(o.K, o.mean, orc);
    }
    CHECK((got - cur).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("rank-1 joint and per-rank draws coincide exactly") {
  Rng rng(55);
  const int n = 4, p = 2, R = 1, T = 15;
  const VarDataset ds = random_dataset(n, p, T, rng);
  const CPFactors f = random_factors(n, p, R, rng);
  const SigmaPath sp = random_sigma_path(T, n, rng);
  const MatrixXd Yeff = random_matrix(T, n, rng);
  const FactorPrior prior = FactorPrior::defaults(n, p, R);
  {
    Rng a(900), b(900);
    const MatrixXd joint = draw_theta1_joint(Yeff, ds.X, f, sp, prior, a);
    const VectorXd per = draw_theta1_rank(Yeff, ds.X, f, 0, sp, prior, b);
    CHECK((joint.col(0) - per).cwiseAbs().maxCoeff() < 1e-10);
  }
  {
    Rng a(901), b(901);
    const MatrixXd j2 = draw_theta2(Yeff, ds, f, sp, prior, a, SamplerMode::JointBlock);
    const MatrixXd p2 = draw_theta2(Yeff, ds, f, sp, prior, b, SamplerMode::PerRank);
    CHECK((j2 - p2).cwiseAbs().maxCoeff() < 1e-10);
  }
  {
    Rng a(902), b(902);
    const MatrixXd j3 = draw_theta3(Yeff, ds, f, sp, prior, a, SamplerMode::JointBlock);
    const MatrixXd p3 = draw_theta3(Yeff, ds, f, sp, prior, b, SamplerMode::PerRank);
    CHECK((j3 - p3).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("intercept draw matches its dense GLS oracle") {
  Rng rng(56);
  const int n = 3, p = 1, T = 12;
  const VarDataset ds = random_dataset(n, p, T, rng);
  const MatrixXd A_lags = random_matrix(n * p, n, rng);
  const SigmaPath sp = random_sigma_path(T, n, rng);
  const MatrixXd S = testutil::blockdiag_sigma(sp);
  // design: identity block per observation
  MatrixXd W(T * n, n);
  for (int t = 0; t < T; ++t) W.middleRows(t * n, n) = MatrixXd::Identity(n, n);
  const VectorXd y = stack_rows(MatrixXd(ds.Y - ds.X * A_lags));
  const GlsOracle o(W, y, S, VectorXd::Zero(n), VectorXd::Constant(n, 10.0));
  Rng impl(903), orc(903);
  const VectorXd got = draw_intercept(ds.Y, ds.X, A_lags, sp, 10.0, impl);
  const VectorXd want = oracle_draw(o.K, o.mean, orc);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("tight priors dominate the conditional") {
  Rng rng(57);
  const int n = 3, p = 2, R = 2, T = 10;
  const VarDataset ds = random_dataset(n, p, T, rng);
  const CPFactors f = random_factors(n, p, R, rng);
  const SigmaPath sp = random_sigma_path(T, n, rng);
  const MatrixXd Yeff = random_matrix(T, n, rng);
  FactorPrior prior = FactorPrior::defaults(n, p, R);
  prior.mean1 = VectorXd::Constant(n * R, 0.7);
  prior.var1 = VectorXd::Constant(n * R, 1e-12);
  Rng impl(904);
  const MatrixXd got = draw_theta1_joint(Yeff, ds.X, f, sp, prior, impl);
  CHECK((got.array() - 0.7).abs().maxCoeff() < 1e-4);
}

TEST_CASE("resolve_mode switches on nR") {
  CHECK(resolve_mode(SamplerMode::Auto, 20, 20) == SamplerMode::JointBlock);   // 400
  CHECK(resolve_mode(SamplerMode::Auto, 21, 20) == SamplerMode::PerRank);      // 420
  CHECK(resolve_mode(SamplerMode::PerRank, 2, 1) == SamplerMode::PerRank);
  CHECK(resolve_mode(SamplerMode::JointBlock, 500, 5) == SamplerMode::JointBlock);
}

TEST_CASE("run_chain: storage, thinning and determinism") {
  SimConfig sim;
  sim.n = 3;
  sim.p = 2;
  sim.T = 60;
  sim.rank = 1;
  sim.seed = 5;
  const SimResult data = simulate_tvar(sim);
  const VarDataset ds = build_dataset(data.panel, sim.p);
  McmcConfig cfg;
  cfg.burn_in = 20;
  cfg.draws = 10;
  cfg.thin = 2;
  cfg.rank = 1;
  cfg.seed = 42;
  const FactorPrior prior = FactorPrior::defaults(3, 2, 1);
  const VolatilityPriors vprior;
  const PosteriorDraws a = run_chain(ds, cfg, prior, vprior);
  const PosteriorDraws b = run_chain(ds, cfg, prior, vprior);
  CHECK(a.draws.size() == 10);
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    CHECK((a.draws[i].A - b.draws[i].A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.draws[i].factors.theta3 - b.draws[i].factors.theta3)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  McmcConfig other = cfg;
  other.seed = 43;
  const PosteriorDraws c = run_chain(ds, cfg, prior, vprior);
  const PosteriorDraws d = run_chain(ds, other, prior, vprior);
  CHECK((c.draws[0].A - d.draws[0].A).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("compose_A layout") {
  Rng rng(58);
  const CPFactors f = random_factors(2, 3, 2, rng);
  const VectorXd icpt = (VectorXd(2) << 0.5, -0.5).finished();
  const MatrixXd A = compose_A(f, icpt);
  CHECK(A.rows() == 2 * 3 + 1);
  CHECK(A.cols() == 2);
  CHECK((A.topRows(6) - cp_matricized(f, 1).transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(A(6, 0) == 0.5);
  CHECK(A(6, 1) == -0.5);
  CHECK(compose_A(f, VectorXd()).rows() == 6);
}
