#include "doctest.h"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <random>

#include "lava/design.hpp"
#include "lava/lava_regression.hpp"
#include "lava/rng.hpp"
#include "lava/shrinkage.hpp"

using namespace lava;

namespace {

Eigen::MatrixXd random_matrix(int n, int p, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = normal(eng);
  }
  return X;
}

Eigen::VectorXd random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(eng);
  return v;
}

Eigen::MatrixXd orthonormal_design(int n, int p, std::uint64_t seed) {
  Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(
                          random_matrix(n, p, seed))
                          .householderQ() *
                      Eigen::MatrixXd::Identity(n, p);
  return Q * std::sqrt(static_cast<double>(n));
}

double joint_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                       const Eigen::VectorXd& beta, const Eigen::VectorXd& delta,
                       const PenaltyPair& p) {
  return (Y - X * (beta + delta)).squaredNorm() / X.rows() +
         p.lambda2 * beta.squaredNorm() + p.lambda1 * delta.lpNorm<1>();
}

// Alternating exact minimization over (beta | delta); block descent on a
// jointly convex objective, run to a tight objective tolerance.
Eigen::VectorXd alternating_min_fitted(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& Y,
                                       const PenaltyPair& p) {
  const Eigen::Index n = X.rows();
  const Eigen::Index pp = X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(pp);
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(pp);
  const Eigen::MatrixXd Q =
      X.transpose() * X +
      static_cast<double>(n) * p.lambda2 * Eigen::MatrixXd::Identity(pp, pp);
  const auto solver = Q.ldlt();
  SolveOptions tight;
  tight.tol = 1e-12;
  double prev = joint_objective(X, Y, beta, delta, p);
  for (int it = 0; it < 50000; ++it) {
    tight.warm_start = delta;
    delta = fit_lasso(X, Y - X * beta, p.lambda1, tight).delta;
    beta = solver.solve(X.transpose() * (Y - X * delta));
    const double obj = joint_objective(X, Y, beta, delta, p);
    if (prev - obj < 1e-14 * (1.0 + std::abs(obj))) break;
    prev = obj;
  }
  return X * (beta + delta);
}

}  // namespace

TEST_CASE("lava regression limits") {
  const DesignMatrix D = normalize_design(random_matrix(20, 6, 301));
  const Eigen::VectorXd Y = random_vector(20, 302);

  // Huge lambda1: pure ridge.
  const LavaRegressionFit ridge_like =
      fit_lava_regression(D, Y, PenaltyPair(100.0, 0.7));
  CHECK(ridge_like.delta_hat.isZero(0));
  CHECK((ridge_like.beta_hat - fit_ridge(D.X, Y, 0.7)).lpNorm<Eigen::Infinity>() <
        1e-9);

  // lambda2 = inf: pure lasso.
  const LavaRegressionFit lasso_like =
      fit_lava_regression(D, Y, PenaltyPair(0.3, kInf));
  CHECK(lasso_like.beta_hat.isZero(0));
  const LassoFit direct = fit_lasso(D.X, Y, 0.3);
  CHECK((lasso_like.delta_hat - direct.delta).lpNorm<Eigen::Infinity>() < 1e-10);

  CHECK_THROWS(fit_lava_regression(D, Y, PenaltyPair(0.0, 1.0)));
  CHECK_THROWS(fit_lava_regression(D, Y, PenaltyPair(0.3, 0.0)));
}

TEST_CASE("fit identities") {
  const DesignMatrix D = normalize_design(random_matrix(25, 40, 303));
  const Eigen::VectorXd Y = random_vector(25, 304);
  const PenaltyPair pens(0.4, 0.9);
  const LavaRegressionFit fit = fit_lava_regression(D, Y, pens);
  const RidgeProjection proj(D.X, pens.lambda2);

  // Fitted-value identity: X theta = P Y + K X delta.
  const Eigen::VectorXd rhs =
      proj.apply_P(Y) + proj.apply_K(D.X * fit.delta_hat);
  CHECK((fit.fitted - rhs).lpNorm<Eigen::Infinity>() < 1e-8);

  // Dense-part identity: beta = (X'X + n l2 I)^{-1} X'(Y - X delta).
  const Eigen::MatrixXd Q =
      D.X.transpose() * D.X +
      25.0 * pens.lambda2 * Eigen::MatrixXd::Identity(40, 40);
  const Eigen::VectorXd beta_ref =
      Q.ldlt().solve(D.X.transpose() * (Y - D.X * fit.delta_hat));
  CHECK((fit.beta_hat - beta_ref).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((fit.residual - (Y - fit.fitted)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("profiling equivalence") {
  const DesignMatrix D = normalize_design(random_matrix(18, 9, 305));
  const Eigen::VectorXd Y = random_vector(18, 306);
  const double l1 = 0.25, l2 = 0.6;
  const RidgeProjection proj(D.X, l2);
  const Eigen::MatrixXd Q =
      D.X.transpose() * D.X + 18.0 * l2 * Eigen::MatrixXd::Identity(9, 9);
  const auto solver = Q.ldlt();
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd delta = random_vector(9, 400 + t);
    const double profiled =
        proj.apply_K_half(Eigen::MatrixXd(Y - D.X * delta)).squaredNorm() /
            18.0 +
        l1 * delta.lpNorm<1>();
    const Eigen::VectorXd beta =
        solver.solve(D.X.transpose() * (Y - D.X * delta));
    const double original =
        joint_objective(D.X, Y, beta, delta, PenaltyPair(l1, l2));
    CHECK(std::abs(profiled - original) < 1e-8 * (1.0 + std::abs(original)));
  }
}

TEST_CASE("profiled fit equals alternating joint minimization") {
  for (int t = 0; t < 4; ++t) {
    const DesignMatrix D = normalize_design(random_matrix(20, 5, 500 + t));
    const Eigen::VectorXd Y = random_vector(20, 600 + t);
    const PenaltyPair pens(0.2 + 0.1 * t, 0.5 + 0.2 * t);
    const LavaRegressionFit fit = fit_lava_regression(D, Y, pens);
    const Eigen::VectorXd oracle_fitted =
        alternating_min_fitted(D.X, Y, pens);
    CHECK((fit.fitted - oracle_fitted).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("orthonormal design reduces to the scalar shrinkage") {
  const int n = 32, p = 8;
  const Eigen::MatrixXd X = orthonormal_design(n, p, 913);
  const DesignMatrix D = normalize_design(X);
  const Eigen::VectorXd Y = random_vector(n, 914);
  const Eigen::VectorXd z = D.X.transpose() * Y / n;
  const PenaltyPair pens(0.35, 1.2);
  const LavaRegressionFit fit = fit_lava_regression(D, Y, pens);
  for (int j = 0; j < p; ++j) {
    CHECK(fit.theta_hat[j] ==
          doctest::Approx(shrink_lava(z[j], pens).total()).epsilon(1e-6));
  }
  // Post-lava matches the scalar post-lava rule as well.
  const LavaRegressionFit post = fit_post_lava_regression(fit, D, Y);
  for (int j = 0; j < p; ++j) {
    CHECK(post.theta_hat[j] ==
          doctest::Approx(shrink_post_lava(z[j], pens)).epsilon(1e-6));
  }
}

TEST_CASE("post-lava identity and corner cases") {
  const DesignMatrix D = normalize_design(random_matrix(22, 35, 915));
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(35);
  signal[0] = 2.5;
  signal[7] = -1.5;
  const Eigen::VectorXd Y =
      D.X * signal + 0.3 * random_vector(22, 916);
  const LavaRegressionFit fit = fit_lava_regression(D, Y, PenaltyPair(0.3, 0.8));
  REQUIRE(!fit.active_set.empty());
  const LavaRegressionFit post = fit_post_lava_regression(fit, D, Y);

  // X theta_post = X theta_lava + P_J U_hat.
  Eigen::MatrixXd XJ(22, static_cast<Eigen::Index>(fit.active_set.size()));
  for (std::size_t k = 0; k < fit.active_set.size(); ++k) {
    XJ.col(static_cast<Eigen::Index>(k)) = D.X.col(fit.active_set[k]);
  }
  const Eigen::MatrixXd PJ =
      XJ * (XJ.transpose() * XJ).ldlt().solve(XJ.transpose());
  const Eigen::VectorXd rhs = fit.fitted + PJ * fit.residual;
  CHECK((post.fitted - rhs).lpNorm<Eigen::Infinity>() < 1e-8);

  // Empty active set: post-lava equals lava.
  const LavaRegressionFit none =
      fit_lava_regression(D, Y, PenaltyPair(50.0, 0.8));
  REQUIRE(none.active_set.empty());
  const LavaRegressionFit post_none = fit_post_lava_regression(none, D, Y);
  CHECK((post_none.theta_hat - none.theta_hat).lpNorm<Eigen::Infinity>() == 0.0);

  // Full support and a vanishing dense part: post-lava approaches OLS.
  const DesignMatrix D2 = normalize_design(random_matrix(30, 4, 917));
  const Eigen::VectorXd Y2 = random_vector(30, 918);
  const LavaRegressionFit all =
      fit_lava_regression(D2, Y2, PenaltyPair(1e-6, 1e9));
  REQUIRE(all.active_set.size() == 4);
  const LavaRegressionFit post_all = fit_post_lava_regression(all, D2, Y2);
  const Eigen::VectorXd ols =
      (D2.X.transpose() * D2.X).ldlt().solve(D2.X.transpose() * Y2);
  CHECK((post_all.theta_hat - ols).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("lava df and SURE") {
  const DesignMatrix D = normalize_design(random_matrix(24, 10, 919));
  const Eigen::VectorXd Y = random_vector(24, 920);
  const double l2 = 0.7;
  const RidgeProjection proj(D.X, l2);

  // Empty active set: df = tr(P).
  const LavaRegressionFit none = fit_lava_regression(D, Y, PenaltyPair(80.0, l2));
  REQUIRE(none.active_set.empty());
  const DfSure empty_df = df_sure_lava(none, D, Y, 1.0, &proj);
  CHECK(empty_df.df == doctest::Approx(proj.trace_P()).epsilon(1e-10));

  // Lasso limit: df = rank of the selected block = |J| here.
  const LavaRegressionFit ll = fit_lava_regression(D, Y, PenaltyPair(0.4, kInf));
  const DfSure lasso_df = df_sure_lava(ll, D, Y, 1.0);
  CHECK(lasso_df.df ==
        doctest::Approx(static_cast<double>(ll.active_set.size())));

  // Large lambda2 pushes df toward the lasso df on the selected block.
  const LavaRegressionFit big =
      fit_lava_regression(D, Y, PenaltyPair(0.4, 1e9));
  const DfSure big_df =
      df_sure_lava(big, D, Y, 1.0);
  CHECK(big_df.df ==
        doctest::Approx(static_cast<double>(big.active_set.size()))
            .epsilon(1e-5));
}

TEST_CASE("df matches the covariance definition by Monte Carlo") {
  const int n = 30, p = 10, reps = 800;
  const DesignMatrix D = normalize_design(random_matrix(n, p, 921));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  theta[0] = 2.0;
  theta[3] = -1.0;
  const Eigen::VectorXd mu = D.X * theta;
  const double sigma_u = 1.0;
  const PenaltyPair pens(0.5, 1.1);
  const RidgeProjection proj(D.X, pens.lambda2);
  double sum_diff = 0.0, sumsq_diff = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream stream(7000, r);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = sigma_u * stream.normal();
    const Eigen::VectorXd Y = mu + u;
    const LavaRegressionFit fit = fit_lava_regression(D, Y, pens, {}, &proj);
    const double df_cov = u.dot(fit.fitted) / (sigma_u * sigma_u);
    const double df_est = df_sure_lava(fit, D, Y, 1.0, &proj).df;
    const double d = df_cov - df_est;
    sum_diff += d;
    sumsq_diff += d * d;
  }
  const double mean = sum_diff / reps;
  const double se =
      std::sqrt((sumsq_diff / reps - mean * mean) / (reps - 1));
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("baseline df values") {
  const DesignMatrix D = normalize_design(random_matrix(26, 7, 922));
  const Eigen::VectorXd Y = random_vector(26, 923);

  const RidgeProjection proj(D.X, 2.0);
  const Eigen::VectorXd ridge_fit = proj.apply_P(Y);
  const DfSure ridge_df = df_sure_baseline(
      Estimator::ridge, D, Y, ridge_fit, {}, PenaltyPair(kInf, 2.0), 1.0, &proj);
  CHECK(ridge_df.df == doctest::Approx(proj.trace_P()));

  const RidgeProjection proj_big(D.X, 1e10);
  CHECK(proj_big.trace_P() < 1e-6);  // ridge df -> 0

  const LassoFit lf = fit_lasso(D.X, Y, 5.0);
  REQUIRE(lf.active_set.empty());
  const DfSure lasso_df = df_sure_baseline(
      Estimator::lasso, D, Y, D.X * lf.delta, lf.active_set,
      PenaltyPair(5.0, kInf), 1.0);
  CHECK(lasso_df.df == 0.0);
  CHECK(lasso_df.sure ==
        doctest::Approx(-1.0 + Y.squaredNorm() / 26.0).epsilon(1e-10));
}

TEST_CASE("score quantile and its classical bound") {
  const DesignMatrix D = normalize_design(random_matrix(40, 12, 924));
  CHECK(score_quantile(D, 0.8, 0.0, 0.05, 200, 5) == 0.0);
  const double q1 = score_quantile(D, 0.8, 1.0, 0.05, 2000, 5);
  const double q2 = score_quantile(D, 0.8, 1.0, 0.05, 2000, 5);
  CHECK(q1 == q2);
  const RidgeProjection proj(D.X, 0.8);
  CHECK(q1 <= classical_score_bound(proj, 1.0, 0.05) * 1.05);
  CHECK_THROWS(score_quantile(D, 0.8, 1.0, 0.05, 50, 5));
}

TEST_CASE("bound components") {
  const DesignMatrix D = normalize_design(random_matrix(36, 9, 925));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(9);
  const DeviationReport r0 =
      bound_components(D, 0.6, zero, 1.0, 0.05, 0.05, 500, 11);
  CHECK(r0.b2 == 0.0);
  CHECK(r0.b4 == 0.0);
  CHECK(r0.b3 > 0.0);
  CHECK(r0.lambda_quantile <= r0.classical_bound * 1.05);

  std::mt19937_64 eng(12);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd beta(9);
    for (int j = 0; j < 9; ++j) beta[j] = normal(eng);
    const DeviationReport r =
        bound_components(D, 0.6, beta, 1.0, 0.05, 0.05, 200, 13);
    CHECK(r.b4 <= 8.0 * r.b2 * r.k_norm + 1e-10);
  }
}

TEST_CASE("restricted eigenvalue surrogate") {
  // Orthonormal design: kappa^2 = k = l2/(1+l2).
  const Eigen::MatrixXd X = orthonormal_design(36, 6, 926);
  const DesignMatrix D = normalize_design(X);
  const double l2 = 1.5;
  const double kappa =
      restricted_eigenvalue_surrogate(D, l2, {0, 2}, 2.0, 3);
  CHECK(kappa * kappa == doctest::Approx(l2 / (1.0 + l2)).epsilon(1e-4));

  // Duplicated column in the support: surrogate collapses to zero.
  Eigen::MatrixXd Xd = random_matrix(30, 5, 927);
  Xd.col(3) = Xd.col(0);
  const DesignMatrix Dd = normalize_design(Xd);
  const double kappa_dup =
      restricted_eigenvalue_surrogate(Dd, 0.9, {0}, 2.0, 3);
  CHECK(kappa_dup >= 0.0);
  CHECK(kappa_dup < 1e-6);

  CHECK_THROWS(restricted_eigenvalue_surrogate(
      normalize_design(random_matrix(30, 13, 928)), 0.9, {0}, 2.0, 3));
}

TEST_CASE("regression SURE is unbiased for the prediction risk") {
  const int n = 30, p = 10, reps = 5000;
  const DesignMatrix D = normalize_design(random_matrix(n, p, 930));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  theta[0] = 2.0;
  theta[4] = 0.8;
  const Eigen::VectorXd mu = D.X * theta;
  const PenaltyPair pens(0.45, 0.9);
  const RidgeProjection proj(D.X, pens.lambda2);
  std::vector<double> diffs(reps);
  parallel_for(reps, [&](std::size_t r) {
    RngStream stream(931, static_cast<std::int64_t>(r));
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) Y[i] = mu[i] + stream.normal();
    const LavaRegressionFit fit = fit_lava_regression(D, Y, pens, {}, &proj);
    const DfSure ds = df_sure_lava(fit, D, Y, 1.0, &proj);
    const double err = (fit.fitted - mu).squaredNorm() / n;
    diffs[r] = ds.sure - err;
  });
  double mean = 0.0;
  for (double v : diffs) mean += v;
  mean /= reps;
  double ss = 0.0;
  for (double v : diffs) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (reps - 1) / reps);
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("lasso df matches the covariance definition by Monte Carlo") {
  const int n = 30, p = 10, reps = 800;
  const DesignMatrix D = normalize_design(random_matrix(n, p, 932));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  theta[1] = 1.5;
  const Eigen::VectorXd mu = D.X * theta;
  const double lambda1 = 0.4;
  std::vector<double> diffs(reps);
  parallel_for(reps, [&](std::size_t r) {
    RngStream stream(933, static_cast<std::int64_t>(r));
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = stream.normal();
    const Eigen::VectorXd Y = mu + u;
    const LassoFit fit = fit_lasso(D.X, Y, lambda1);
    const Eigen::VectorXd fitted = D.X * fit.delta;
    const double df_cov = u.dot(fitted);
    diffs[r] = df_cov - static_cast<double>(fit.active_set.size());
  });
  double mean = 0.0;
  for (double v : diffs) mean += v;
  mean /= reps;
  double ss = 0.0;
  for (double v : diffs) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (reps - 1) / reps);
  CHECK(std::abs(mean) <= 3.0 * se);
}
