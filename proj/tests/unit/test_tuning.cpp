#include "doctest.h"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <random>

#include "lava/design.hpp"
#include "lava/estimators.hpp"
#include "lava/lava_regression.hpp"
#include "lava/rng.hpp"
#include "lava/sequence_risk.hpp"
#include "lava/tuning.hpp"

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

}  // namespace

TEST_CASE("noise variance estimation") {
  // Pure noise: the lasso selects nothing and the variance is the MSE.
  const DesignMatrix D = normalize_design(random_matrix(100, 20, 1001));
  const Eigen::VectorXd noise = random_vector(100, 1002);
  const NoiseEstimate est = estimate_noise_variance(D, noise);
  CHECK(est.sigma2 == doctest::Approx(1.0).epsilon(0.2));
  CHECK(!est.df_floored);

  // Exact sparse signal, zero noise.
  const DesignMatrix D2 = normalize_design(random_matrix(60, 10, 1003));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(10);
  theta[2] = 1.5;
  const Eigen::VectorXd y_exact = D2.X * theta;
  const NoiseEstimate est2 = estimate_noise_variance(D2, y_exact);
  CHECK(est2.sigma2 < 1e-4);

  // Deterministic under fixed data.
  const NoiseEstimate est3 = estimate_noise_variance(D, noise);
  CHECK(est3.sigma2 == est.sigma2);
  CHECK(est3.iterations == est.iterations);
}

TEST_CASE("default grid centering") {
  const PenaltyGrid g = default_regression_grid(100, 200, 0.25, 30, 30);
  const double center = 2.0 * 0.5 * std::sqrt(std::log(400.0) / 100.0);
  CHECK(g.lambda1_values[0] == doctest::Approx(0.01 * center));
  CHECK(g.lambda1_values[29] == doctest::Approx(10.0 * center));
  CHECK(g.lambda2_values[0] == doctest::Approx(1e-4));
  CHECK(g.lambda2_values[29] == doctest::Approx(1e4));
  g.validate();
}

TEST_CASE("tie-breaking favors larger penalties") {
  std::vector<SurfacePoint> surface = {
      {0.1, 1.0, 5.0}, {0.2, 1.0, 3.0}, {0.3, 1.0, 3.0}, {0.3, 2.0, 3.0}};
  const std::size_t best = detail::select_best(surface);
  CHECK(surface[best].lambda1 == 0.3);
  CHECK(surface[best].lambda2 == 2.0);

  std::vector<SurfacePoint> with_nan = {{0.1, 1.0, std::nan("")},
                                        {0.2, 1.0, 7.0}};
  CHECK(detail::select_best(with_nan) == 1);
}

TEST_CASE("tune_sure ridge on zero response") {
  const DesignMatrix D = normalize_design(random_matrix(30, 6, 1004));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(30);
  PenaltyGrid grid;
  grid.lambda1_values = log_spaced(0.1, 1.0, 4);
  grid.lambda2_values = log_spaced(0.01, 100.0, 12);
  const TuneResult res = tune_sure(Estimator::ridge, D, zero, grid, 1.0);
  CHECK(res.chosen.lambda2 == doctest::Approx(grid.lambda2_values[11]));
  CHECK(res.failures == 0);

  // The reported minimum equals a re-evaluation at the chosen point.
  const RidgeProjection proj(D.X, res.chosen.lambda2);
  const DfSure ds = df_sure_baseline(Estimator::ridge, D, zero,
                                     proj.apply_P(zero), {}, res.chosen, 1.0,
                                     &proj);
  CHECK(res.best_criterion == doctest::Approx(ds.sure).epsilon(1e-12));
}

TEST_CASE("tune_sure surface is re-checkable and complete") {
  const DesignMatrix D = normalize_design(random_matrix(40, 12, 1005));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(12);
  theta[0] = 2.0;
  const Eigen::VectorXd Y = D.X * theta + 0.5 * random_vector(40, 1006);
  PenaltyGrid grid;
  grid.lambda1_values = log_spaced(0.05, 2.0, 8);
  grid.lambda2_values = log_spaced(0.05, 50.0, 7);
  const TuneResult res = tune_sure(Estimator::lava, D, Y, grid, 0.25);
  CHECK(res.surface.size() == 56);
  CHECK(res.failures == 0);
  double best = kInf;
  for (const auto& pt : res.surface) {
    REQUIRE(!std::isnan(pt.criterion));
    best = std::min(best, pt.criterion);
  }
  CHECK(best == doctest::Approx(res.best_criterion));

  // Re-fit at the chosen point and recompute its SURE.
  const RidgeProjection proj(D.X, res.chosen.lambda2);
  const LavaRegressionFit fit =
      fit_lava_regression(D, Y, res.chosen, {}, &proj);
  const DfSure ds = df_sure_lava(fit, D, Y, 0.25, &proj);
  CHECK(res.best_criterion == doctest::Approx(ds.sure).epsilon(1e-9));

  CHECK_THROWS(tune_sure(Estimator::post_lava, D, Y, grid, 0.25));
}

TEST_CASE("SURE tuning tracks the best grid point on an orthonormal design") {
  // Sequence model embedded as an orthonormal regression; the grid is coarse
  // enough that the risk-minimizing point is decisive relative to SURE noise.
  const int n = 160, p = 150;
  Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(
                          random_matrix(n, p, 1007))
                          .householderQ() *
                      Eigen::MatrixXd::Identity(n, p);
  const Eigen::MatrixXd X = Q * std::sqrt(static_cast<double>(n));
  const DesignMatrix D = normalize_design(X);
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(p, 0.1);
  theta[0] = 3.0;
  const double sigma_z = 0.1;  // per-coordinate noise
  const double sigma_u = sigma_z * std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd mu = D.X * theta;

  PenaltyGrid grid;
  grid.lambda1_values = log_spaced(0.07, 7.0, 5);
  grid.lambda2_values = log_spaced(0.1, 10.0, 5);

  SequenceModel model;
  model.theta = theta;
  model.sigma = sigma_z;
  const auto points = enumerate_grid(Estimator::lava, grid);
  double best_true = kInf;
  for (const auto& pt : points) {
    best_true = std::min(best_true, risk_vector(Estimator::lava, model, pt));
  }

  const int seeds = 50;
  double sum_diff = 0.0, sumsq_diff = 0.0;
  for (int s = 0; s < seeds; ++s) {
    RngStream stream(4000, s);
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) Y[i] = mu[i] + sigma_u * stream.normal();
    const TuneResult res =
        tune_sure(Estimator::lava, D, Y, grid, sigma_u * sigma_u);
    const double chosen_risk = risk_vector(Estimator::lava, model, res.chosen);
    const double diff = chosen_risk - best_true;
    sum_diff += diff;
    sumsq_diff += diff * diff;
  }
  const double mean = sum_diff / seeds;
  const double sd =
      std::sqrt(std::max(0.0, sumsq_diff / seeds - mean * mean));
  CHECK(mean <= 3.0 * sd / std::sqrt(static_cast<double>(seeds)) + 1e-12);
}

TEST_CASE("cv fold machinery") {
  const auto ids = cv_fold_ids(10, 3, 7);
  CHECK(ids.size() == 10);
  CHECK(ids == cv_fold_ids(10, 3, 7));
  CHECK(ids != cv_fold_ids(10, 3, 8));
  int counts[3] = {0, 0, 0};
  for (int f : ids) {
    REQUIRE(f >= 0);
    REQUIRE(f < 3);
    counts[f] += 1;
  }
  CHECK(counts[0] + counts[1] + counts[2] == 10);
  CHECK_THROWS(cv_fold_ids(4, 5, 1));
  // Leave-one-out accepted.
  CHECK_NOTHROW(cv_fold_ids(6, 6, 1));
}

TEST_CASE("tune_cv determinism and surface consistency") {
  const DesignMatrix D = normalize_design(random_matrix(36, 10, 1008));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(10);
  theta[1] = 1.2;
  const Eigen::VectorXd Y = D.X * theta + 0.6 * random_vector(36, 1009);
  PenaltyGrid grid;
  grid.lambda1_values = log_spaced(0.05, 1.5, 6);
  grid.lambda2_values = log_spaced(0.1, 10.0, 5);

  const TuneResult a = tune_cv(Estimator::lava, D, Y, grid, 4, 99);
  const TuneResult b = tune_cv(Estimator::lava, D, Y, grid, 4, 99);
  CHECK(a.chosen.lambda1 == b.chosen.lambda1);
  CHECK(a.chosen.lambda2 == b.chosen.lambda2);
  REQUIRE(a.surface.size() == b.surface.size());
  for (std::size_t i = 0; i < a.surface.size(); ++i) {
    CHECK(a.surface[i].criterion == b.surface[i].criterion);
  }

  double best = kInf;
  for (const auto& pt : a.surface) best = std::min(best, pt.criterion);
  CHECK(best == doctest::Approx(a.best_criterion));

  // Leave-one-out runs.
  PenaltyGrid tiny;
  tiny.lambda1_values = log_spaced(0.2, 1.0, 2);
  tiny.lambda2_values = log_spaced(0.5, 2.0, 2);
  CHECK_NOTHROW(tune_cv(Estimator::lasso, D, Y, tiny, 36, 5));
  CHECK_THROWS(tune_cv(Estimator::ml, D, Y, tiny, 4, 5));
}

TEST_CASE("cv criterion symmetric across duplicated folds") {
  // Two identical blocks and a 2-fold split aligned with them: each fold
  // predicts data identical to its training half.
  const Eigen::MatrixXd Xb = random_matrix(12, 4, 1010);
  Eigen::MatrixXd X(24, 4);
  X << Xb, Xb;
  Eigen::VectorXd yb = random_vector(12, 1011);
  Eigen::VectorXd Y(24);
  Y << yb, yb;
  const DesignMatrix D = normalize_design(X);
  std::vector<int> folds(24);
  for (int i = 0; i < 24; ++i) folds[i] = i < 12 ? 0 : 1;
  PenaltyGrid grid;
  grid.lambda1_values = log_spaced(0.1, 1.0, 3);
  grid.lambda2_values = log_spaced(0.5, 2.0, 2);
  const TuneResult res =
      tune_cv(Estimator::lasso, D, Y, grid, 2, 1, {}, &folds);
  // With identical halves the held-out error equals the in-sample error of
  // the other half; just check it ran everywhere.
  CHECK(res.failures == 0);
  for (const auto& pt : res.surface) CHECK(!std::isnan(pt.criterion));
}

TEST_CASE("cv invariant to row permutation with explicit folds") {
  const Eigen::MatrixXd X = random_matrix(20, 5, 1012);
  const Eigen::VectorXd Y = random_vector(20, 1013);
  const DesignMatrix D = normalize_design(X);
  std::vector<int> folds = cv_fold_ids(20, 4, 3);

  std::vector<int> perm(20);
  for (int i = 0; i < 20; ++i) perm[i] = i;
  std::mt19937_64 eng(14);
  std::shuffle(perm.begin(), perm.end(), eng);
  Eigen::MatrixXd Xp(20, 5);
  Eigen::VectorXd Yp(20);
  std::vector<int> folds_p(20);
  for (int i = 0; i < 20; ++i) {
    Xp.row(i) = X.row(perm[i]);
    Yp[i] = Y[perm[i]];
    folds_p[static_cast<std::size_t>(i)] = folds[static_cast<std::size_t>(perm[i])];
  }
  const DesignMatrix Dp = normalize_design(Xp);

  PenaltyGrid grid;
  grid.lambda1_values = log_spaced(0.1, 1.0, 4);
  grid.lambda2_values = log_spaced(0.5, 2.0, 2);
  const TuneResult a = tune_cv(Estimator::lasso, D, Y, grid, 4, 1, {}, &folds);
  const TuneResult b =
      tune_cv(Estimator::lasso, Dp, Yp, grid, 4, 1, {}, &folds_p);
  REQUIRE(a.surface.size() == b.surface.size());
  for (std::size_t i = 0; i < a.surface.size(); ++i) {
    CHECK(a.surface[i].criterion ==
          doctest::Approx(b.surface[i].criterion).epsilon(1e-10));
  }
}

TEST_CASE("SURE-chosen lava lands near the true-risk oracle at desk scale") {
  const int n = 100, p = 200, seeds = 20;
  const Eigen::MatrixXd X = random_matrix(n, p, 1014);
  const DesignMatrix D = normalize_design(X);
  const Eigen::VectorXd theta = [&] {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(p);
    t[0] = 3.0;
    return t;
  }();
  const Eigen::VectorXd mu = X * theta;
  const PenaltyGrid grid = default_regression_grid(n, p, 1.0, 30, 30);
  const auto points = enumerate_grid(Estimator::lava, grid);

  double sum_chosen = 0.0;
  std::vector<double> point_risk_sums(points.size(), 0.0);
  for (int s = 0; s < seeds; ++s) {
    RngStream stream(5000, s);
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) Y[i] = mu[i] + stream.normal();

    const TuneResult res = tune_sure(Estimator::lava, D, Y, grid, 1.0);
    const RegressionFit chosen_fit =
        fit_estimator(Estimator::lava, D, Y, res.chosen);
    sum_chosen += (chosen_fit.fitted - mu).squaredNorm() / n;

    detail::for_each_grid_fit(
        Estimator::lava, D, Y, grid, SolveOptions{},
        [&](std::size_t idx, const detail::GridFitInfo& info) {
          point_risk_sums[idx] += (*info.fitted - mu).squaredNorm() / n;
        },
        [&](std::size_t) {});
  }
  // The grid-oracle point minimizes the risk estimated over the same seeds.
  double oracle_sum = kInf;
  for (double v : point_risk_sums) oracle_sum = std::min(oracle_sum, v);
  CHECK(sum_chosen / seeds <= 1.25 * oracle_sum / seeds);
}
