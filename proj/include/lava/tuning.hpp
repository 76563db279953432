#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "lava/design.hpp"
#include "lava/grid.hpp"
#include "lava/lasso.hpp"
#include "lava/penalties.hpp"
#include "lava/ridge_projection.hpp"

namespace lava {

struct NoiseEstimateOptions {
  double c = 0.05;      // significance in the penalty scaling
  double rel_tol = 1e-4;
  int max_iter = 20;
};

/// Preliminary noise variance from the iterated lasso residual; conservative.
struct NoiseEstimate {
  double sigma2 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool df_floored = false;  // |J| >= n forced the residual df to 1
};

NoiseEstimate estimate_noise_variance(const DesignMatrix& D,
                                      const Eigen::VectorXd& Y,
                                      const NoiseEstimateOptions& opts = {});

enum class TuneMethod { sure, cv };

struct SurfacePoint {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double criterion = 0.0;  // NaN marks a skipped (failed) point
};

struct TuneResult {
  PenaltyPair chosen;
  double best_criterion = 0.0;
  std::vector<SurfacePoint> surface;
  TuneMethod method = TuneMethod::sure;
  double sigma_u2_used = 0.0;
  int failures = 0;
};

/// 30 log-spaced lambda1 in [0.01, 10] x (2 sigma_u sqrt(log(2p)/n)) and 30
/// log-spaced lambda2 in [1e-4, 1e4].
PenaltyGrid default_regression_grid(Eigen::Index n, Eigen::Index p,
                                    double sigma_u2, int count1 = 30,
                                    int count2 = 30);

/// Grid points in the canonical order shared by all tuning passes: pairs
/// (lambda1 asc x lambda2 asc) for lava/elastic net, lambda1 singletons with
/// lambda2 = inf for lasso/post-lasso, lambda2 singletons with lambda1 = inf
/// for ridge.
std::vector<PenaltyPair> enumerate_grid(Estimator kind,
                                        const PenaltyGrid& grid);

/// SURE-minimizing grid choice. Not available for post-lava (no unbiased risk
/// estimate exists); reuse the lava choice instead.
TuneResult tune_sure(Estimator kind, const DesignMatrix& D,
                     const Eigen::VectorXd& Y, const PenaltyGrid& grid,
                     double sigma_u2, const SolveOptions& opts = {});

std::vector<int> cv_fold_ids(Eigen::Index n, int folds, std::uint64_t seed);

/// k-fold cross-validation: contiguous folds after a seeded shuffle, training
/// designs renormalized per fold when D is normalized, criterion the mean
/// held-out squared prediction error.
TuneResult tune_cv(Estimator kind, const DesignMatrix& D,
                   const Eigen::VectorXd& Y, const PenaltyGrid& grid,
                   int folds, std::uint64_t seed, const SolveOptions& opts = {},
                   const std::vector<int>* explicit_fold_ids = nullptr);

/// Cross-validates lava and post-lava in one pass over the shared lasso
/// path (the refit reuses each grid point's fit). Returns {lava, post-lava}.
std::pair<TuneResult, TuneResult> tune_cv_lava_pair(
    const DesignMatrix& D, const Eigen::VectorXd& Y, const PenaltyGrid& grid,
    int folds, std::uint64_t seed, const SolveOptions& opts = {},
    const std::vector<int>* explicit_fold_ids = nullptr);

class LavaSureCache;

namespace detail {

/// Per-point fit summary handed to grid visitors.
struct GridFitInfo {
  PenaltyPair penalties;
  const Eigen::VectorXd* theta = nullptr;
  const Eigen::VectorXd* beta = nullptr;  // dense part (lava kinds only)
  const std::vector<int>* active_set = nullptr;
  const Eigen::VectorXd* fitted = nullptr;
  const RidgeProjection* proj = nullptr;
  const LavaSureCache* sure_cache = nullptr;  // lava kinds only
};

/// Runs the warm-started path fits over the canonical grid order, invoking
/// visit(index, info) per successful point and on_failure(index) otherwise.
void for_each_grid_fit(
    Estimator kind, const DesignMatrix& D, const Eigen::VectorXd& Y,
    const PenaltyGrid& grid, const SolveOptions& opts,
    const std::function<void(std::size_t, const GridFitInfo&)>& visit,
    const std::function<void(std::size_t)>& on_failure);

/// Argmin over the surface, NaN criteria skipped, ties resolved toward the
/// lexicographically larger (lambda1, lambda2).
std::size_t select_best(const std::vector<SurfacePoint>& surface);

}  // namespace detail

}  // namespace lava
