#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "lava/design.hpp"
#include "lava/lasso.hpp"
#include "lava/penalties.hpp"
#include "lava/ridge_projection.hpp"

namespace lava {

struct LavaRegressionFit {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd delta_hat;
  Eigen::VectorXd theta_hat;
  std::vector<int> active_set;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residual;
  PenaltyPair penalties;
  int lasso_iterations = 0;
  double lasso_kkt = 0.0;
  bool converged = true;
};

/// Profiled lava: the sparse part solves the lasso on K^{1/2}-transformed
/// data, the dense part is the ridge coefficient of the partial residual.
/// lambda2 = inf falls back to the pure lasso (beta = 0), lambda1 = inf to the
/// pure ridge (delta = 0). A matching precomputed projection may be passed to
/// avoid refactorizing.
LavaRegressionFit fit_lava_regression(const DesignMatrix& D,
                                      const Eigen::VectorXd& Y,
                                      const PenaltyPair& penalties,
                                      const SolveOptions& opts = {},
                                      const RidgeProjection* proj = nullptr);

/// Least-squares refit of the sparse part on the selected support via the
/// Moore-Penrose pseudo-inverse. An empty active set returns the lava fit
/// unchanged.
LavaRegressionFit fit_post_lava_regression(const LavaRegressionFit& fit,
                                           const DesignMatrix& D,
                                           const Eigen::VectorXd& Y);

struct DfSure {
  double df = 0.0;
  double sure = 0.0;
};

/// Degrees of freedom rank(Xt_J) + tr(Kt_J P) of the lava mean fit and the
/// associated unbiased prediction-risk estimate.
DfSure df_sure_lava(const LavaRegressionFit& fit, const DesignMatrix& D,
                    const Eigen::VectorXd& Y, double sigma_u2,
                    const RidgeProjection* proj = nullptr);

/// Same computation from the raw pieces of a fit (used by tuning loops that
/// never assemble a full LavaRegressionFit).
DfSure df_sure_lava_parts(const DesignMatrix& D, const Eigen::VectorXd& Y,
                          const std::vector<int>& active_set,
                          const Eigen::VectorXd& fitted, double sigma_u2,
                          const RidgeProjection& proj);

/// Per-design cache for repeated lava df/SURE evaluations along a penalty
/// grid: holds U'X and X'X so each grid point costs O(r m^2 + m^3) instead of
/// a fresh SVD. Projections passed to df_sure must share the cache's
/// factorization (come from the same DesignSvd).
class LavaSureCache {
 public:
  LavaSureCache(const DesignSvd& svd, const Eigen::MatrixXd& X);

  DfSure df_sure(const RidgeProjection& proj,
                 const std::vector<int>& active_set,
                 const Eigen::VectorXd& fitted, const Eigen::VectorXd& Y,
                 double sigma_u2) const;

 private:
  Eigen::MatrixXd w_;     // U'X, r x p
  Eigen::MatrixXd gram_;  // X'X, p x p
};

/// Least squares of target on the selected columns via the Moore-Penrose
/// pseudo-inverse; returns a full-length coefficient vector supported on
/// `support`.
Eigen::VectorXd least_squares_on_support(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& target,
                                         const std::vector<int>& support);

/// Standard df for the baselines: tr(P) for ridge, |J| for lasso, the trace
/// of the active-set ridge hat matrix for the elastic net.
DfSure df_sure_baseline(Estimator kind, const DesignMatrix& D,
                        const Eigen::VectorXd& Y,
                        const Eigen::VectorXd& fitted,
                        const std::vector<int>& active_set,
                        const PenaltyPair& penalties, double sigma_u2,
                        const RidgeProjection* proj = nullptr);

/// Empirical (1-alpha) quantile over seeded draws U ~ N(0, sigma_u^2 I) of
/// the maximal score norm |(2/n) X' K U|_inf.
double score_quantile(const DesignMatrix& D, double lambda2, double sigma_u,
                      double alpha, std::int64_t reps, std::uint64_t seed,
                      const RidgeProjection* proj = nullptr);

/// Union-bound/Mill's-inequality level 2 sigma_u sqrt(barV log(2p/alpha)/n).
double classical_score_bound(const RidgeProjection& proj, double sigma_u,
                             double alpha);

struct DeviationReport {
  double lambda_quantile = 0.0;   // simulated (1-alpha) score quantile
  double classical_bound = 0.0;   // union-bound level
  double bar_v = 0.0;             // max diagonal of V_{lambda2}
  double b2 = 0.0;
  double b3 = 0.0;
  double b4 = 0.0;
  double k_norm = 1.0;            // |K_{lambda2}|
};

/// Deviation-bound pieces of the prediction-error bound for a caller-supplied
/// dense candidate beta0. The l1-rate piece needs the design impact factor
/// and is left to the caller (see restricted_eigenvalue_surrogate).
DeviationReport bound_components(const DesignMatrix& D, double lambda2,
                                 const Eigen::VectorXd& beta0, double sigma_u,
                                 double alpha, double eps, std::int64_t reps,
                                 std::uint64_t seed);

/// Approximate restricted eigenvalue kappa(c, support, lambda2) of the
/// transformed Gram matrix over the l1 cone, by structured and random
/// directions plus local refinement. The return value is an upper estimate of
/// the true infimum. Guarded to p <= 12.
double restricted_eigenvalue_surrogate(const DesignMatrix& D, double lambda2,
                                       const std::vector<int>& support,
                                       double c, std::uint64_t seed = 1,
                                       int n_directions = 4000);

}  // namespace lava
