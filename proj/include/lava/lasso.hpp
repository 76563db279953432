#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "lava/design.hpp"
#include "lava/penalties.hpp"

namespace lava {

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 100000;  // sweeps
  std::optional<Eigen::VectorXd> warm_start;
};

struct LassoFit {
  Eigen::VectorXd delta;
  std::vector<int> active_set;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// (1/n)|y - X d|^2 + lambda1 |d|_1.
double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& delta, double lambda1);

/// (1/n)|y - X t|^2 + lambda2 |t|^2 + lambda1 |t|_1.
double elastic_net_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& theta,
                             const PenaltyPair& p);

/// Max subgradient violation of the lasso optimality conditions at delta.
double check_kkt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& delta, double lambda1);

/// Cyclic coordinate descent for the l1-penalized least squares program.
/// Columns need not be normalized. Convergence requires both a small maximum
/// coefficient change per sweep and a small KKT residual; hitting max_iter
/// returns the fit flagged not converged.
LassoFit fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   double lambda1, const SolveOptions& opts = {});

LassoFit fit_lasso(const DesignMatrix& D, const Eigen::VectorXd& y,
                   double lambda1, const SolveOptions& opts = {});

/// Coordinate descent with ridge-adjusted denominators for the elastic net
/// program. lambda2 = 0 reduces to fit_lasso.
LassoFit fit_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const PenaltyPair& p, const SolveOptions& opts = {});

LassoFit fit_elastic_net(const DesignMatrix& D, const Eigen::VectorXd& y,
                         const PenaltyPair& p, const SolveOptions& opts = {});

/// (X'X + n lambda2 I)^{-1} X'y via the SVD of X. lambda2 = 0 is accepted
/// only for designs with full column rank.
Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double lambda2);

Eigen::VectorXd fit_ridge(const DesignMatrix& D, const Eigen::VectorXd& y,
                          double lambda2);

}  // namespace lava
