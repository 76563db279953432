#pragma once

#include <Eigen/Core>
#include <vector>

#include "lava/design.hpp"
#include "lava/lasso.hpp"
#include "lava/lava_regression.hpp"
#include "lava/penalties.hpp"
#include "lava/ridge_projection.hpp"

namespace lava {

/// Uniform fit record across estimator kinds; coefficients live on the scale
/// of the design that was passed in.
struct RegressionFit {
  Estimator kind = Estimator::lava;
  PenaltyPair penalties;
  Eigen::VectorXd theta;
  Eigen::VectorXd beta;   // dense part (zero for pure-sparse estimators)
  Eigen::VectorXd delta;  // sparse part (equals theta for lasso/enet)
  std::vector<int> active_set;
  Eigen::VectorXd fitted;
  double objective = 0.0;
  double kkt_residual = 0.0;
  bool converged = true;
};

/// Fits any estimator kind on (D, y). For lava-family fits a matching
/// precomputed projection can be supplied. ml is plain least squares via the
/// pseudo-inverse.
RegressionFit fit_estimator(Estimator kind, const DesignMatrix& D,
                            const Eigen::VectorXd& y,
                            const PenaltyPair& penalties,
                            const SolveOptions& opts = {},
                            const RidgeProjection* proj = nullptr);

}  // namespace lava
