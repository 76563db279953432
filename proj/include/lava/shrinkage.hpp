#pragma once

#include "lava/penalties.hpp"

namespace lava {

/// (|z| - t)+ * sign(z), with sign(0) = 0.
inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// Dense/sparse split of the scalar lava decision: d2 is the ridge-like part,
/// d1 the thresholded part; the estimate itself is the sum.
struct ScalarSplit {
  double d2 = 0.0;
  double d1 = 0.0;
  double total() const { return d2 + d1; }
};

ScalarSplit shrink_lava(double z, const PenaltyPair& p);
double shrink_post_lava(double z, const PenaltyPair& p);
double shrink_ridge(double z, double lambda_r);
double shrink_elastic_net(double z, const PenaltyPair& p);
double shrink_post_lasso(double z, double lambda_l);

/// Scalar decision function for any estimator kind. lasso/post-lasso read
/// p.lambda1 as their single level, ridge reads p.lambda2, ml ignores both.
double apply_shrinkage(Estimator kind, double z, const PenaltyPair& p);

}  // namespace lava
