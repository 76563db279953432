#include "lava/shrinkage.hpp"

#include <stdexcept>

namespace lava {

Estimator parse_estimator(const std::string& name) {
  if (name == "lava") return Estimator::lava;
  if (name == "post-lava" || name == "post_lava") return Estimator::post_lava;
  if (name == "lasso") return Estimator::lasso;
  if (name == "post-lasso" || name == "post_lasso") return Estimator::post_lasso;
  if (name == "ridge") return Estimator::ridge;
  if (name == "elastic-net" || name == "elastic_net" || name == "enet") {
    return Estimator::elastic_net;
  }
  if (name == "ml") return Estimator::ml;
  throw std::invalid_argument("unknown estimator: " + name);
}

ScalarSplit shrink_lava(double z, const PenaltyPair& p) {
  const LavaWeights lw = lava_weights(p);
  ScalarSplit s;
  if (std::isinf(lw.w)) {
    // Threshold never crossed: pure dense part. Covers both the ridge limit
    // (lambda1 = inf) and the k = 0 identity corner (lambda2 = 0).
    s.d1 = 0.0;
    s.d2 = (1.0 - lw.k) * z;
    return s;
  }
  s.d1 = soft_threshold(z, lw.w);
  s.d2 = (z - s.d1) * (1.0 - lw.k);
  return s;
}

double shrink_post_lava(double z, const PenaltyPair& p) {
  const LavaWeights lw = lava_weights(p);
  if (std::abs(z) > lw.w) return z;
  return (1.0 - lw.k) * z;
}

double shrink_ridge(double z, double lambda_r) {
  if (std::isnan(lambda_r) || lambda_r < 0.0) {
    throw std::invalid_argument("shrink_ridge: lambda_r must be >= 0");
  }
  if (std::isinf(lambda_r)) return 0.0;
  return z / (1.0 + lambda_r);
}

double shrink_elastic_net(double z, const PenaltyPair& p) {
  p.validate();
  if (std::isinf(p.lambda1) || std::isinf(p.lambda2)) {
    throw std::invalid_argument("shrink_elastic_net: penalties must be finite");
  }
  return soft_threshold(z, p.lambda1 / 2.0) / (1.0 + p.lambda2);
}

double shrink_post_lasso(double z, double lambda_l) {
  if (std::isnan(lambda_l) || lambda_l < 0.0) {
    throw std::invalid_argument("shrink_post_lasso: lambda_l must be >= 0");
  }
  return std::abs(z) > lambda_l / 2.0 ? z : 0.0;
}

double apply_shrinkage(Estimator kind, double z, const PenaltyPair& p) {
  switch (kind) {
    case Estimator::lava: return shrink_lava(z, p).total();
    case Estimator::post_lava: return shrink_post_lava(z, p);
    case Estimator::lasso: return soft_threshold(z, p.lambda1 / 2.0);
    case Estimator::post_lasso: return shrink_post_lasso(z, p.lambda1);
    case Estimator::ridge: return shrink_ridge(z, p.lambda2);
    case Estimator::elastic_net: return shrink_elastic_net(z, p);
    case Estimator::ml: return z;
  }
  throw std::invalid_argument("apply_shrinkage: unknown estimator kind");
}

}  // namespace lava
