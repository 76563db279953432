#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lava {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// The (lambda1, lambda2) tuning pair. +infinity is a valid sentinel for at
/// most one of the two levels: lambda2 = inf is the lasso limit, lambda1 = inf
/// the ridge limit.
struct PenaltyPair {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  PenaltyPair() = default;
  PenaltyPair(double l1, double l2) : lambda1(l1), lambda2(l2) { validate(); }

  void validate() const {
    if (std::isnan(lambda1) || std::isnan(lambda2) || lambda1 < 0.0 ||
        lambda2 < 0.0) {
      throw std::invalid_argument("PenaltyPair: penalties must be >= 0");
    }
    if (std::isinf(lambda1) && std::isinf(lambda2)) {
      throw std::invalid_argument(
          "PenaltyPair: lambda1 and lambda2 cannot both be infinite");
    }
  }
};

/// Mixing weight k = lambda2/(1+lambda2) and threshold w = lambda1/(2k).
/// k = 1 exactly at lambda2 = inf, k = 0 exactly at lambda2 = 0 (then w = inf
/// and the lava map is the identity).
struct LavaWeights {
  double k = 0.0;
  double w = kInf;
};

inline LavaWeights lava_weights(const PenaltyPair& p) {
  p.validate();
  LavaWeights lw;
  lw.k = std::isinf(p.lambda2) ? 1.0 : p.lambda2 / (1.0 + p.lambda2);
  if (lw.k == 0.0 || std::isinf(p.lambda1)) {
    lw.w = kInf;
  } else {
    lw.w = p.lambda1 / (2.0 * lw.k);
  }
  return lw;
}

enum class Estimator {
  lava,
  post_lava,
  lasso,
  post_lasso,
  ridge,
  elastic_net,
  ml,
};

inline const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::lava: return "lava";
    case Estimator::post_lava: return "post-lava";
    case Estimator::lasso: return "lasso";
    case Estimator::post_lasso: return "post-lasso";
    case Estimator::ridge: return "ridge";
    case Estimator::elastic_net: return "elastic-net";
    case Estimator::ml: return "ml";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name);

}  // namespace lava
