#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace lava {

/// count log-spaced values from lo to hi inclusive.
inline Eigen::VectorXd log_spaced(double lo, double hi, int count) {
  if (count < 1 || lo <= 0.0 || hi < lo) {
    throw std::invalid_argument("log_spaced: need 0 < lo <= hi, count >= 1");
  }
  Eigen::VectorXd v(count);
  if (count == 1) {
    v[0] = lo;
    return v;
  }
  const double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int i = 0; i < count; ++i) v[i] = std::exp(std::log(lo) + i * step);
  return v;
}

/// Strictly increasing candidate levels for each penalty.
struct PenaltyGrid {
  Eigen::VectorXd lambda1_values;
  Eigen::VectorXd lambda2_values;

  void validate() const {
    auto check = [](const Eigen::VectorXd& v, const char* name) {
      if (v.size() == 0) {
        throw std::invalid_argument(std::string("PenaltyGrid: empty ") + name);
      }
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) {
          throw std::invalid_argument(std::string("PenaltyGrid: ") + name +
                                      " must be positive");
        }
        if (i > 0 && !(v[i] > v[i - 1])) {
          throw std::invalid_argument(std::string("PenaltyGrid: ") + name +
                                      " must be strictly increasing");
        }
      }
    };
    check(lambda1_values, "lambda1_values");
    check(lambda2_values, "lambda2_values");
  }

  /// Default oracle grid for the sequence model: 50 log-spaced lambda1 on the
  /// sigma scale, 50 log-spaced lambda2 (scale-free mixing ratio).
  static PenaltyGrid sequence_default(double sigma, int count = 50) {
    PenaltyGrid g;
    g.lambda1_values = log_spaced(1e-4 * sigma, 1e4 * sigma, count);
    g.lambda2_values = log_spaced(1e-4, 1e4, count);
    return g;
  }
};

}  // namespace lava
