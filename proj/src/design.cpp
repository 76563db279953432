#include "lava/design.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lava {

Eigen::MatrixXd DesignMatrix::raw() const {
  if (!normalized) return X;
  return X * column_scales.asDiagonal();
}

DesignMatrix normalize_design(const Eigen::MatrixXd& raw) {
  const Eigen::Index n = raw.rows();
  const Eigen::Index p = raw.cols();
  if (n < 1 || p < 1) {
    throw std::invalid_argument("normalize_design: empty matrix");
  }
  DesignMatrix d;
  d.column_scales.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double ms = raw.col(j).squaredNorm() / static_cast<double>(n);
    if (!(ms > 0.0)) {
      throw std::invalid_argument("normalize_design: column " +
                                  std::to_string(j) + " is all zero");
    }
    d.column_scales[j] = std::sqrt(ms);
  }
  d.X = raw * d.column_scales.cwiseInverse().asDiagonal();
  d.normalized = true;
  return d;
}

DesignMatrix unnormalized_design(const Eigen::MatrixXd& raw) {
  DesignMatrix d;
  d.X = raw;
  d.column_scales = Eigen::VectorXd::Ones(raw.cols());
  d.normalized = false;
  return d;
}

}  // namespace lava
