#pragma once

#include <Eigen/Core>

namespace lava {

/// Fixed design with column scales s_j = sqrt(n^{-1} sum_i x_ij^2). When
/// normalized, X holds raw columns divided by their scales so that
/// n^{-1}[X'X]_jj = 1; coefficients on the normalized scale map back to the
/// original scale by dividing by the stored scale.
struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd column_scales;
  bool normalized = false;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  /// Raw-scale design (undoes the normalization).
  Eigen::MatrixXd raw() const;
};

/// Scales each column to unit second moment. Throws on an all-zero column,
/// naming its index.
DesignMatrix normalize_design(const Eigen::MatrixXd& raw);

/// Wraps a matrix without rescaling (scales set to 1).
DesignMatrix unnormalized_design(const Eigen::MatrixXd& raw);

}  // namespace lava
