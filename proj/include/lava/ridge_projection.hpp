#pragma once

#include <Eigen/Core>
#include <memory>

#include "lava/design.hpp"

namespace lava {

namespace detail {
struct SvdParts {
  Eigen::MatrixXd U;  // n x r
  Eigen::VectorXd d;  // r singular values
  Eigen::MatrixXd V;  // p x r
  Eigen::Index n = 0;
};
}  // namespace detail

/// Ridge-projection operators P = X(X'X + n lambda2 I)^{-1}X' and K = I - P,
/// held through the SVD of X so no n x n matrix is ever formed: P acts as
/// U diag(d_i^2/(d_i^2 + n lambda2)) U' and K^{1/2} as the identity plus a
/// diagonal correction on the left singular basis. Instances built from the
/// same DesignSvd share the factorization.
class RidgeProjection {
 public:
  RidgeProjection(const Eigen::MatrixXd& X, double lambda2);
  RidgeProjection(const DesignMatrix& D, double lambda2)
      : RidgeProjection(D.X, lambda2) {}
  RidgeProjection(std::shared_ptr<const detail::SvdParts> parts,
                  double lambda2);

  double lambda2() const { return lambda2_; }
  Eigen::Index n() const { return parts_->n; }

  Eigen::MatrixXd apply_P(const Eigen::MatrixXd& v) const;
  Eigen::MatrixXd apply_K(const Eigen::MatrixXd& v) const;
  Eigen::MatrixXd apply_K_half(const Eigen::MatrixXd& v) const;

  /// (X'X + n lambda2 I)^{-1} X' v.
  Eigen::VectorXd ridge_coefficients(const Eigen::VectorXd& v) const;

  double trace_P() const;
  double trace_P_sq() const;
  double op_norm_P_sq() const;  // |P^2| = largest eigenvalue of P^2
  double op_norm_K() const;

  /// Diagonal of V_{lambda2} = (S + l2 I)^{-1} S (S + l2 I)^{-1} l2^2 with
  /// S = X'X/n; its maximum is the bar-V of the score bound.
  Eigen::VectorXd v_matrix_diag() const;

  /// beta' V_{lambda2} beta.
  double v_quadratic(const Eigen::VectorXd& beta) const;

  /// X' K X / n = lambda2 S (S + lambda2 I)^{-1}, the Gram matrix of the
  /// transformed design divided by n.
  Eigen::MatrixXd k_gram() const;

  const Eigen::MatrixXd& left_vectors() const { return parts_->U; }
  const Eigen::VectorXd& singular_values() const { return parts_->d; }
  const Eigen::VectorXd& p_weights() const { return pw_; }

 private:
  std::shared_ptr<const detail::SvdParts> parts_;
  double lambda2_;
  Eigen::VectorXd pw_;  // d^2/(d^2 + n l2)
  Eigen::VectorXd kw_half_minus_one_;
};

/// One SVD of a design, reused to build projections and ridge fits for many
/// lambda2 values.
class DesignSvd {
 public:
  explicit DesignSvd(const Eigen::MatrixXd& X);
  explicit DesignSvd(const DesignMatrix& D) : DesignSvd(D.X) {}

  RidgeProjection projection(double lambda2) const {
    return RidgeProjection(parts_, lambda2);
  }

  /// (X'X + n lambda2 I)^{-1} X' y; lambda2 = 0 requires full column rank.
  Eigen::VectorXd ridge_coefficients(const Eigen::VectorXd& y,
                                     double lambda2) const;

  double trace_P(double lambda2) const;
  Eigen::Index rank() const;
  const Eigen::MatrixXd& left_vectors() const { return parts_->U; }

 private:
  std::shared_ptr<const detail::SvdParts> parts_;
  Eigen::Index cols_ = 0;
};

}  // namespace lava
