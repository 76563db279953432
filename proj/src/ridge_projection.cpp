#include "lava/ridge_projection.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lava {

namespace {

std::shared_ptr<const detail::SvdParts> factorize(const Eigen::MatrixXd& X) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU |
                                            Eigen::ComputeThinV);
  auto parts = std::make_shared<detail::SvdParts>();
  parts->U = svd.matrixU();
  parts->V = svd.matrixV();
  parts->d = svd.singularValues();
  parts->n = X.rows();
  return parts;
}

}  // namespace

RidgeProjection::RidgeProjection(const Eigen::MatrixXd& X, double lambda2)
    : RidgeProjection(factorize(X), lambda2) {}

RidgeProjection::RidgeProjection(std::shared_ptr<const detail::SvdParts> parts,
                                 double lambda2)
    : parts_(std::move(parts)), lambda2_(lambda2) {
  if (!(lambda2 > 0.0) || std::isinf(lambda2)) {
    throw std::invalid_argument(
        "RidgeProjection: lambda2 must be positive and finite");
  }
  const double nl = static_cast<double>(parts_->n) * lambda2;
  const Eigen::Index r = parts_->d.size();
  pw_.resize(r);
  kw_half_minus_one_.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double d2 = parts_->d[i] * parts_->d[i];
    pw_[i] = d2 / (d2 + nl);
    kw_half_minus_one_[i] = std::sqrt(nl / (d2 + nl)) - 1.0;
  }
}

Eigen::MatrixXd RidgeProjection::apply_P(const Eigen::MatrixXd& v) const {
  return parts_->U * (pw_.asDiagonal() * (parts_->U.transpose() * v));
}

Eigen::MatrixXd RidgeProjection::apply_K(const Eigen::MatrixXd& v) const {
  return v - apply_P(v);
}

Eigen::MatrixXd RidgeProjection::apply_K_half(const Eigen::MatrixXd& v) const {
  return v + parts_->U *
                 (kw_half_minus_one_.asDiagonal() * (parts_->U.transpose() * v));
}

Eigen::VectorXd RidgeProjection::ridge_coefficients(
    const Eigen::VectorXd& v) const {
  const double nl = static_cast<double>(parts_->n) * lambda2_;
  Eigen::VectorXd w(parts_->d.size());
  for (Eigen::Index i = 0; i < parts_->d.size(); ++i) {
    w[i] = parts_->d[i] / (parts_->d[i] * parts_->d[i] + nl);
  }
  return parts_->V * (w.asDiagonal() * (parts_->U.transpose() * v));
}

double RidgeProjection::trace_P() const { return pw_.sum(); }

double RidgeProjection::trace_P_sq() const { return pw_.squaredNorm(); }

double RidgeProjection::op_norm_P_sq() const {
  return pw_.size() > 0 ? pw_.maxCoeff() * pw_.maxCoeff() : 0.0;
}

double RidgeProjection::op_norm_K() const {
  // Directions outside the left singular span carry eigenvalue 1.
  if (parts_->d.size() < parts_->n) return 1.0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < pw_.size(); ++i) {
    worst = std::max(worst, 1.0 - pw_[i]);
  }
  return worst;
}

Eigen::VectorXd RidgeProjection::v_matrix_diag() const {
  // V_{l2} = V diag(l2^2 s_i / (s_i + l2)^2) V' with s_i = d_i^2/n; null
  // directions of S contribute zero.
  Eigen::VectorXd w(parts_->d.size());
  for (Eigen::Index i = 0; i < parts_->d.size(); ++i) {
    const double s = parts_->d[i] * parts_->d[i] / static_cast<double>(parts_->n);
    const double denom = s + lambda2_;
    w[i] = lambda2_ * lambda2_ * s / (denom * denom);
  }
  return parts_->V.array().square().matrix() * w;
}

double RidgeProjection::v_quadratic(const Eigen::VectorXd& beta) const {
  Eigen::VectorXd proj = parts_->V.transpose() * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < parts_->d.size(); ++i) {
    const double s = parts_->d[i] * parts_->d[i] / static_cast<double>(parts_->n);
    const double denom = s + lambda2_;
    total += lambda2_ * lambda2_ * s / (denom * denom) * proj[i] * proj[i];
  }
  return total;
}

Eigen::MatrixXd RidgeProjection::k_gram() const {
  Eigen::VectorXd w(parts_->d.size());
  for (Eigen::Index i = 0; i < parts_->d.size(); ++i) {
    const double s = parts_->d[i] * parts_->d[i] / static_cast<double>(parts_->n);
    w[i] = lambda2_ * s / (s + lambda2_);
  }
  return parts_->V * w.asDiagonal() * parts_->V.transpose();
}

DesignSvd::DesignSvd(const Eigen::MatrixXd& X)
    : parts_(factorize(X)), cols_(X.cols()) {}

Eigen::VectorXd DesignSvd::ridge_coefficients(const Eigen::VectorXd& y,
                                              double lambda2) const {
  if (!(lambda2 >= 0.0)) {
    throw std::invalid_argument("DesignSvd: lambda2 >= 0 required");
  }
  const Eigen::VectorXd& d = parts_->d;
  if (lambda2 == 0.0) {
    const double dmax = d.size() > 0 ? d[0] : 0.0;
    const double tol = std::max(parts_->n, cols_) *
                       std::numeric_limits<double>::epsilon() * dmax;
    if (cols_ > parts_->n || d.minCoeff() <= tol) {
      throw std::invalid_argument(
          "DesignSvd: lambda2 = 0 requires full column rank");
    }
  }
  const double nl = static_cast<double>(parts_->n) * lambda2;
  Eigen::VectorXd w(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    w[i] = std::isinf(nl) ? 0.0 : d[i] / (d[i] * d[i] + nl);
  }
  return parts_->V * (w.asDiagonal() * (parts_->U.transpose() * y));
}

double DesignSvd::trace_P(double lambda2) const {
  const double nl = static_cast<double>(parts_->n) * lambda2;
  double tr = 0.0;
  for (Eigen::Index i = 0; i < parts_->d.size(); ++i) {
    const double d2 = parts_->d[i] * parts_->d[i];
    tr += std::isinf(nl) ? 0.0 : d2 / (d2 + nl);
  }
  return tr;
}

Eigen::Index DesignSvd::rank() const {
  const Eigen::VectorXd& d = parts_->d;
  const double dmax = d.size() > 0 ? d[0] : 0.0;
  const double tol = std::max(parts_->n, cols_) *
                     std::numeric_limits<double>::epsilon() * dmax;
  Eigen::Index r = 0;
  while (r < d.size() && d[r] > tol) ++r;
  return r;
}

}  // namespace lava
