#include "lava/estimators.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lava {

namespace {

double penalized_objective(const DesignMatrix& D, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& delta,
                           const PenaltyPair& p) {
  const double n = static_cast<double>(D.n());
  double obj = (y - D.X * (beta + delta)).squaredNorm() / n;
  const double b2 = beta.squaredNorm();
  const double d1 = delta.lpNorm<1>();
  if (b2 > 0.0) obj += p.lambda2 * b2;
  if (d1 > 0.0) obj += p.lambda1 * d1;
  return obj;
}

}  // namespace

RegressionFit fit_estimator(Estimator kind, const DesignMatrix& D,
                            const Eigen::VectorXd& y,
                            const PenaltyPair& penalties,
                            const SolveOptions& opts,
                            const RidgeProjection* proj) {
  const Eigen::Index p = D.p();
  RegressionFit out;
  out.kind = kind;
  out.penalties = penalties;
  switch (kind) {
    case Estimator::lava:
    case Estimator::post_lava: {
      LavaRegressionFit fit =
          fit_lava_regression(D, y, penalties, opts, proj);
      if (kind == Estimator::post_lava) {
        fit = fit_post_lava_regression(fit, D, y);
      }
      out.theta = fit.theta_hat;
      out.beta = fit.beta_hat;
      out.delta = fit.delta_hat;
      out.active_set = fit.active_set;
      out.fitted = fit.fitted;
      out.kkt_residual = fit.lasso_kkt;
      out.converged = fit.converged;
      out.objective =
          penalized_objective(D, y, out.beta, out.delta, penalties);
      break;
    }
    case Estimator::lasso:
    case Estimator::post_lasso: {
      LassoFit lf = fit_lasso(D.X, y, penalties.lambda1, opts);
      out.beta = Eigen::VectorXd::Zero(p);
      out.delta = lf.delta;
      out.active_set = lf.active_set;
      out.kkt_residual = lf.kkt_residual;
      out.converged = lf.converged;
      if (kind == Estimator::post_lasso) {
        out.delta = least_squares_on_support(D.X, y, lf.active_set);
      }
      out.theta = out.delta;
      out.fitted = D.X * out.theta;
      out.objective = lasso_objective(D.X, y, out.delta, penalties.lambda1);
      break;
    }
    case Estimator::ridge: {
      out.beta = proj != nullptr ? proj->ridge_coefficients(y)
                                 : fit_ridge(D.X, y, penalties.lambda2);
      out.delta = Eigen::VectorXd::Zero(p);
      out.theta = out.beta;
      out.fitted = D.X * out.theta;
      out.objective = (y - out.fitted).squaredNorm() / D.n() +
                      penalties.lambda2 * out.beta.squaredNorm();
      break;
    }
    case Estimator::elastic_net: {
      LassoFit lf = fit_elastic_net(D.X, y, penalties, opts);
      out.beta = Eigen::VectorXd::Zero(p);
      out.delta = lf.delta;
      out.theta = lf.delta;
      out.active_set = lf.active_set;
      out.fitted = D.X * out.theta;
      out.kkt_residual = lf.kkt_residual;
      out.converged = lf.converged;
      out.objective = lf.objective;
      break;
    }
    case Estimator::ml: {
      std::vector<int> all(static_cast<std::size_t>(p));
      for (Eigen::Index j = 0; j < p; ++j) all[j] = static_cast<int>(j);
      out.delta = least_squares_on_support(D.X, y, all);
      out.beta = Eigen::VectorXd::Zero(p);
      out.theta = out.delta;
      out.active_set = all;
      out.fitted = D.X * out.theta;
      out.objective = (y - out.fitted).squaredNorm() / D.n();
      break;
    }
  }
  return out;
}

}  // namespace lava
