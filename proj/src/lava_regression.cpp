#include "lava/lava_regression.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "lava/normal.hpp"
#include "lava/rng.hpp"

namespace lava {

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X,
                               const std::vector<int>& idx) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = X.col(idx[k]);
  }
  return out;
}

double rank_tolerance(const Eigen::MatrixXd& M, double sigma_max) {
  return static_cast<double>(std::max(M.rows(), M.cols())) *
         std::numeric_limits<double>::epsilon() * sigma_max;
}

}  // namespace

LavaRegressionFit fit_lava_regression(const DesignMatrix& D,
                                      const Eigen::VectorXd& Y,
                                      const PenaltyPair& penalties,
                                      const SolveOptions& opts,
                                      const RidgeProjection* proj) {
  penalties.validate();
  const Eigen::Index n = D.n();
  const Eigen::Index p = D.p();
  if (Y.size() != n) {
    throw std::invalid_argument("fit_lava_regression: dimension mismatch");
  }
  if (!(penalties.lambda1 > 0.0) || !(penalties.lambda2 > 0.0)) {
    throw std::invalid_argument(
        "fit_lava_regression: both penalty levels must be positive");
  }

  LavaRegressionFit fit;
  fit.penalties = penalties;

  if (std::isinf(penalties.lambda2)) {
    // Lasso limit: no dense part.
    LassoFit lf = fit_lasso(D.X, Y, penalties.lambda1, opts);
    fit.beta_hat = Eigen::VectorXd::Zero(p);
    fit.delta_hat = lf.delta;
    fit.theta_hat = lf.delta;
    fit.active_set = lf.active_set;
    fit.fitted = D.X * lf.delta;
    fit.residual = Y - fit.fitted;
    fit.lasso_iterations = lf.iterations;
    fit.lasso_kkt = lf.kkt_residual;
    fit.converged = lf.converged;
    return fit;
  }

  std::optional<RidgeProjection> local_proj;
  if (proj == nullptr) local_proj.emplace(D.X, penalties.lambda2);
  const RidgeProjection& rp = proj ? *proj : *local_proj;

  if (std::isinf(penalties.lambda1)) {
    fit.delta_hat = Eigen::VectorXd::Zero(p);
  } else {
    const Eigen::MatrixXd Xt = rp.apply_K_half(D.X);
    const Eigen::VectorXd Yt = rp.apply_K_half(Y);
    LassoFit lf = fit_lasso(Xt, Yt, penalties.lambda1, opts);
    fit.delta_hat = lf.delta;
    fit.active_set = lf.active_set;
    fit.lasso_iterations = lf.iterations;
    fit.lasso_kkt = lf.kkt_residual;
    fit.converged = lf.converged;
  }
  fit.beta_hat = rp.ridge_coefficients(Y - D.X * fit.delta_hat);
  fit.theta_hat = fit.beta_hat + fit.delta_hat;
  fit.fitted = D.X * fit.theta_hat;
  fit.residual = Y - fit.fitted;
  return fit;
}

Eigen::VectorXd least_squares_on_support(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& target,
                                         const std::vector<int>& support) {
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(X.cols());
  if (support.empty()) return delta;
  const Eigen::MatrixXd XJ = select_columns(X, support);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(XJ, Eigen::ComputeThinU |
                                             Eigen::ComputeThinV);
  const Eigen::VectorXd& d = svd.singularValues();
  const double tol = rank_tolerance(XJ, d.size() > 0 ? d[0] : 0.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] > tol) w[i] = 1.0 / d[i];
  }
  const Eigen::VectorXd coef =
      svd.matrixV() * (w.asDiagonal() * (svd.matrixU().transpose() * target));
  for (std::size_t k = 0; k < support.size(); ++k) {
    delta[support[k]] = coef[static_cast<Eigen::Index>(k)];
  }
  return delta;
}

LavaRegressionFit fit_post_lava_regression(const LavaRegressionFit& fit,
                                           const DesignMatrix& D,
                                           const Eigen::VectorXd& Y) {
  if (fit.active_set.empty()) return fit;
  LavaRegressionFit out = fit;
  out.delta_hat =
      least_squares_on_support(D.X, Y - D.X * fit.beta_hat, fit.active_set);
  out.theta_hat = out.beta_hat + out.delta_hat;
  out.fitted = D.X * out.theta_hat;
  out.residual = Y - out.fitted;
  return out;
}

namespace {

// rank(M) and tr(Proj_col(M) P) computed together from one SVD.
struct RankTrace {
  int rank = 0;
  double trace_proj_P = 0.0;
};

RankTrace rank_and_projected_trace(const Eigen::MatrixXd& M,
                                   const RidgeProjection* proj) {
  RankTrace out;
  if (M.cols() == 0) return out;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  const Eigen::VectorXd& d = svd.singularValues();
  const double tol = rank_tolerance(M, d.size() > 0 ? d[0] : 0.0);
  int rank = 0;
  while (rank < d.size() && d[rank] > tol) ++rank;
  out.rank = rank;
  if (proj != nullptr && rank > 0) {
    const Eigen::MatrixXd Q = svd.matrixU().leftCols(rank);
    const Eigen::MatrixXd UtQ = proj->left_vectors().transpose() * Q;
    out.trace_proj_P =
        (proj->p_weights().cwiseSqrt().asDiagonal() * UtQ).squaredNorm();
  }
  return out;
}

DfSure assemble_sure(double df, const Eigen::VectorXd& Y,
                     const Eigen::VectorXd& fitted, double sigma_u2) {
  const double n = static_cast<double>(Y.size());
  DfSure out;
  out.df = df;
  out.sure = -sigma_u2 + (fitted - Y).squaredNorm() / n +
             2.0 * sigma_u2 / n * df;
  return out;
}

}  // namespace

DfSure df_sure_lava_parts(const DesignMatrix& D, const Eigen::VectorXd& Y,
                          const std::vector<int>& active_set,
                          const Eigen::VectorXd& fitted, double sigma_u2,
                          const RidgeProjection& proj) {
  if (!(sigma_u2 > 0.0)) {
    throw std::invalid_argument("df_sure_lava: sigma_u2 > 0 required");
  }
  Eigen::MatrixXd XtJ(D.n(), static_cast<Eigen::Index>(active_set.size()));
  if (!active_set.empty()) {
    XtJ = proj.apply_K_half(select_columns(D.X, active_set));
  }
  RankTrace rt = rank_and_projected_trace(XtJ, &proj);
  const double df = rt.rank + (proj.trace_P() - rt.trace_proj_P);
  return assemble_sure(df, Y, fitted, sigma_u2);
}

LavaSureCache::LavaSureCache(const DesignSvd& svd, const Eigen::MatrixXd& X)
    : w_(svd.left_vectors().transpose() * X), gram_(X.transpose() * X) {}

DfSure LavaSureCache::df_sure(const RidgeProjection& proj,
                              const std::vector<int>& active_set,
                              const Eigen::VectorXd& fitted,
                              const Eigen::VectorXd& Y,
                              double sigma_u2) const {
  if (!(sigma_u2 > 0.0)) {
    throw std::invalid_argument("LavaSureCache: sigma_u2 > 0 required");
  }
  const auto m = static_cast<Eigen::Index>(active_set.size());
  double df = proj.trace_P();
  if (m > 0) {
    const Eigen::Index r = w_.rows();
    Eigen::MatrixXd A(r, m);
    Eigen::MatrixXd GJ(m, m);
    for (Eigen::Index kcol = 0; kcol < m; ++kcol) {
      A.col(kcol) = w_.col(active_set[kcol]);
      for (Eigen::Index krow = 0; krow < m; ++krow) {
        GJ(krow, kcol) = gram_(active_set[krow], active_set[kcol]);
      }
    }
    const Eigen::VectorXd& pw = proj.p_weights();
    // X~_J' X~_J = X_J'X_J - A' diag(pw) A, and
    // X~_J' P X~_J = A' diag(pw (1 - pw)) A.
    const Eigen::MatrixXd ApwA =
        A.transpose() * pw.asDiagonal() * A;
    GJ -= ApwA;
    const Eigen::MatrixXd M =
        A.transpose() * (pw.array() * (1.0 - pw.array())).matrix().asDiagonal() *
        A;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(GJ);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double emax = ev.size() > 0 ? ev[ev.size() - 1] : 0.0;
    const double stol = static_cast<double>(std::max(proj.n(), m)) *
                        std::numeric_limits<double>::epsilon();
    const double tol = stol * stol * emax;
    int rank = 0;
    double pinv_trace = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev[i] > tol && ev[i] > 0.0) {
        ++rank;
        const Eigen::VectorXd vi = eig.eigenvectors().col(i);
        pinv_trace += vi.dot(M * vi) / ev[i];
      }
    }
    df = rank + (proj.trace_P() - pinv_trace);
  }
  return assemble_sure(df, Y, fitted, sigma_u2);
}

DfSure df_sure_lava(const LavaRegressionFit& fit, const DesignMatrix& D,
                    const Eigen::VectorXd& Y, double sigma_u2,
                    const RidgeProjection* proj) {
  if (!(sigma_u2 > 0.0)) {
    throw std::invalid_argument("df_sure_lava: sigma_u2 > 0 required");
  }
  const double l2 = fit.penalties.lambda2;
  if (std::isinf(l2)) {
    // Lasso limit: P = 0, the transform is the identity.
    RankTrace rt =
        rank_and_projected_trace(select_columns(D.X, fit.active_set), nullptr);
    return assemble_sure(rt.rank, Y, fit.fitted, sigma_u2);
  }
  std::optional<RidgeProjection> local_proj;
  if (proj == nullptr) local_proj.emplace(D.X, l2);
  const RidgeProjection& rp = proj ? *proj : *local_proj;
  return df_sure_lava_parts(D, Y, fit.active_set, fit.fitted, sigma_u2, rp);
}

DfSure df_sure_baseline(Estimator kind, const DesignMatrix& D,
                        const Eigen::VectorXd& Y,
                        const Eigen::VectorXd& fitted,
                        const std::vector<int>& active_set,
                        const PenaltyPair& penalties, double sigma_u2,
                        const RidgeProjection* proj) {
  if (!(sigma_u2 > 0.0)) {
    throw std::invalid_argument("df_sure_baseline: sigma_u2 > 0 required");
  }
  switch (kind) {
    case Estimator::ridge: {
      std::optional<RidgeProjection> local_proj;
      if (proj == nullptr) local_proj.emplace(D.X, penalties.lambda2);
      const RidgeProjection& rp = proj ? *proj : *local_proj;
      return assemble_sure(rp.trace_P(), Y, fitted, sigma_u2);
    }
    case Estimator::lasso:
      return assemble_sure(static_cast<double>(active_set.size()), Y, fitted,
                           sigma_u2);
    case Estimator::elastic_net: {
      if (active_set.empty()) return assemble_sure(0.0, Y, fitted, sigma_u2);
      const Eigen::MatrixXd XJ = select_columns(D.X, active_set);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(XJ.transpose() * XJ);
      const double nl = static_cast<double>(D.n()) * penalties.lambda2;
      double df = 0.0;
      for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double d2 = std::max(eig.eigenvalues()[i], 0.0);
        df += d2 / (d2 + nl);
      }
      return assemble_sure(df, Y, fitted, sigma_u2);
    }
    default:
      throw std::invalid_argument(
          "df_sure_baseline: kind must be lasso, ridge, or elastic-net");
  }
}

double score_quantile(const DesignMatrix& D, double lambda2, double sigma_u,
                      double alpha, std::int64_t reps, std::uint64_t seed,
                      const RidgeProjection* proj) {
  if (reps < 100) {
    throw std::invalid_argument("score_quantile: reps >= 100 required");
  }
  if (!(alpha > 0.0) || !(alpha < 1.0) || sigma_u < 0.0) {
    throw std::invalid_argument("score_quantile: invalid alpha or sigma_u");
  }
  std::optional<RidgeProjection> local_proj;
  if (proj == nullptr) local_proj.emplace(D.X, lambda2);
  const RidgeProjection& rp = proj ? *proj : *local_proj;
  const Eigen::Index n = D.n();
  std::vector<double> scores(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    RngStream stream(seed, static_cast<std::int64_t>(r));
    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = sigma_u * stream.normal();
    const Eigen::VectorXd s =
        (2.0 / static_cast<double>(n)) * (D.X.transpose() * rp.apply_K(u));
    scores[r] = s.lpNorm<Eigen::Infinity>();
  });
  std::sort(scores.begin(), scores.end());
  const auto idx = static_cast<std::size_t>(std::max<double>(
      0.0, std::ceil((1.0 - alpha) * static_cast<double>(reps)) - 1.0));
  return scores[std::min(idx, scores.size() - 1)];
}

double classical_score_bound(const RidgeProjection& proj, double sigma_u,
                             double alpha) {
  // Exact union-bound level for p Gaussian scores with per-coordinate sd
  // 2 sigma_u sqrt(v_jj/n): each tail is held to alpha/(2p).
  const double bar_v = proj.v_matrix_diag().maxCoeff();
  const double p = static_cast<double>(proj.v_matrix_diag().size());
  return 2.0 * sigma_u * std::sqrt(bar_v / static_cast<double>(proj.n())) *
         std_normal_quantile(1.0 - alpha / (2.0 * p));
}

DeviationReport bound_components(const DesignMatrix& D, double lambda2,
                                 const Eigen::VectorXd& beta0, double sigma_u,
                                 double alpha, double eps, std::int64_t reps,
                                 std::uint64_t seed) {
  if (beta0.size() != D.p()) {
    throw std::invalid_argument("bound_components: beta0 size mismatch");
  }
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw std::invalid_argument("bound_components: eps in (0,1) required");
  }
  RidgeProjection rp(D.X, lambda2);
  const double n = static_cast<double>(D.n());
  DeviationReport out;
  out.bar_v = rp.v_matrix_diag().maxCoeff();
  out.k_norm = rp.op_norm_K();
  out.lambda_quantile =
      score_quantile(D, lambda2, sigma_u, alpha, reps, seed, &rp);
  out.classical_bound = classical_score_bound(rp, sigma_u, alpha);
  out.b2 = 32.0 * beta0.dot(rp.k_gram() * beta0);
  const double root = std::sqrt(rp.trace_P_sq()) +
                      std::sqrt(2.0) * std::sqrt(rp.op_norm_P_sq()) *
                          std::sqrt(std::log(1.0 / eps));
  out.b3 = 4.0 * sigma_u * sigma_u / n * root * root;
  const Eigen::VectorXd KXb = rp.apply_K(D.X * beta0);
  out.b4 = 4.0 / n * KXb.squaredNorm();
  return out;
}

double restricted_eigenvalue_surrogate(const DesignMatrix& D, double lambda2,
                                       const std::vector<int>& support,
                                       double c, std::uint64_t seed,
                                       int n_directions) {
  const Eigen::Index p = D.p();
  if (p > 12) {
    throw std::invalid_argument(
        "restricted_eigenvalue_surrogate: p <= 12 required (cost guard)");
  }
  if (support.empty()) {
    throw std::invalid_argument(
        "restricted_eigenvalue_surrogate: support must be nonempty");
  }
  if (!(c > 1.0)) {
    throw std::invalid_argument("restricted_eigenvalue_surrogate: c > 1");
  }
  RidgeProjection rp(D.X, lambda2);
  const Eigen::MatrixXd G = rp.k_gram();
  const double rho = (c + 1.0) / (c - 1.0);
  std::vector<bool> in_support(static_cast<std::size_t>(p), false);
  for (int j : support) in_support[static_cast<std::size_t>(j)] = true;

  auto cone_project = [&](Eigen::VectorXd& v) {
    double l1_in = 0.0, l1_out = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      (in_support[static_cast<std::size_t>(j)] ? l1_in : l1_out) +=
          std::abs(v[j]);
    }
    if (l1_out > rho * l1_in && l1_out > 0.0) {
      const double scale = rho * l1_in / l1_out;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (!in_support[static_cast<std::size_t>(j)]) v[j] *= scale;
      }
    }
  };

  auto ratio = [&](const Eigen::VectorXd& v) -> double {
    double denom = 0.0;
    for (int j : support) denom += v[j] * v[j];
    if (denom <= 0.0) return kInf;
    return v.dot(G * v) / denom;
  };

  double best = kInf;
  Eigen::VectorXd best_v;
  auto consider = [&](Eigen::VectorXd v) {
    cone_project(v);
    const double r = ratio(v);
    if (r < best) {
      best = r;
      best_v = v;
    }
  };

  // Structured candidates: support coordinates alone and signed pairings with
  // off-support coordinates (covers duplicated-column degeneracies).
  for (int i : support) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
    v[i] = 1.0;
    consider(v);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (in_support[static_cast<std::size_t>(j)]) continue;
      for (double s : {1.0, -1.0}) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
        u[i] = 1.0;
        u[j] = s * std::min(rho, 1.0);
        consider(u);
      }
    }
  }
  RngStream stream(seed, 0);
  for (int t = 0; t < n_directions; ++t) {
    Eigen::VectorXd v(p);
    for (Eigen::Index j = 0; j < p; ++j) v[j] = stream.normal();
    consider(v);
  }

  // Local coordinate refinement around the incumbent.
  if (best_v.size() == p) {
    double step = 0.5;
    for (int round = 0; round < 40; ++round) {
      bool improved = false;
      for (Eigen::Index j = 0; j < p; ++j) {
        for (double s : {step, -step}) {
          Eigen::VectorXd v = best_v;
          v[j] += s;
          cone_project(v);
          const double r = ratio(v);
          if (r < best) {
            best = r;
            best_v = v;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
      if (step < 1e-10) break;
    }
  }
  return best == kInf ? 0.0 : std::sqrt(std::max(best, 0.0));
}

}  // namespace lava
