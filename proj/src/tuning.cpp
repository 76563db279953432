#include "lava/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lava/lava_regression.hpp"
#include "lava/normal.hpp"
#include "lava/rng.hpp"

namespace lava {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

NoiseEstimate estimate_noise_variance(const DesignMatrix& D,
                                      const Eigen::VectorXd& Y,
                                      const NoiseEstimateOptions& opts) {
  const Eigen::Index n = D.n();
  const Eigen::Index p = D.p();
  if (n < 2 || Y.size() != n) {
    throw std::invalid_argument("estimate_noise_variance: need n > 1");
  }
  NoiseEstimate out;
  const double mean = Y.mean();
  out.sigma2 = (Y.array() - mean).square().sum() / static_cast<double>(n - 1);
  const double quant =
      std_normal_quantile(1.0 - opts.c / (2.0 * static_cast<double>(p)));
  for (int it = 1; it <= opts.max_iter; ++it) {
    out.iterations = it;
    const double lambda1 = std::max(
        2.0 * std::sqrt(out.sigma2) * quant / std::sqrt(static_cast<double>(n)),
        1e-12);
    LassoFit fit = fit_lasso(D.X, Y, lambda1);
    double dof = static_cast<double>(n) -
                 static_cast<double>(fit.active_set.size());
    if (dof < 1.0) {
      dof = 1.0;
      out.df_floored = true;
    }
    const double next = (Y - D.X * fit.delta).squaredNorm() / dof;
    const bool done =
        std::abs(next - out.sigma2) <= opts.rel_tol * std::max(out.sigma2, 1e-300);
    out.sigma2 = next;
    if (done) {
      out.converged = true;
      break;
    }
  }
  return out;
}

PenaltyGrid default_regression_grid(Eigen::Index n, Eigen::Index p,
                                    double sigma_u2, int count1, int count2) {
  if (!(sigma_u2 > 0.0)) {
    throw std::invalid_argument("default_regression_grid: sigma_u2 > 0");
  }
  const double center =
      2.0 * std::sqrt(sigma_u2) *
      std::sqrt(std::log(2.0 * static_cast<double>(p)) /
                static_cast<double>(n));
  PenaltyGrid g;
  g.lambda1_values = log_spaced(0.01 * center, 10.0 * center, count1);
  g.lambda2_values = log_spaced(1e-4, 1e4, count2);
  return g;
}

std::vector<PenaltyPair> enumerate_grid(Estimator kind,
                                        const PenaltyGrid& grid) {
  grid.validate();
  std::vector<PenaltyPair> pts;
  switch (kind) {
    case Estimator::lava:
    case Estimator::post_lava:
    case Estimator::elastic_net:
      pts.reserve(static_cast<std::size_t>(grid.lambda1_values.size() *
                                           grid.lambda2_values.size()));
      for (double l1 : grid.lambda1_values) {
        for (double l2 : grid.lambda2_values) pts.emplace_back(l1, l2);
      }
      break;
    case Estimator::lasso:
    case Estimator::post_lasso:
      for (double l1 : grid.lambda1_values) pts.emplace_back(l1, kInf);
      break;
    case Estimator::ridge:
      for (double l2 : grid.lambda2_values) pts.emplace_back(kInf, l2);
      break;
    case Estimator::ml:
      throw std::invalid_argument("enumerate_grid: ml has no tuning grid");
  }
  return pts;
}

namespace detail {

std::size_t select_best(const std::vector<SurfacePoint>& surface) {
  std::vector<std::size_t> order(surface.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (surface[a].lambda1 != surface[b].lambda1) {
      return surface[a].lambda1 < surface[b].lambda1;
    }
    if (surface[a].lambda2 != surface[b].lambda2) {
      return surface[a].lambda2 < surface[b].lambda2;
    }
    return a < b;
  });
  std::size_t best = surface.size();
  double best_crit = kInf;
  for (std::size_t i : order) {
    const double c = surface[i].criterion;
    if (std::isnan(c)) continue;
    if (c <= best_crit) {
      best_crit = c;
      best = i;
    }
  }
  if (best == surface.size()) {
    throw std::runtime_error("tuning: every grid point failed");
  }
  return best;
}

void for_each_grid_fit(
    Estimator kind, const DesignMatrix& D, const Eigen::VectorXd& Y,
    const PenaltyGrid& grid, const SolveOptions& opts,
    const std::function<void(std::size_t, const GridFitInfo&)>& visit,
    const std::function<void(std::size_t)>& on_failure) {
  const Eigen::Index n = D.n();
  const Eigen::Index p = D.p();
  const auto n1 = static_cast<std::size_t>(grid.lambda1_values.size());
  const auto n2 = static_cast<std::size_t>(grid.lambda2_values.size());

  auto sparse_product = [&](const Eigen::VectorXd& delta,
                            const std::vector<int>& active) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (int j : active) out += D.X.col(j) * delta[j];
    return out;
  };

  switch (kind) {
    case Estimator::lava:
    case Estimator::post_lava: {
      DesignSvd svd(D.X);
      const LavaSureCache sure_cache(svd, D.X);
      for (std::size_t i2 = 0; i2 < n2; ++i2) {
        const double l2 = grid.lambda2_values[static_cast<Eigen::Index>(i2)];
        RidgeProjection proj = svd.projection(l2);
        const Eigen::MatrixXd Xt = proj.apply_K_half(D.X);
        const Eigen::VectorXd Yt = proj.apply_K_half(Y);
        const Eigen::VectorXd PY = proj.apply_P(Y);
        SolveOptions path_opts = opts;
        path_opts.warm_start = Eigen::VectorXd::Zero(p);
        for (std::size_t k = 0; k < n1; ++k) {
          const std::size_t i1 = n1 - 1 - k;  // descend for warm starts
          const double l1 = grid.lambda1_values[static_cast<Eigen::Index>(i1)];
          const std::size_t idx = i1 * n2 + i2;
          try {
            LassoFit lf = fit_lasso(Xt, Yt, l1, path_opts);
            path_opts.warm_start = lf.delta;
            if (!lf.converged) {
              on_failure(idx);
              continue;
            }
            GridFitInfo info;
            info.penalties = PenaltyPair(l1, l2);
            info.proj = &proj;
            info.sure_cache = &sure_cache;
            Eigen::VectorXd beta =
                proj.ridge_coefficients(Y - sparse_product(lf.delta,
                                                           lf.active_set));
            info.beta = &beta;
            Eigen::VectorXd theta, fitted;
            std::vector<int> active = lf.active_set;
            if (kind == Estimator::post_lava) {
              const Eigen::VectorXd Xb = D.X * beta;
              const Eigen::VectorXd refit =
                  least_squares_on_support(D.X, Y - Xb, lf.active_set);
              theta = beta + refit;
              fitted = Xb + sparse_product(refit, lf.active_set);
            } else {
              theta = beta + lf.delta;
              const Eigen::VectorXd Xd = sparse_product(lf.delta,
                                                        lf.active_set);
              fitted = PY + Xd - proj.apply_P(Xd);
            }
            info.theta = &theta;
            info.active_set = &active;
            info.fitted = &fitted;
            visit(idx, info);
          } catch (const std::exception&) {
            on_failure(idx);
          }
        }
      }
      break;
    }
    case Estimator::elastic_net: {
      for (std::size_t i2 = 0; i2 < n2; ++i2) {
        const double l2 = grid.lambda2_values[static_cast<Eigen::Index>(i2)];
        SolveOptions path_opts = opts;
        path_opts.warm_start = Eigen::VectorXd::Zero(p);
        for (std::size_t k = 0; k < n1; ++k) {
          const std::size_t i1 = n1 - 1 - k;
          const double l1 = grid.lambda1_values[static_cast<Eigen::Index>(i1)];
          const std::size_t idx = i1 * n2 + i2;
          try {
            const PenaltyPair pair(l1, l2);
            LassoFit lf = fit_elastic_net(D.X, Y, pair, path_opts);
            path_opts.warm_start = lf.delta;
            if (!lf.converged) {
              on_failure(idx);
              continue;
            }
            GridFitInfo info;
            info.penalties = pair;
            Eigen::VectorXd theta = lf.delta;
            Eigen::VectorXd fitted = sparse_product(lf.delta, lf.active_set);
            std::vector<int> active = lf.active_set;
            info.theta = &theta;
            info.active_set = &active;
            info.fitted = &fitted;
            visit(idx, info);
          } catch (const std::exception&) {
            on_failure(idx);
          }
        }
      }
      break;
    }
    case Estimator::lasso:
    case Estimator::post_lasso: {
      SolveOptions path_opts = opts;
      path_opts.warm_start = Eigen::VectorXd::Zero(p);
      for (std::size_t k = 0; k < n1; ++k) {
        const std::size_t i1 = n1 - 1 - k;
        const double l1 = grid.lambda1_values[static_cast<Eigen::Index>(i1)];
        try {
          LassoFit lf = fit_lasso(D.X, Y, l1, path_opts);
          path_opts.warm_start = lf.delta;
          if (!lf.converged) {
            on_failure(i1);
            continue;
          }
          GridFitInfo info;
          info.penalties = PenaltyPair(l1, kInf);
          Eigen::VectorXd theta;
          std::vector<int> active = lf.active_set;
          if (kind == Estimator::post_lasso) {
            theta = least_squares_on_support(D.X, Y, lf.active_set);
          } else {
            theta = lf.delta;
          }
          Eigen::VectorXd fitted = sparse_product(theta, active);
          info.theta = &theta;
          info.active_set = &active;
          info.fitted = &fitted;
          visit(i1, info);
        } catch (const std::exception&) {
          on_failure(i1);
        }
      }
      break;
    }
    case Estimator::ridge: {
      DesignSvd svd(D.X);
      for (std::size_t i2 = 0; i2 < n2; ++i2) {
        const double l2 = grid.lambda2_values[static_cast<Eigen::Index>(i2)];
        try {
          RidgeProjection proj = svd.projection(l2);
          GridFitInfo info;
          info.penalties = PenaltyPair(kInf, l2);
          info.proj = &proj;
          Eigen::VectorXd theta = svd.ridge_coefficients(Y, l2);
          Eigen::VectorXd fitted = proj.apply_P(Y);
          std::vector<int> active;
          info.theta = &theta;
          info.active_set = &active;
          info.fitted = &fitted;
          visit(i2, info);
        } catch (const std::exception&) {
          on_failure(i2);
        }
      }
      break;
    }
    case Estimator::ml:
      throw std::invalid_argument("for_each_grid_fit: ml has no grid");
  }
}

}  // namespace detail

TuneResult tune_sure(Estimator kind, const DesignMatrix& D,
                     const Eigen::VectorXd& Y, const PenaltyGrid& grid,
                     double sigma_u2, const SolveOptions& opts) {
  if (kind == Estimator::post_lava || kind == Estimator::post_lasso) {
    throw std::invalid_argument(
        "tune_sure: no unbiased risk estimate exists for refitted "
        "estimators; reuse the base estimator's choice");
  }
  if (!(sigma_u2 > 0.0)) {
    throw std::invalid_argument("tune_sure: sigma_u2 > 0 required");
  }
  const auto points = enumerate_grid(kind, grid);
  TuneResult out;
  out.method = TuneMethod::sure;
  out.sigma_u2_used = sigma_u2;
  out.surface.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.surface[i] = {points[i].lambda1, points[i].lambda2, kNaN};
  }
  detail::for_each_grid_fit(
      kind, D, Y, grid, opts,
      [&](std::size_t idx, const detail::GridFitInfo& info) {
        DfSure ds;
        if (kind == Estimator::lava) {
          ds = info.sure_cache->df_sure(*info.proj, *info.active_set,
                                        *info.fitted, Y, sigma_u2);
        } else {
          ds = df_sure_baseline(kind, D, Y, *info.fitted, *info.active_set,
                                info.penalties, sigma_u2, info.proj);
        }
        out.surface[idx].criterion = ds.sure;
      },
      [&](std::size_t) { ++out.failures; });
  const std::size_t best = detail::select_best(out.surface);
  out.chosen = PenaltyPair(out.surface[best].lambda1,
                           out.surface[best].lambda2);
  out.best_criterion = out.surface[best].criterion;
  return out;
}

std::vector<int> cv_fold_ids(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2 || n < folds) {
    throw std::invalid_argument("cv_fold_ids: need 2 <= folds <= n");
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
  RngStream stream(seed, 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(stream.uniform_int(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    fold_of[static_cast<std::size_t>(perm[pos])] =
        static_cast<int>(pos * static_cast<std::size_t>(folds) / perm.size());
  }
  return fold_of;
}

TuneResult tune_cv(Estimator kind, const DesignMatrix& D,
                   const Eigen::VectorXd& Y, const PenaltyGrid& grid,
                   int folds, std::uint64_t seed, const SolveOptions& opts,
                   const std::vector<int>* explicit_fold_ids) {
  if (kind == Estimator::ml) {
    throw std::invalid_argument("tune_cv: ml has no tuning parameters");
  }
  const Eigen::Index n = D.n();
  std::vector<int> fold_of = explicit_fold_ids
                                 ? *explicit_fold_ids
                                 : cv_fold_ids(n, folds, seed);
  if (fold_of.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("tune_cv: fold assignment size mismatch");
  }
  int max_fold = 0;
  for (int f : fold_of) max_fold = std::max(max_fold, f);
  const int n_folds = max_fold + 1;

  const auto points = enumerate_grid(kind, grid);
  const Eigen::MatrixXd raw = D.raw();

  // Per-fold held-out SSE per grid point; NaN once any fold fails there.
  std::vector<std::vector<double>> fold_sse(
      static_cast<std::size_t>(n_folds),
      std::vector<double>(points.size(), kNaN));
  std::vector<std::vector<int>> fold_failures(
      static_cast<std::size_t>(n_folds), std::vector<int>(points.size(), 0));

  {
    std::vector<int> counts(static_cast<std::size_t>(n_folds), 0);
    for (int f : fold_of) {
      if (f < 0 || f >= n_folds) {
        throw std::invalid_argument("tune_cv: bad fold id");
      }
      counts[static_cast<std::size_t>(f)] += 1;
    }
    for (int c : counts) {
      if (c == 0 || c == n) {
        throw std::invalid_argument("tune_cv: empty fold");
      }
    }
  }

  parallel_for(static_cast<std::size_t>(n_folds), [&](std::size_t f) {
    std::vector<int> train_rows, test_rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fold_of[static_cast<std::size_t>(i)] == static_cast<int>(f)) {
        test_rows.push_back(static_cast<int>(i));
      } else {
        train_rows.push_back(static_cast<int>(i));
      }
    }
    Eigen::MatrixXd X_tr(static_cast<Eigen::Index>(train_rows.size()), D.p());
    Eigen::VectorXd y_tr(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      X_tr.row(static_cast<Eigen::Index>(i)) = raw.row(train_rows[i]);
      y_tr[static_cast<Eigen::Index>(i)] = Y[train_rows[i]];
    }
    Eigen::MatrixXd X_te(static_cast<Eigen::Index>(test_rows.size()), D.p());
    Eigen::VectorXd y_te(static_cast<Eigen::Index>(test_rows.size()));
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      X_te.row(static_cast<Eigen::Index>(i)) = raw.row(test_rows[i]);
      y_te[static_cast<Eigen::Index>(i)] = Y[test_rows[i]];
    }
    try {
      const DesignMatrix D_tr =
          D.normalized ? normalize_design(X_tr) : unnormalized_design(X_tr);
      detail::for_each_grid_fit(
          kind, D_tr, y_tr, grid, opts,
          [&](std::size_t idx, const detail::GridFitInfo& info) {
            const Eigen::VectorXd theta_orig =
                info.theta->cwiseQuotient(D_tr.column_scales);
            fold_sse[f][idx] = (y_te - X_te * theta_orig).squaredNorm();
          },
          [&](std::size_t idx) { fold_failures[f][idx] += 1; });
    } catch (const std::exception&) {
      // e.g. a zero column inside the training fold: every point fails here
      for (std::size_t i = 0; i < points.size(); ++i) {
        fold_sse[f][i] = kNaN;
        fold_failures[f][i] += 1;
      }
    }
  });

  TuneResult out;
  out.method = TuneMethod::cv;
  out.surface.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double total = 0.0;
    bool ok = true;
    for (int f = 0; f < n_folds; ++f) {
      out.failures += fold_failures[static_cast<std::size_t>(f)][i];
      const double v = fold_sse[static_cast<std::size_t>(f)][i];
      if (std::isnan(v)) {
        ok = false;
      } else {
        total += v;
      }
    }
    out.surface[i] = {points[i].lambda1, points[i].lambda2,
                      ok ? total / static_cast<double>(n) : kNaN};
  }
  const std::size_t best = detail::select_best(out.surface);
  out.chosen = PenaltyPair(out.surface[best].lambda1,
                           out.surface[best].lambda2);
  out.best_criterion = out.surface[best].criterion;
  return out;
}

std::pair<TuneResult, TuneResult> tune_cv_lava_pair(
    const DesignMatrix& D, const Eigen::VectorXd& Y, const PenaltyGrid& grid,
    int folds, std::uint64_t seed, const SolveOptions& opts,
    const std::vector<int>* explicit_fold_ids) {
  const Eigen::Index n = D.n();
  std::vector<int> fold_of = explicit_fold_ids
                                 ? *explicit_fold_ids
                                 : cv_fold_ids(n, folds, seed);
  if (fold_of.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("tune_cv_lava_pair: fold size mismatch");
  }
  int max_fold = 0;
  for (int f : fold_of) max_fold = std::max(max_fold, f);
  const int n_folds = max_fold + 1;
  {
    std::vector<int> counts(static_cast<std::size_t>(n_folds), 0);
    for (int f : fold_of) {
      if (f < 0 || f >= n_folds) {
        throw std::invalid_argument("tune_cv_lava_pair: bad fold id");
      }
      counts[static_cast<std::size_t>(f)] += 1;
    }
    for (int c : counts) {
      if (c == 0 || c == n) {
        throw std::invalid_argument("tune_cv_lava_pair: empty fold");
      }
    }
  }

  const auto points = enumerate_grid(Estimator::lava, grid);
  const Eigen::MatrixXd raw = D.raw();
  std::vector<std::vector<double>> sse_lava(
      static_cast<std::size_t>(n_folds),
      std::vector<double>(points.size(), kNaN));
  std::vector<std::vector<double>> sse_post = sse_lava;
  std::vector<std::vector<int>> fold_failures(
      static_cast<std::size_t>(n_folds), std::vector<int>(points.size(), 0));

  parallel_for(static_cast<std::size_t>(n_folds), [&](std::size_t f) {
    std::vector<int> train_rows, test_rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fold_of[static_cast<std::size_t>(i)] == static_cast<int>(f)) {
        test_rows.push_back(static_cast<int>(i));
      } else {
        train_rows.push_back(static_cast<int>(i));
      }
    }
    Eigen::MatrixXd X_tr(static_cast<Eigen::Index>(train_rows.size()), D.p());
    Eigen::VectorXd y_tr(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      X_tr.row(static_cast<Eigen::Index>(i)) = raw.row(train_rows[i]);
      y_tr[static_cast<Eigen::Index>(i)] = Y[train_rows[i]];
    }
    Eigen::MatrixXd X_te(static_cast<Eigen::Index>(test_rows.size()), D.p());
    Eigen::VectorXd y_te(static_cast<Eigen::Index>(test_rows.size()));
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      X_te.row(static_cast<Eigen::Index>(i)) = raw.row(test_rows[i]);
      y_te[static_cast<Eigen::Index>(i)] = Y[test_rows[i]];
    }
    try {
      const DesignMatrix D_tr =
          D.normalized ? normalize_design(X_tr) : unnormalized_design(X_tr);
      detail::for_each_grid_fit(
          Estimator::lava, D_tr, y_tr, grid, opts,
          [&](std::size_t idx, const detail::GridFitInfo& info) {
            const Eigen::VectorXd theta_orig =
                info.theta->cwiseQuotient(D_tr.column_scales);
            sse_lava[f][idx] = (y_te - X_te * theta_orig).squaredNorm();
            const Eigen::VectorXd refit = least_squares_on_support(
                D_tr.X, y_tr - D_tr.X * (*info.beta), *info.active_set);
            const Eigen::VectorXd theta_post =
                (*info.beta + refit).cwiseQuotient(D_tr.column_scales);
            sse_post[f][idx] = (y_te - X_te * theta_post).squaredNorm();
          },
          [&](std::size_t idx) { fold_failures[f][idx] += 1; });
    } catch (const std::exception&) {
      for (std::size_t i = 0; i < points.size(); ++i) {
        sse_lava[f][i] = kNaN;
        sse_post[f][i] = kNaN;
        fold_failures[f][i] += 1;
      }
    }
  });

  auto assemble = [&](const std::vector<std::vector<double>>& sse) {
    TuneResult out;
    out.method = TuneMethod::cv;
    out.surface.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      double total = 0.0;
      bool ok = true;
      for (int f = 0; f < n_folds; ++f) {
        out.failures += fold_failures[static_cast<std::size_t>(f)][i];
        const double v = sse[static_cast<std::size_t>(f)][i];
        if (std::isnan(v)) {
          ok = false;
        } else {
          total += v;
        }
      }
      out.surface[i] = {points[i].lambda1, points[i].lambda2,
                        ok ? total / static_cast<double>(n) : kNaN};
    }
    const std::size_t best = detail::select_best(out.surface);
    out.chosen =
        PenaltyPair(out.surface[best].lambda1, out.surface[best].lambda2);
    out.best_criterion = out.surface[best].criterion;
    return out;
  };
  return {assemble(sse_lava), assemble(sse_post)};
}

}  // namespace lava
