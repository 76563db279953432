#include "lava/sequence_risk.hpp"

#include <cmath>
#include <stdexcept>

#include "lava/format.hpp"
#include "lava/normal.hpp"
#include "lava/rng.hpp"
#include "lava/shrinkage.hpp"

namespace lava {

void SequenceModel::validate() const {
  if (theta.size() < 1) {
    throw std::invalid_argument("SequenceModel: p >= 1 required");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("SequenceModel: sigma must be positive");
  }
  if (!theta.allFinite()) {
    throw std::invalid_argument("SequenceModel: theta must be finite");
  }
}

int SignalSplit::sparse_count() const {
  int s = 0;
  for (Eigen::Index j = 0; j < delta.size(); ++j) {
    if (delta[j] != 0.0) ++s;
  }
  return s;
}

double piecewise_sq_expectation(const PiecewiseLinearSpec& s, double theta,
                                double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(theta)) {
    throw std::invalid_argument(
        "piecewise_sq_expectation: theta finite, sigma > 0 required");
  }
  if (std::isnan(s.w) || s.w < 0.0) {
    throw std::invalid_argument("piecewise_sq_expectation: w must be >= 0");
  }
  if (std::isinf(s.w)) {
    // Middle piece covers the whole line.
    if (!std::isfinite(s.e) || !std::isfinite(s.m)) {
      throw std::invalid_argument(
          "piecewise_sq_expectation: middle coefficients must be finite");
    }
    const double em = s.e * theta + s.m;
    return em * em + s.e * s.e * sigma * sigma;
  }
  for (double coef : {s.h, s.d, s.e, s.m, s.f, s.g}) {
    if (!std::isfinite(coef)) {
      throw std::invalid_argument(
          "piecewise_sq_expectation: coefficients must be finite");
    }
  }
  const double s2 = sigma * sigma;
  const double phi_hi = normal_pdf(s.w, theta, sigma);
  const double phi_lo = normal_pdf(-s.w, theta, sigma);
  const double p_hi = normal_tail(s.w, theta, sigma);
  const double p_lo = 1.0 - normal_tail(-s.w, theta, sigma);
  double p_mid = 1.0 - p_hi - p_lo;
  if (p_mid < 0.0) p_mid = 0.0;

  double r = (s2 * (s.h * s.h * s.w + s.h * s.h * theta + 2.0 * s.d * s.h) -
              s2 * (s.e * s.e * s.w + s.e * s.e * theta + 2.0 * s.m * s.e)) *
             phi_hi;
  r += (s2 * (-s.e * s.e * s.w + s.e * s.e * theta + 2.0 * s.m * s.e) -
        s2 * (-s.f * s.f * s.w + s.f * s.f * theta + 2.0 * s.g * s.f)) *
       phi_lo;
  const double hi = s.h * theta + s.d;
  const double lo = s.f * theta + s.g;
  const double mid = s.e * theta + s.m;
  r += (hi * hi + s.h * s.h * s2) * p_hi;
  r += (lo * lo + s.f * s.f * s2) * p_lo;
  r += (mid * mid + s.e * s.e * s2) * p_mid;
  return r;
}

namespace {

double ridge_form_risk(double theta, double sigma, double k) {
  const double b = k * theta;
  return b * b + (1.0 - k) * (1.0 - k) * sigma * sigma;
}

double risk_lava(double theta, double sigma, const PenaltyPair& p) {
  const LavaWeights lw = lava_weights(p);
  if (std::isinf(p.lambda1)) return ridge_form_risk(theta, sigma, lw.k);
  if (lw.k == 0.0) return sigma * sigma;  // identity map
  const double s2 = sigma * sigma;
  // Residual second moment E(Z - d(Z))^2 via the piecewise kernel, then the
  // Stein cross term 2 E[(Z-theta) d(Z)] = 2(1-k) s2 + 2k s2 Pr(|Z| > w).
  PiecewiseLinearSpec spec;
  spec.h = 0.0;
  spec.d = -p.lambda1 / 2.0;
  spec.e = -lw.k;
  spec.m = 0.0;
  spec.f = 0.0;
  spec.g = p.lambda1 / 2.0;
  spec.w = lw.w;
  const double resid2 = piecewise_sq_expectation(spec, theta, sigma);
  const double p_out = normal_tail(lw.w, theta, sigma) +
                       (1.0 - normal_tail(-lw.w, theta, sigma));
  const double cross = 2.0 * (1.0 - lw.k) * s2 + 2.0 * lw.k * s2 * p_out;
  return -s2 + resid2 + cross;
}

double risk_post_lava(double theta, double sigma, const PenaltyPair& p) {
  const LavaWeights lw = lava_weights(p);
  if (std::isinf(p.lambda1)) return ridge_form_risk(theta, sigma, lw.k);
  if (lw.k == 0.0) return sigma * sigma;
  PiecewiseLinearSpec spec;
  spec.h = 1.0;
  spec.d = -theta;
  spec.e = 1.0 - lw.k;
  spec.m = -theta;
  spec.f = 1.0;
  spec.g = -theta;
  spec.w = lw.w;
  return piecewise_sq_expectation(spec, theta, sigma);
}

double risk_lasso(double theta, double sigma, double lambda_l) {
  if (std::isinf(lambda_l)) return theta * theta;
  PiecewiseLinearSpec spec;
  spec.h = 1.0;
  spec.d = -lambda_l / 2.0 - theta;
  spec.e = 0.0;
  spec.m = -theta;
  spec.f = 1.0;
  spec.g = lambda_l / 2.0 - theta;
  spec.w = lambda_l / 2.0;
  return piecewise_sq_expectation(spec, theta, sigma);
}

double risk_post_lasso(double theta, double sigma, double lambda_l) {
  if (std::isinf(lambda_l)) return theta * theta;
  PiecewiseLinearSpec spec;
  spec.h = 1.0;
  spec.d = -theta;
  spec.e = 0.0;
  spec.m = -theta;
  spec.f = 1.0;
  spec.g = -theta;
  spec.w = lambda_l / 2.0;
  return piecewise_sq_expectation(spec, theta, sigma);
}

double risk_elastic_net(double theta, double sigma, const PenaltyPair& p) {
  if (std::isinf(p.lambda1) || std::isinf(p.lambda2)) {
    throw std::invalid_argument("elastic net risk: penalties must be finite");
  }
  const double h = 1.0 / (1.0 + p.lambda2);
  PiecewiseLinearSpec spec;
  spec.h = h;
  spec.d = -p.lambda1 / 2.0 * h - theta;
  spec.e = 0.0;
  spec.m = -theta;
  spec.f = h;
  spec.g = p.lambda1 / 2.0 * h - theta;
  spec.w = p.lambda1 / 2.0;
  return piecewise_sq_expectation(spec, theta, sigma);
}

}  // namespace

double risk_scalar(Estimator kind, double theta, double sigma,
                   const PenaltyPair& penalties) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(theta)) {
    throw std::invalid_argument("risk_scalar: theta finite, sigma > 0");
  }
  penalties.validate();
  double r;
  switch (kind) {
    case Estimator::ml: return sigma * sigma;
    case Estimator::ridge: {
      const double lr = penalties.lambda2;
      const double kk = std::isinf(lr) ? 1.0 : lr / (1.0 + lr);
      r = ridge_form_risk(theta, sigma, kk);
      break;
    }
    case Estimator::lava:
      r = risk_lava(theta, sigma, penalties);
      break;
    case Estimator::post_lava:
      r = risk_post_lava(theta, sigma, penalties);
      break;
    case Estimator::lasso:
      r = risk_lasso(theta, sigma, penalties.lambda1);
      break;
    case Estimator::post_lasso:
      r = risk_post_lasso(theta, sigma, penalties.lambda1);
      break;
    case Estimator::elastic_net:
      r = risk_elastic_net(theta, sigma, penalties);
      break;
    default:
      throw std::invalid_argument("risk_scalar: unknown estimator kind");
  }
  // The kernel differences large terms; far tails can round to -1e-20-scale
  // values. A risk is a second moment.
  return std::max(r, 0.0);
}

double risk_scalar(Estimator kind, double theta, double sigma, double lambda) {
  switch (kind) {
    case Estimator::lasso:
    case Estimator::post_lasso:
      return risk_scalar(kind, theta, sigma, PenaltyPair(lambda, kInf));
    case Estimator::ridge:
      return risk_scalar(kind, theta, sigma, PenaltyPair(kInf, lambda));
    case Estimator::ml:
      return sigma * sigma;
    default:
      throw std::invalid_argument(
          "risk_scalar: estimator takes a PenaltyPair, not a single level");
  }
}

double risk_vector(Estimator kind, const SequenceModel& model,
                   const PenaltyPair& penalties) {
  model.validate();
  double total = 0.0;
  for (Eigen::Index j = 0; j < model.theta.size(); ++j) {
    total += risk_scalar(kind, model.theta[j], model.sigma, penalties);
  }
  return total;
}

PlugInPenalties plug_in_penalties(int p, double sigma, double c,
                                  double norm2_theta_sq,
                                  double norm2_beta_sq) {
  if (p < 1 || !(sigma > 0.0) || !(c > 0.0) || !(c < 1.0) ||
      norm2_theta_sq < 0.0 || norm2_beta_sq < 0.0) {
    throw std::invalid_argument("plug_in_penalties: invalid inputs");
  }
  PlugInPenalties out;
  out.lambda_l = 2.0 * sigma * std_normal_quantile(1.0 - c / (2.0 * p));
  out.lambda1 = out.lambda_l;
  out.lambda_r =
      norm2_theta_sq > 0.0 ? sigma * sigma * p / norm2_theta_sq : kInf;
  out.lambda2 = norm2_beta_sq > 0.0 ? sigma * sigma * p / norm2_beta_sq : kInf;
  return out;
}

OracleChoice oracle_penalties(Estimator kind, const SequenceModel& model,
                              const PenaltyGrid& grid) {
  model.validate();
  grid.validate();
  OracleChoice best;
  best.risk = kInf;
  auto consider = [&](const PenaltyPair& p) {
    const double r = risk_vector(kind, model, p);
    if (r <= best.risk) {  // ties resolve toward the later (larger) point
      best.risk = r;
      best.penalties = p;
    }
  };
  switch (kind) {
    case Estimator::ml:
      best.penalties = PenaltyPair(0.0, 0.0);
      best.risk = risk_vector(kind, model, best.penalties);
      break;
    case Estimator::lasso:
    case Estimator::post_lasso:
      for (double l : grid.lambda1_values) consider(PenaltyPair(l, kInf));
      break;
    case Estimator::ridge:
      for (double l : grid.lambda2_values) consider(PenaltyPair(kInf, l));
      break;
    case Estimator::elastic_net:
      for (double l1 : grid.lambda1_values) {
        for (double l2 : grid.lambda2_values) consider(PenaltyPair(l1, l2));
      }
      break;
    case Estimator::lava:
    case Estimator::post_lava: {
      // Close the grid with the lasso/ridge edges so the oracle space
      // contains both limits.
      for (double l2 : grid.lambda2_values) consider(PenaltyPair(kInf, l2));
      for (double l1 : grid.lambda1_values) {
        for (double l2 : grid.lambda2_values) consider(PenaltyPair(l1, l2));
        consider(PenaltyPair(l1, kInf));
      }
      break;
    }
  }
  return best;
}

double sure_lava_sequence(const Eigen::MatrixXd& samples,
                          const PenaltyPair& penalties, double sigma) {
  if (samples.rows() < 1 || samples.cols() < 1) {
    throw std::invalid_argument("sure_lava_sequence: need n >= 1, p >= 1");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("sure_lava_sequence: sigma > 0 required");
  }
  const LavaWeights lw = lava_weights(penalties);
  const double s2 = sigma * sigma;
  const auto n = samples.rows();
  const auto p = samples.cols();
  double resid = 0.0;
  std::int64_t exceed = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double z = samples(i, j);
      const double dz = shrink_lava(z, penalties).total();
      resid += (z - dz) * (z - dz);
      if (std::abs(z) > lw.w) ++exceed;
    }
  }
  return (1.0 - 2.0 * lw.k) * p * s2 + resid / n +
         2.0 * lw.k * s2 * static_cast<double>(exceed) / n;
}

RelativeRiskBound relative_risk_bound(const Eigen::VectorXd& beta,
                                      double sigma, int p, int s, double M,
                                      double c) {
  if (p < 1 || s < 0 || !(sigma > 0.0) || !(M > 0.0) || !(c > 0.0)) {
    throw std::invalid_argument("relative_risk_bound: invalid inputs");
  }
  const double s2 = sigma * sigma;
  const double beta2 = beta.squaredNorm();
  const double logp = std::log(static_cast<double>(p));
  const double p16 = std::pow(static_cast<double>(p), 1.0 / 16.0);
  RelativeRiskBound out;
  out.dense_share = beta2 / (s2 * p + beta2);
  const double sqrt2pi = std::sqrt(2.0 * M_PI);
  out.bound = out.dense_share + 3.0 * s * M * M / (p * s2) +
              (4.0 / (sqrt2pi * p16)) * (1.0 + 7.0 * M / (sigma * p16));
  out.cond_sigma_log_p = sigma * std::sqrt(logp) > 2.0 * M + 33.0 * sigma;
  out.cond_m_log_p = M * M * logp > 16.0 * s2;
  out.cond_c_log_p = M_PI * c * c * logp >= 1.0;
  out.cond_c_log_p_upper = 2.0 * p / (M_PI * c * c) >= logp;
  return out;
}

McEstimate mc_risk(Estimator kind, const SequenceModel& model,
                   const PenaltyPair& penalties, std::int64_t reps,
                   std::uint64_t seed) {
  model.validate();
  if (reps < 2) throw std::invalid_argument("mc_risk: reps >= 2 required");
  const auto p = model.theta.size();
  std::vector<double> losses(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    RngStream stream(seed, static_cast<std::int64_t>(r));
    double loss = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double z = model.theta[j] + model.sigma * stream.normal();
      const double err = apply_shrinkage(kind, z, penalties) - model.theta[j];
      loss += err * err;
    }
    losses[r] = loss;
  });
  double mean = 0.0;
  for (double v : losses) mean += v;
  mean /= static_cast<double>(reps);
  double ss = 0.0;
  for (double v : losses) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(reps - 1);
  McEstimate out;
  out.risk = mean;
  out.se = std::sqrt(var / static_cast<double>(reps));
  return out;
}

std::string RiskTable::to_csv() const {
  std::string out = "estimator,lambda1,lambda2,q,risk,se,method\n";
  for (const auto& r : rows) {
    out += r.estimator;
    out += ',';
    out += format_double(r.lambda1);
    out += ',';
    out += format_double(r.lambda2);
    out += ',';
    out += format_double(r.q);
    out += ',';
    out += format_double(r.risk);
    out += ',';
    out += format_double(r.se);
    out += ',';
    out += r.method;
    out += '\n';
  }
  return out;
}

}  // namespace lava
