#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "lava/grid.hpp"
#include "lava/penalties.hpp"

namespace lava {

/// Z ~ N_p(theta, sigma^2 I_p): one noisy observation per coordinate.
struct SequenceModel {
  Eigen::VectorXd theta;
  double sigma = 1.0;

  void validate() const;
};

/// A caller-chosen split theta = beta + delta with q recording the size of the
/// small coefficients in the sweep designs.
struct SignalSplit {
  Eigen::VectorXd beta;
  Eigen::VectorXd delta;
  double q = 0.0;

  int sparse_count() const;
};

/// F(z) = h z + d on z > w, e z + m on |z| <= w, f z + g on z < -w.
struct PiecewiseLinearSpec {
  double h = 0.0, d = 0.0;
  double e = 0.0, m = 0.0;
  double f = 0.0, g = 0.0;
  double w = 1.0;
};

/// Closed-form E[F(Z)^2] for Z ~ N(theta, sigma^2). Accepts w = +inf (the
/// middle piece then covers the whole line) and w = 0.
double piecewise_sq_expectation(const PiecewiseLinearSpec& spec, double theta,
                                double sigma);

/// Exact risk E[(d(Z) - theta)^2] of the scalar decision rule of the given
/// kind. lasso/post-lasso read penalties.lambda1 as lambda_l, ridge reads
/// penalties.lambda2 as lambda_r, ml ignores the pair.
double risk_scalar(Estimator kind, double theta, double sigma,
                   const PenaltyPair& penalties);

/// Single-penalty convenience for lasso/post-lasso (lambda_l) and ridge
/// (lambda_r).
double risk_scalar(Estimator kind, double theta, double sigma, double lambda);

/// Sum of coordinate risks for the sequence model.
double risk_vector(Estimator kind, const SequenceModel& model,
                   const PenaltyPair& penalties);

/// Canonical plug-in levels: lambda_l = lambda1 = 2 sigma Phi^{-1}(1-c/(2p)),
/// lambda_r = sigma^2 p / |theta|^2, lambda2 = sigma^2 p / |beta|^2, with inf
/// sentinels when the corresponding norm vanishes.
struct PlugInPenalties {
  double lambda_l = 0.0;
  double lambda_r = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

PlugInPenalties plug_in_penalties(int p, double sigma, double c,
                                  double norm2_theta_sq, double norm2_beta_sq);

struct OracleChoice {
  PenaltyPair penalties;
  double risk = 0.0;
};

/// Grid argmin of risk_vector, ties broken toward larger penalties. For lava
/// the grid is closed with the lambda1 = inf and lambda2 = inf edges so the
/// search space contains the ridge and lasso limits.
OracleChoice oracle_penalties(Estimator kind, const SequenceModel& model,
                              const PenaltyGrid& grid);

/// Unbiased risk estimate for lava from n i.i.d. draws (rows of samples).
double sure_lava_sequence(const Eigen::MatrixXd& samples,
                          const PenaltyPair& penalties, double sigma);

/// Diagnostic bound on E|lava - theta|^2 / E|Z - theta|^2 under the plug-in
/// penalties, with the applicability conditions reported as flags. The bound
/// value is computed regardless of the flags.
struct RelativeRiskBound {
  double bound = 0.0;
  double dense_share = 0.0;  // |beta|^2 / (sigma^2 p + |beta|^2)
  bool cond_sigma_log_p = false;   // sigma sqrt(log p) > 2M + 33 sigma
  bool cond_m_log_p = false;       // M^2 log p > 16 sigma^2
  bool cond_c_log_p = false;       // pi c^2 log p >= 1
  bool cond_c_log_p_upper = false; // 2p/(pi c^2) >= log p
  bool applicable() const {
    return cond_sigma_log_p && cond_m_log_p && cond_c_log_p &&
           cond_c_log_p_upper;
  }
};

RelativeRiskBound relative_risk_bound(const Eigen::VectorXd& beta,
                                      double sigma, int p, int s, double M,
                                      double c = 0.05);

struct McEstimate {
  double risk = 0.0;
  double se = 0.0;
};

/// Monte-Carlo risk |d(Z) - theta|^2 averaged over reps seeded draws.
/// Deterministic in (seed) regardless of thread count.
McEstimate mc_risk(Estimator kind, const SequenceModel& model,
                   const PenaltyPair& penalties, std::int64_t reps,
                   std::uint64_t seed);

struct RiskTableRow {
  std::string estimator;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double q = 0.0;
  double risk = 0.0;
  double se = 0.0;
  std::string method;  // "analytic" | "mc"
};

struct RiskTable {
  std::vector<RiskTableRow> rows;
  std::string to_csv() const;
};

}  // namespace lava
