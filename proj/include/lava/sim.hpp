#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "lava/penalties.hpp"

namespace lava {

enum class Scenario { sequence, regression };
enum class DesignKind { independent, factor };
enum class Tuning { oracle, plugin, sure, cv };

struct SimConfig {
  Scenario scenario = Scenario::regression;
  int n = 100;
  int p = 200;
  std::vector<double> q_grid = {0.0, 0.5, 1.0, 1.5, 2.0};
  DesignKind design = DesignKind::independent;
  int B = 100;
  std::uint64_t seed = 1;
  Tuning tuning = Tuning::sure;
  int folds = 5;
  std::vector<Estimator> estimators = {
      Estimator::lava, Estimator::post_lava, Estimator::lasso,
      Estimator::ridge, Estimator::elastic_net};
  double sigma = 0.1;    // sequence-model noise sd
  double sigma_u = 1.0;  // regression noise sd
  double plug_in_c = 0.05;
  int grid1 = 0;  // 0 picks the scenario default (50 sequence, 30 regression)
  int grid2 = 0;
  int k_factors = 3;
  bool sure_known_variance = false;  // use the true sigma_u^2 in SURE

  void validate() const;
  std::string to_text() const;
  static SimConfig from_text(const std::string& text);
  std::uint64_t hash() const;
};

struct SimResultRow {
  std::string estimator;
  double q = 0.0;
  double risk = 0.0;
  double se = 0.0;
  int reps = 0;
  int failures = 0;
  double lambda1_mean = 0.0;
  double lambda2_mean = 0.0;
};

struct SimResult {
  Scenario scenario = Scenario::regression;
  std::vector<SimResultRow> rows;
  std::string to_csv() const;
};

/// theta_1 = 3, theta_j = 0.1 q for j >= 2.
Eigen::VectorXd gen_coefficients(int p, double q);

/// Rows i.i.d. N(0, Sigma) with Sigma = I (independent) or LL' + I where the
/// rows of L are i.i.d. N(0, I_{k_factors}).
Eigen::MatrixXd gen_design(DesignKind kind, int n, int p, std::uint64_t seed,
                           int k_factors = 3);

/// Analytic risk curves over the q grid under oracle or plug-in penalties.
SimResult run_sequence_experiment(const SimConfig& cfg);

/// Seeded fixed-design Monte Carlo: per replication draw U, form Y, tune,
/// fit, and record the prediction risk (1/n)|X theta_hat - X theta|^2.
SimResult run_regression_experiment(const SimConfig& cfg);

SimResult run_experiment(const SimConfig& cfg);

}  // namespace lava
