#include "lava/sim.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "lava/design.hpp"
#include "lava/estimators.hpp"
#include "lava/format.hpp"
#include "lava/normal.hpp"
#include "lava/rng.hpp"
#include "lava/sequence_risk.hpp"
#include "lava/tuning.hpp"

namespace lava {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* scenario_name(Scenario s) {
  return s == Scenario::sequence ? "sequence" : "regression";
}

const char* design_name(DesignKind d) {
  return d == DesignKind::independent ? "independent" : "factor";
}

const char* tuning_name(Tuning t) {
  switch (t) {
    case Tuning::oracle: return "oracle";
    case Tuning::plugin: return "plugin";
    case Tuning::sure: return "sure";
    case Tuning::cv: return "cv";
  }
  return "?";
}

Scenario parse_scenario(const std::string& s) {
  if (s == "sequence") return Scenario::sequence;
  if (s == "regression") return Scenario::regression;
  throw std::invalid_argument("unknown scenario: " + s);
}

DesignKind parse_design(const std::string& s) {
  if (s == "independent") return DesignKind::independent;
  if (s == "factor") return DesignKind::factor;
  throw std::invalid_argument("unknown design: " + s);
}

Tuning parse_tuning(const std::string& s) {
  if (s == "oracle") return Tuning::oracle;
  if (s == "plugin") return Tuning::plugin;
  if (s == "sure") return Tuning::sure;
  if (s == "cv") return Tuning::cv;
  throw std::invalid_argument("unknown tuning: " + s);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

void SimConfig::validate() const {
  if (n < 1 || p < 1) throw std::invalid_argument("SimConfig: n, p >= 1");
  if (B < 1) throw std::invalid_argument("SimConfig: B >= 1");
  if (q_grid.empty()) throw std::invalid_argument("SimConfig: empty q_grid");
  for (double q : q_grid) {
    if (!(q >= 0.0)) throw std::invalid_argument("SimConfig: q >= 0");
  }
  if (estimators.empty()) {
    throw std::invalid_argument("SimConfig: empty estimator set");
  }
  if (!(sigma > 0.0) || !(sigma_u >= 0.0)) {
    throw std::invalid_argument("SimConfig: bad noise levels");
  }
  if (tuning == Tuning::cv && (folds < 2 || folds > n)) {
    throw std::invalid_argument("SimConfig: need 2 <= folds <= n");
  }
}

std::string SimConfig::to_text() const {
  std::ostringstream out;
  out << "scenario=" << scenario_name(scenario) << '\n';
  out << "n=" << n << '\n';
  out << "p=" << p << '\n';
  out << "q_grid=";
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    if (i) out << ',';
    out << format_double(q_grid[i]);
  }
  out << '\n';
  out << "design=" << design_name(design) << '\n';
  out << "B=" << B << '\n';
  out << "seed=" << seed << '\n';
  out << "tuning=" << tuning_name(tuning) << '\n';
  out << "folds=" << folds << '\n';
  out << "estimators=";
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    if (i) out << ',';
    out << estimator_name(estimators[i]);
  }
  out << '\n';
  out << "sigma=" << format_double(sigma) << '\n';
  out << "sigma_u=" << format_double(sigma_u) << '\n';
  out << "c=" << format_double(plug_in_c) << '\n';
  out << "grid1=" << grid1 << '\n';
  out << "grid2=" << grid2 << '\n';
  out << "k_factors=" << k_factors << '\n';
  out << "sure_known_variance=" << (sure_known_variance ? 1 : 0) << '\n';
  return out.str();
}

SimConfig SimConfig::from_text(const std::string& text) {
  SimConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected key=value, got: " + line);
    }
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "scenario") {
      cfg.scenario = parse_scenario(val);
    } else if (key == "n") {
      cfg.n = std::stoi(val);
    } else if (key == "p") {
      cfg.p = std::stoi(val);
    } else if (key == "q_grid") {
      cfg.q_grid.clear();
      for (const auto& tok : split(val, ',')) cfg.q_grid.push_back(std::stod(tok));
    } else if (key == "design") {
      cfg.design = parse_design(val);
    } else if (key == "B") {
      cfg.B = std::stoi(val);
    } else if (key == "seed") {
      cfg.seed = std::stoull(val);
    } else if (key == "tuning") {
      cfg.tuning = parse_tuning(val);
    } else if (key == "folds") {
      cfg.folds = std::stoi(val);
    } else if (key == "estimators") {
      cfg.estimators.clear();
      for (const auto& tok : split(val, ',')) {
        cfg.estimators.push_back(parse_estimator(tok));
      }
    } else if (key == "sigma") {
      cfg.sigma = std::stod(val);
    } else if (key == "sigma_u") {
      cfg.sigma_u = std::stod(val);
    } else if (key == "c") {
      cfg.plug_in_c = std::stod(val);
    } else if (key == "grid1") {
      cfg.grid1 = std::stoi(val);
    } else if (key == "grid2") {
      cfg.grid2 = std::stoi(val);
    } else if (key == "k_factors") {
      cfg.k_factors = std::stoi(val);
    } else if (key == "sure_known_variance") {
      cfg.sure_known_variance = std::stoi(val) != 0;
    } else {
      throw std::invalid_argument("config: unknown key: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

std::uint64_t SimConfig::hash() const {
  const std::string text = to_text();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string SimResult::to_csv() const {
  std::string out =
      "scenario,estimator,q,risk,se,reps,failures,lambda1_mean,lambda2_mean\n";
  for (const auto& r : rows) {
    out += scenario_name(scenario);
    out += ',';
    out += r.estimator;
    out += ',';
    out += format_double(r.q);
    out += ',';
    out += format_double(r.risk);
    out += ',';
    out += format_double(r.se);
    out += ',';
    out += std::to_string(r.reps);
    out += ',';
    out += std::to_string(r.failures);
    out += ',';
    out += format_double(r.lambda1_mean);
    out += ',';
    out += format_double(r.lambda2_mean);
    out += '\n';
  }
  return out;
}

Eigen::VectorXd gen_coefficients(int p, double q) {
  if (p < 1 || !(q >= 0.0)) {
    throw std::invalid_argument("gen_coefficients: p >= 1, q >= 0");
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(p, 0.1 * q);
  theta[0] = 3.0;
  return theta;
}

Eigen::MatrixXd gen_design(DesignKind kind, int n, int p, std::uint64_t seed,
                           int k_factors) {
  if (n < 1 || p < 1) throw std::invalid_argument("gen_design: n, p >= 1");
  RngStream stream(seed, kDesignStream);
  Eigen::MatrixXd X(n, p);
  if (kind == DesignKind::independent) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) X(i, j) = stream.normal();
    }
    return X;
  }
  Eigen::MatrixXd L(p, k_factors);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (int f = 0; f < k_factors; ++f) L(j, f) = stream.normal();
  }
  Eigen::VectorXd g(k_factors);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int f = 0; f < k_factors; ++f) g[f] = stream.normal();
    for (Eigen::Index j = 0; j < p; ++j) {
      X(i, j) = L.row(j).dot(g) + stream.normal();
    }
  }
  return X;
}

namespace {

struct PlugInSet {
  double lambda_l = 0.0;
  double lambda_r = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  PenaltyPair for_kind(Estimator kind) const {
    switch (kind) {
      case Estimator::lava:
      case Estimator::post_lava:
      case Estimator::elastic_net:
        return PenaltyPair(lambda1, lambda2);
      case Estimator::lasso:
      case Estimator::post_lasso:
        return PenaltyPair(lambda_l, kInf);
      case Estimator::ridge:
        return PenaltyPair(kInf, lambda_r);
      case Estimator::ml:
        return PenaltyPair(0.0, 0.0);
    }
    return PenaltyPair(0.0, 0.0);
  }
};

// The sweep-model plug-ins: lambda_r uses the paper's sweep formula with the
// "3 + ..." denominator; lambda2 uses the dense-part norm.
PlugInSet sweep_plug_ins(int p, double sigma, double c, double q) {
  PlugInSet s;
  s.lambda_l = 2.0 * sigma * std_normal_quantile(1.0 - c / (2.0 * p));
  s.lambda1 = s.lambda_l;
  const double dense = 0.01 * q * q * (p - 1);
  s.lambda_r = sigma * sigma * p / (3.0 + dense);
  s.lambda2 = dense > 0.0 ? sigma * sigma * p / dense : kInf;
  return s;
}

PenaltyGrid sequence_grid(const SimConfig& cfg) {
  const int c1 = cfg.grid1 > 0 ? cfg.grid1 : 50;
  const int c2 = cfg.grid2 > 0 ? cfg.grid2 : 50;
  PenaltyGrid g;
  g.lambda1_values = log_spaced(1e-4 * cfg.sigma, 1e4 * cfg.sigma, c1);
  g.lambda2_values = log_spaced(1e-4, 1e4, c2);
  return g;
}

}  // namespace

SimResult run_sequence_experiment(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.scenario != Scenario::sequence) {
    throw std::invalid_argument("run_sequence_experiment: wrong scenario");
  }
  if (cfg.tuning != Tuning::oracle && cfg.tuning != Tuning::plugin) {
    throw std::invalid_argument(
        "run_sequence_experiment: sequence risks are analytic; tuning must "
        "be oracle or plugin");
  }
  const PenaltyGrid grid = sequence_grid(cfg);
  SimResult out;
  out.scenario = Scenario::sequence;
  for (double q : cfg.q_grid) {
    SequenceModel model;
    model.theta = gen_coefficients(cfg.p, q);
    model.sigma = cfg.sigma;
    const PlugInSet plug =
        sweep_plug_ins(cfg.p, cfg.sigma, cfg.plug_in_c, q);
    for (Estimator kind : cfg.estimators) {
      SimResultRow row;
      row.estimator = estimator_name(kind);
      row.q = q;
      if (kind == Estimator::ml) {
        row.risk = risk_vector(kind, model, PenaltyPair(0.0, 0.0));
        row.lambda1_mean = kNaN;
        row.lambda2_mean = kNaN;
      } else if (cfg.tuning == Tuning::oracle) {
        const OracleChoice oc = oracle_penalties(kind, model, grid);
        row.risk = oc.risk;
        row.lambda1_mean = oc.penalties.lambda1;
        row.lambda2_mean = oc.penalties.lambda2;
      } else {
        const PenaltyPair pens = plug.for_kind(kind);
        row.risk = risk_vector(kind, model, pens);
        row.lambda1_mean = pens.lambda1;
        row.lambda2_mean = pens.lambda2;
      }
      out.rows.push_back(row);
    }
  }
  return out;
}

namespace {

Estimator tuning_base_kind(Estimator kind) {
  if (kind == Estimator::post_lava) return Estimator::lava;
  if (kind == Estimator::post_lasso) return Estimator::lasso;
  return kind;
}

// True-risk grid argmin; only available inside the simulation where the mean
// vector is known.
PenaltyPair oracle_tune_regression(Estimator kind, const DesignMatrix& D,
                                   const Eigen::VectorXd& Y,
                                   const Eigen::VectorXd& mu,
                                   const PenaltyGrid& grid) {
  const auto points = enumerate_grid(kind, grid);
  std::vector<SurfacePoint> surface(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    surface[i] = {points[i].lambda1, points[i].lambda2, kNaN};
  }
  detail::for_each_grid_fit(
      kind, D, Y, grid, SolveOptions{},
      [&](std::size_t idx, const detail::GridFitInfo& info) {
        surface[idx].criterion =
            (*info.fitted - mu).squaredNorm() / static_cast<double>(D.n());
      },
      [&](std::size_t) {});
  const std::size_t best = detail::select_best(surface);
  return PenaltyPair(surface[best].lambda1, surface[best].lambda2);
}

struct RepOutcome {
  double risk = kNaN;
  double lambda1 = kNaN;
  double lambda2 = kNaN;
  bool failed = true;
};

}  // namespace

SimResult run_regression_experiment(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.scenario != Scenario::regression) {
    throw std::invalid_argument("run_regression_experiment: wrong scenario");
  }
  const int g1 = cfg.grid1 > 0 ? cfg.grid1 : 30;
  const int g2 = cfg.grid2 > 0 ? cfg.grid2 : 30;
  const Eigen::MatrixXd X_raw =
      gen_design(cfg.design, cfg.n, cfg.p, cfg.seed, cfg.k_factors);
  const DesignMatrix D = normalize_design(X_raw);
  const DesignSvd dsvd(D);
  const std::size_t n_est = cfg.estimators.size();

  SimResult out;
  out.scenario = Scenario::regression;
  for (double q : cfg.q_grid) {
    const Eigen::VectorXd theta = gen_coefficients(cfg.p, q);
    const Eigen::VectorXd mu = X_raw * theta;
    // Normalized-scale split norms for the plug-in map.
    Eigen::VectorXd beta_norm = theta.cwiseProduct(D.column_scales);
    beta_norm[0] = 0.0;
    const Eigen::VectorXd theta_norm = theta.cwiseProduct(D.column_scales);

    std::vector<std::vector<RepOutcome>> cells(
        n_est, std::vector<RepOutcome>(static_cast<std::size_t>(cfg.B)));

    parallel_for(static_cast<std::size_t>(cfg.B), [&](std::size_t r) {
      RngStream stream(cfg.seed, static_cast<std::int64_t>(r));
      Eigen::VectorXd Y(cfg.n);
      for (int i = 0; i < cfg.n; ++i) {
        Y[i] = mu[i] + cfg.sigma_u * stream.normal();
      }
      const std::uint64_t cv_seed =
          splitmix64(splitmix64(cfg.seed) ^ (0xC0FFEEULL + r));

      double sigma2 = cfg.sigma_u * cfg.sigma_u;
      if (!cfg.sure_known_variance &&
          (cfg.tuning == Tuning::sure || cfg.tuning == Tuning::cv)) {
        try {
          sigma2 = estimate_noise_variance(D, Y).sigma2;
        } catch (const std::exception&) {
          // keep the nominal level for grid centering
        }
      }
      sigma2 = std::max(sigma2, 1e-12);
      PenaltyGrid grid;
      try {
        grid = default_regression_grid(cfg.n, cfg.p, sigma2, g1, g2);
      } catch (const std::exception&) {
        return;  // every estimator in this replication counts as failed
      }

      std::map<Estimator, PenaltyPair> tuned;
      for (std::size_t e = 0; e < n_est; ++e) {
        const Estimator kind = cfg.estimators[e];
        RepOutcome& cell = cells[e][r];
        try {
          PenaltyPair pens(0.0, 0.0);
          if (kind != Estimator::ml) {
            // SURE has no unbiased estimate for the refitted estimators, so
            // they inherit the base choice there; oracle and CV tune each
            // estimator on its own criterion.
            const Estimator base = cfg.tuning == Tuning::sure
                                       ? tuning_base_kind(kind)
                                       : kind;
            auto found = tuned.find(base);
            if (found != tuned.end()) {
              pens = found->second;
            } else {
              switch (cfg.tuning) {
                case Tuning::oracle:
                  pens = oracle_tune_regression(base, D, Y, mu, grid);
                  break;
                case Tuning::plugin: {
                  PlugInSet s;
                  const double sz =
                      cfg.sigma_u / std::sqrt(static_cast<double>(cfg.n));
                  s.lambda_l = 2.0 * sz *
                               std_normal_quantile(
                                   1.0 - cfg.plug_in_c / (2.0 * cfg.p));
                  s.lambda1 = s.lambda_l;
                  const double tn = theta_norm.squaredNorm();
                  const double bn = beta_norm.squaredNorm();
                  s.lambda_r = tn > 0.0 ? sz * sz * cfg.p / tn : kInf;
                  s.lambda2 = bn > 0.0 ? sz * sz * cfg.p / bn : kInf;
                  pens = s.for_kind(base);
                  break;
                }
                case Tuning::sure:
                  pens = tune_sure(base, D, Y, grid, sigma2).chosen;
                  break;
                case Tuning::cv:
                  if (base == Estimator::lava || base == Estimator::post_lava) {
                    // One pass over the shared lasso path covers both.
                    const auto pair = tune_cv_lava_pair(D, Y, grid, cfg.folds,
                                                        cv_seed);
                    tuned.emplace(Estimator::lava, pair.first.chosen);
                    tuned.emplace(Estimator::post_lava, pair.second.chosen);
                    pens = tuned.at(base);
                  } else {
                    pens =
                        tune_cv(base, D, Y, grid, cfg.folds, cv_seed).chosen;
                  }
                  break;
              }
              tuned.emplace(base, pens);
            }
          }
          std::optional<RidgeProjection> proj;
          if (std::isfinite(pens.lambda2) && pens.lambda2 > 0.0 &&
              (kind == Estimator::lava || kind == Estimator::post_lava ||
               kind == Estimator::ridge)) {
            proj.emplace(dsvd.projection(pens.lambda2));
          }
          const RegressionFit fit = fit_estimator(
              kind, D, Y, pens, SolveOptions{}, proj ? &*proj : nullptr);
          if (!fit.converged) throw std::runtime_error("fit not converged");
          cell.risk =
              (fit.fitted - mu).squaredNorm() / static_cast<double>(cfg.n);
          cell.lambda1 = pens.lambda1;
          cell.lambda2 = pens.lambda2;
          cell.failed = false;
        } catch (const std::exception&) {
          cell.failed = true;
        }
      }
    });

    for (std::size_t e = 0; e < n_est; ++e) {
      SimResultRow row;
      row.estimator = estimator_name(cfg.estimators[e]);
      row.q = q;
      int ok = 0;
      double sum = 0.0, sum_l1 = 0.0, sum_l2 = 0.0;
      for (const auto& cell : cells[e]) {
        if (cell.failed) {
          ++row.failures;
          continue;
        }
        ++ok;
        sum += cell.risk;
        sum_l1 += cell.lambda1;
        sum_l2 += cell.lambda2;
      }
      row.reps = ok;
      if (ok > 0) {
        row.risk = sum / ok;
        row.lambda1_mean = sum_l1 / ok;
        row.lambda2_mean = sum_l2 / ok;
        double ss = 0.0;
        for (const auto& cell : cells[e]) {
          if (!cell.failed) ss += (cell.risk - row.risk) * (cell.risk - row.risk);
        }
        row.se = ok > 1 ? std::sqrt(ss / (ok - 1) / ok) : 0.0;
      } else {
        row.risk = kNaN;
        row.se = kNaN;
        row.lambda1_mean = kNaN;
        row.lambda2_mean = kNaN;
      }
      out.rows.push_back(row);
    }
  }
  return out;
}

SimResult run_experiment(const SimConfig& cfg) {
  return cfg.scenario == Scenario::sequence ? run_sequence_experiment(cfg)
                                            : run_regression_experiment(cfg);
}

}  // namespace lava
