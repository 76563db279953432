// Command-line front end: fit sparse+dense estimators on CSV data, tune
// penalties by SURE or cross-validation, emit analytic risk curves and
// Monte-Carlo comparison tables, and report deviation-bound diagnostics.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lava/csv.hpp"
#include "lava/design.hpp"
#include "lava/estimators.hpp"
#include "lava/format.hpp"
#include "lava/lava_regression.hpp"
#include "lava/sequence_risk.hpp"
#include "lava/sim.hpp"
#include "lava/tuning.hpp"

namespace {

using namespace lava;

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct Dataset {
  DesignMatrix design;
  Eigen::VectorXd y;
  std::vector<std::string> names;
};

Dataset load_dataset(const std::string& path, bool normalize) {
  const CsvTable table = read_csv_matrix(path);
  if (table.data.cols() < 2) {
    throw CsvError("need a response column plus at least one regressor", 1,
                   static_cast<std::size_t>(table.data.cols()));
  }
  Dataset d;
  d.y = table.data.col(0);
  const Eigen::MatrixXd X = table.data.rightCols(table.data.cols() - 1);
  d.design = normalize ? normalize_design(X) : unnormalized_design(X);
  d.names.assign(table.header.begin() + 1, table.header.end());
  return d;
}

double parse_level(const std::string& text, const char* what) {
  if (text == "inf" || text == "+inf") return kInf;
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad value for ") + what + ": " +
                                text);
  }
}

std::vector<double> parse_q_grid(const std::string& spec) {
  std::vector<double> qs;
  if (spec.find(':') != std::string::npos) {
    double a, b, s;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &a, &b, &s) != 3 || s <= 0) {
      throw std::invalid_argument("bad --q-grid range: " + spec);
    }
    for (double q = a; q <= b + 1e-12; q += s) qs.push_back(q);
    return qs;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) qs.push_back(parse_level(tok, "q"));
  return qs;
}

// "l1=min:max:count;l2=min:max:count", either part optional.
void apply_grid_spec(const std::string& spec, PenaltyGrid& grid) {
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty()) continue;
    double lo, hi;
    int count;
    if (std::sscanf(part.c_str(), "l1=%lf:%lf:%d", &lo, &hi, &count) == 3) {
      grid.lambda1_values = log_spaced(lo, hi, count);
    } else if (std::sscanf(part.c_str(), "l2=%lf:%lf:%d", &lo, &hi, &count) ==
               3) {
      grid.lambda2_values = log_spaced(lo, hi, count);
    } else {
      throw std::invalid_argument("bad --grid-spec part: " + part);
    }
  }
  grid.validate();
}

std::vector<Estimator> parse_estimator_list(const std::string& spec) {
  std::vector<Estimator> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_estimator(tok));
  if (out.empty()) throw std::invalid_argument("empty estimator list");
  return out;
}

PenaltyPair penalties_for(Estimator kind, double l1, double l2) {
  switch (kind) {
    case Estimator::lasso:
    case Estimator::post_lasso:
      if (std::isnan(l1)) {
        throw std::invalid_argument("--lambda1 required for this estimator");
      }
      return PenaltyPair(l1, kInf);
    case Estimator::ridge:
      if (std::isnan(l2)) {
        throw std::invalid_argument("--lambda2 required for this estimator");
      }
      return PenaltyPair(kInf, l2);
    case Estimator::ml:
      return PenaltyPair(0.0, 0.0);
    default:
      if (std::isnan(l1) || std::isnan(l2)) {
        throw std::invalid_argument(
            "--lambda1 and --lambda2 required for this estimator");
      }
      return PenaltyPair(l1, l2);
  }
}

std::string fnv_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_fit(const std::string& data_path, const std::string& estimator_spec,
            double l1, double l2, double sigma2, const std::string& out,
            const std::string& summary_path, bool no_normalize) {
  const Estimator kind = parse_estimator(estimator_spec);
  const Dataset data = load_dataset(data_path, !no_normalize);
  const PenaltyPair pens = penalties_for(kind, l1, l2);
  const RegressionFit fit = fit_estimator(kind, data.design, data.y, pens);

  std::string coef =
      "index,beta_hat,delta_hat,theta_hat,in_active_set,column_scale\n";
  std::vector<bool> active(static_cast<std::size_t>(data.design.p()), false);
  for (int j : fit.active_set) active[static_cast<std::size_t>(j)] = true;
  for (Eigen::Index j = 0; j < data.design.p(); ++j) {
    coef += std::to_string(j) + ',' + format_double(fit.beta[j]) + ',' +
            format_double(fit.delta[j]) + ',' + format_double(fit.theta[j]) +
            ',' + (active[static_cast<std::size_t>(j)] ? "1" : "0") + ',' +
            format_double(data.design.column_scales[j]) + '\n';
  }
  write_text_file(out, coef);

  const bool post_kind =
      kind == Estimator::post_lava || kind == Estimator::post_lasso;
  std::ostringstream summary;
  summary << "command=fit\n";
  summary << "data=" << data_path << '\n';
  summary << "estimator=" << estimator_name(kind) << '\n';
  summary << "lambda1=" << format_double(pens.lambda1) << '\n';
  summary << "lambda2=" << format_double(pens.lambda2) << '\n';
  summary << "n=" << data.design.n() << '\n';
  summary << "p=" << data.design.p() << '\n';
  summary << "normalized=" << (no_normalize ? 0 : 1) << '\n';
  summary << "objective=" << format_double(fit.objective) << '\n';
  summary << "active_set_size=" << fit.active_set.size() << '\n';
  summary << "kkt_residual=" << format_double(fit.kkt_residual) << '\n';
  summary << "converged=" << (fit.converged ? 1 : 0) << '\n';
  if (!post_kind && kind != Estimator::ml) {
    const double s2 = std::isnan(sigma2) ? 1.0 : sigma2;
    DfSure ds;
    if (kind == Estimator::lava) {
      const LavaRegressionFit lf =
          fit_lava_regression(data.design, data.y, pens);
      ds = df_sure_lava(lf, data.design, data.y, s2);
    } else {
      ds = df_sure_baseline(kind, data.design, data.y, fit.fitted,
                            fit.active_set, pens, s2);
    }
    summary << "df=" << format_double(ds.df) << '\n';
    if (!std::isnan(sigma2)) {
      summary << "sigma2=" << format_double(sigma2) << '\n';
      summary << "sure=" << format_double(ds.sure) << '\n';
    }
  }
  write_text_file(summary_path, summary.str());
  std::cout << summary.str();

  if (!fit.converged) {
    std::cerr << "fit did not converge; KKT residual = "
              << format_double(fit.kkt_residual) << '\n';
    return kExitNumeric;
  }
  return 0;
}

int cmd_tune(const std::string& data_path, const std::string& estimator_spec,
             const std::string& method, int folds, std::uint64_t seed,
             double sigma2, const std::string& grid_spec,
             const std::string& out, const std::string& summary_path,
             bool no_normalize) {
  const Estimator kind = parse_estimator(estimator_spec);
  const Dataset data = load_dataset(data_path, !no_normalize);

  bool sigma_estimated = false;
  double sigma2_eff = sigma2;
  if (std::isnan(sigma2_eff)) {
    sigma2_eff = estimate_noise_variance(data.design, data.y).sigma2;
    sigma_estimated = true;
  }
  PenaltyGrid grid = default_regression_grid(
      data.design.n(), data.design.p(), std::max(sigma2_eff, 1e-12));
  if (!grid_spec.empty()) apply_grid_spec(grid_spec, grid);

  TuneResult res;
  if (method == "sure") {
    res = tune_sure(kind, data.design, data.y, grid, sigma2_eff);
  } else {
    res = tune_cv(kind, data.design, data.y, grid, folds, seed);
  }

  std::string surface = "method,lambda1,lambda2,criterion\n";
  for (const auto& pt : res.surface) {
    surface += method + ',' + format_double(pt.lambda1) + ',' +
               format_double(pt.lambda2) + ',' + format_double(pt.criterion) +
               '\n';
  }
  write_text_file(out, surface);

  std::ostringstream summary;
  summary << "command=tune\n";
  summary << "data=" << data_path << '\n';
  summary << "estimator=" << estimator_name(kind) << '\n';
  summary << "method=" << method << '\n';
  summary << "folds=" << folds << '\n';
  summary << "seed=" << seed << '\n';
  summary << "normalized=" << (no_normalize ? 0 : 1) << '\n';
  summary << "grid_lambda1_count=" << grid.lambda1_values.size() << '\n';
  summary << "grid_lambda2_count=" << grid.lambda2_values.size() << '\n';
  summary << "sigma2=" << format_double(sigma2_eff) << '\n';
  summary << "sigma2_estimated=" << (sigma_estimated ? 1 : 0) << '\n';
  summary << "chosen_lambda1=" << format_double(res.chosen.lambda1) << '\n';
  summary << "chosen_lambda2=" << format_double(res.chosen.lambda2) << '\n';
  summary << "best_criterion=" << format_double(res.best_criterion) << '\n';
  summary << "failures=" << res.failures << '\n';
  write_text_file(summary_path, summary.str());
  std::cout << summary.str();
  return 0;
}

int cmd_risk_curve(const std::string& model_spec, const std::string& policy,
                   const std::string& q_spec, const std::string& estimators,
                   double c, int grid1, int grid2, const std::string& out) {
  SimConfig cfg;
  cfg.scenario = Scenario::sequence;
  cfg.p = 100;
  cfg.sigma = 0.1;
  cfg.B = 1;
  cfg.plug_in_c = c;
  cfg.grid1 = grid1;
  cfg.grid2 = grid2;
  if (!model_spec.empty()) {
    std::stringstream ss(model_spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
      const auto eq = part.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("bad --model-spec part: " + part);
      }
      const std::string key = part.substr(0, eq);
      const std::string val = part.substr(eq + 1);
      if (key == "p") {
        cfg.p = std::stoi(val);
      } else if (key == "sigma") {
        cfg.sigma = std::stod(val);
      } else {
        throw std::invalid_argument("unknown --model-spec key: " + key);
      }
    }
  }
  if (policy == "oracle") {
    cfg.tuning = Tuning::oracle;
    cfg.estimators = {Estimator::lava,  Estimator::post_lava,
                      Estimator::lasso, Estimator::ridge,
                      Estimator::elastic_net, Estimator::ml};
  } else {
    cfg.tuning = Tuning::plugin;
    cfg.estimators = {Estimator::lava, Estimator::post_lava, Estimator::lasso,
                      Estimator::ridge, Estimator::ml};
  }
  if (!estimators.empty()) cfg.estimators = parse_estimator_list(estimators);
  cfg.q_grid = q_spec.empty()
                   ? std::vector<double>{0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5,
                                         1.75, 2.0}
                   : parse_q_grid(q_spec);

  const SimResult res = run_sequence_experiment(cfg);
  RiskTable table;
  for (const auto& row : res.rows) {
    table.rows.push_back({row.estimator, row.lambda1_mean, row.lambda2_mean,
                          row.q, row.risk, row.se, "analytic"});
  }
  write_text_file(out, table.to_csv());
  const std::string meta = cfg.to_text() + "policy=" + policy + "\n";
  write_text_file(out + ".meta", meta + "config_hash=" + fnv_hex(meta) + "\n");
  std::cout << "wrote " << out << " (" << table.rows.size() << " rows)\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const SimConfig cfg = SimConfig::from_text(read_text_file(config_path));
  std::filesystem::create_directories(out_dir);
  const SimResult res = run_experiment(cfg);
  write_text_file(out_dir + "/results.csv", res.to_csv());
  const std::string echo = cfg.to_text();
  write_text_file(out_dir + "/metadata.txt",
                  echo + "config_hash=" + fnv_hex(echo) + "\n");
  std::cout << "wrote " << out_dir << "/results.csv (" << res.rows.size()
            << " rows)\n";
  return 0;
}

int cmd_bounds(const std::string& data_path, double lambda2, double sigma_u,
               const std::string& beta0_path, double alpha, double eps,
               std::uint64_t seed, std::int64_t reps,
               const std::string& support_spec, double c,
               const std::string& out, bool no_normalize) {
  const Dataset data = load_dataset(data_path, !no_normalize);
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(data.design.p());
  if (!beta0_path.empty()) {
    const CsvTable t = read_csv_matrix(beta0_path);
    if (t.data.rows() != data.design.p() || t.data.cols() != 1) {
      throw CsvError("beta0 must be a single column of length p", 1, 1);
    }
    beta0 = t.data.col(0);
  }
  bool sigma_estimated = false;
  if (std::isnan(sigma_u)) {
    sigma_u = std::sqrt(estimate_noise_variance(data.design, data.y).sigma2);
    sigma_estimated = true;
  }
  const DeviationReport rep = bound_components(data.design, lambda2, beta0,
                                               sigma_u, alpha, eps, reps, seed);
  std::ostringstream out_text;
  out_text << "command=bounds\n";
  out_text << "data=" << data_path << '\n';
  out_text << "lambda2=" << format_double(lambda2) << '\n';
  out_text << "alpha=" << format_double(alpha) << '\n';
  out_text << "eps=" << format_double(eps) << '\n';
  out_text << "seed=" << seed << '\n';
  out_text << "reps=" << reps << '\n';
  out_text << "c=" << format_double(c) << '\n';
  out_text << "sigma_u=" << format_double(sigma_u) << '\n';
  out_text << "sigma_u_estimated=" << (sigma_estimated ? 1 : 0) << '\n';
  out_text << "lambda_quantile=" << format_double(rep.lambda_quantile) << '\n';
  out_text << "classical_bound=" << format_double(rep.classical_bound) << '\n';
  out_text << "lambda1=" << format_double(c * rep.lambda_quantile) << '\n';
  out_text << "bar_v=" << format_double(rep.bar_v) << '\n';
  out_text << "b2=" << format_double(rep.b2) << '\n';
  out_text << "b3=" << format_double(rep.b3) << '\n';
  out_text << "b4=" << format_double(rep.b4) << '\n';
  out_text << "k_norm=" << format_double(rep.k_norm) << '\n';
  if (!support_spec.empty()) {
    std::vector<int> support;
    std::stringstream ss(support_spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) support.push_back(std::stoi(tok));
    const double kappa = restricted_eigenvalue_surrogate(
        data.design, lambda2, support, std::max(c, 1.1), seed);
    out_text << "re_surrogate=" << format_double(kappa) << '\n';
    const double l1 = c * rep.lambda_quantile;
    const double b1_upper =
        kappa > 0.0 ? 8.0 * l1 * l1 * static_cast<double>(support.size()) /
                          (kappa * kappa)
                    : kInf;
    out_text << "b1_upper=" << format_double(b1_upper) << '\n';
  }
  write_text_file(out, out_text.str());
  std::cout << out_text.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lava: sparse+dense signal estimation"};
  app.require_subcommand(1);

  std::string data_path, out, summary_path, estimator = "lava";
  std::string method = "sure", grid_spec, model_spec, policy = "plugin";
  std::string q_spec, estimators_spec, config_path, out_dir = "sim_out";
  std::string beta0_path, support_spec, l1_text, l2_text;
  double sigma2 = std::nan(""), sigma_u = std::nan("");
  double alpha = 0.05, eps = 0.05, c_level = 0.05, c_bounds = 1.1;
  double bounds_l2 = 0.0;
  int folds = 5, grid1 = 0, grid2 = 0;
  std::uint64_t seed = 1;
  std::int64_t reps = 1000;
  bool no_normalize = false;

  auto* fit = app.add_subcommand("fit", "fit one estimator on CSV data");
  fit->add_option("data", data_path)->required();
  fit->add_option("--estimator", estimator);
  fit->add_option("--lambda1", l1_text, "l1 level (number or inf)");
  fit->add_option("--lambda2", l2_text, "l2 level (number or inf)");
  fit->add_option("--sigma2", sigma2);
  fit->add_option("--out", out)->default_val("fit_coefficients.csv");
  fit->add_option("--summary", summary_path)->default_val("fit_summary.txt");
  fit->add_flag("--no-normalize", no_normalize);

  auto* tune = app.add_subcommand("tune", "choose penalties by SURE or CV");
  tune->add_option("data", data_path)->required();
  tune->add_option("--estimator", estimator);
  tune->add_option("--method", method)->check(CLI::IsMember({"sure", "cv"}));
  tune->add_option("--folds", folds);
  tune->add_option("--seed", seed);
  tune->add_option("--sigma2", sigma2);
  tune->add_option("--grid-spec", grid_spec, "l1=min:max:count;l2=min:max:count");
  tune->add_option("--out", out)->default_val("tune_surface.csv");
  tune->add_option("--summary", summary_path)->default_val("tune_summary.txt");
  tune->add_flag("--no-normalize", no_normalize);

  auto* curve =
      app.add_subcommand("risk-curve", "analytic sequence-model risk curves");
  curve->add_option("--model-spec", model_spec, "p=100,sigma=0.1");
  curve->add_option("--penalty-policy", policy)
      ->check(CLI::IsMember({"oracle", "plugin"}));
  curve->add_option("--q-grid", q_spec, "start:stop:step or comma list");
  curve->add_option("--estimators", estimators_spec);
  curve->add_option("--c", c_level);
  curve->add_option("--grid1", grid1);
  curve->add_option("--grid2", grid2);
  curve->add_option("--out", out)->default_val("risk_curve.csv");

  auto* sim = app.add_subcommand("simulate", "seeded Monte-Carlo experiment");
  sim->add_option("--config", config_path)->required();
  sim->add_option("--out-dir", out_dir);

  auto* bounds = app.add_subcommand("bounds", "deviation-bound diagnostics");
  bounds->add_option("data", data_path)->required();
  bounds->add_option("--lambda2", bounds_l2)->required();
  bounds->add_option("--sigma-u", sigma_u);
  bounds->add_option("--beta0", beta0_path);
  bounds->add_option("--alpha", alpha);
  bounds->add_option("--eps", eps);
  bounds->add_option("--seed", seed);
  bounds->add_option("--reps", reps);
  bounds->add_option("--support", support_spec, "comma-separated indices");
  bounds->add_option("--c", c_bounds);
  bounds->add_option("--out", out)->default_val("bounds_report.txt");
  bounds->add_flag("--no-normalize", no_normalize);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitInput;
  }

  try {
    if (fit->parsed()) {
      const double l1 =
          l1_text.empty() ? std::nan("") : parse_level(l1_text, "--lambda1");
      const double l2 =
          l2_text.empty() ? std::nan("") : parse_level(l2_text, "--lambda2");
      return cmd_fit(data_path, estimator, l1, l2, sigma2, out, summary_path,
                     no_normalize);
    }
    if (tune->parsed()) {
      return cmd_tune(data_path, estimator, method, folds, seed, sigma2,
                      grid_spec, out, summary_path, no_normalize);
    }
    if (curve->parsed()) {
      return cmd_risk_curve(model_spec, policy, q_spec, estimators_spec,
                            c_level, grid1, grid2, out);
    }
    if (sim->parsed()) return cmd_simulate(config_path, out_dir);
    if (bounds->parsed()) {
      return cmd_bounds(data_path, bounds_l2, sigma_u, beta0_path, alpha, eps,
                        seed, reps, support_spec, c_bounds, out, no_normalize);
    }
  } catch (const CsvError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
