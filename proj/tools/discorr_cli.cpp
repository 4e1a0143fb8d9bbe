// Command-line front end: validation, bounds checking, plan building,
// dataset generation, and replication studies.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "discorr/engine.hpp"
#include "discorr/eval.hpp"

using nlohmann::json;
namespace dc = discorr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct RunConfig {
  std::vector<dc::MarginalSpec> margins;
  std::optional<dc::CorrelationMatrix> correlation;
  dc::CalibrationOptions calibration;
  std::uint64_t seed = 0;
  int n = 2000;
  int replications = 200;
};

void reject_unknown(const json& j, const std::vector<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::invalid_argument("unknown key '" + key + "' in " + where);
  }
}

dc::CorrelationMatrix correlation_from_json(const json& j, size_t j_dim) {
  if (j.is_array()) {
    Eigen::MatrixXd m(j.size(), j.size());
    for (size_t r = 0; r < j.size(); ++r) {
      if (j[r].size() != j.size())
        throw std::invalid_argument("correlation matrix rows must all have length " +
                                    std::to_string(j.size()));
      for (size_t c = 0; c < j.size(); ++c) m(r, c) = j[r][c].get<double>();
    }
    return dc::CorrelationMatrix::from(std::move(m));
  }
  if (j.is_object() && j.contains("lower_triangle")) {
    reject_unknown(j, {"lower_triangle"}, "correlation");
    auto lower = j.at("lower_triangle").get<std::vector<double>>();
    if (lower.size() != j_dim * (j_dim - 1) / 2)
      throw std::invalid_argument("lower_triangle must have J(J-1)/2 entries");
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(j_dim, j_dim);
    size_t idx = 0;
    // column-major, matching how a lower-triangle vector fills a matrix
    for (size_t c = 0; c < j_dim; ++c)
      for (size_t r = c + 1; r < j_dim; ++r) {
        m(r, c) = lower[idx];
        m(c, r) = lower[idx];
        ++idx;
      }
    return dc::CorrelationMatrix::from(std::move(m));
  }
  throw std::invalid_argument("correlation must be a full matrix or {\"lower_triangle\": [...]}");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j = json::parse(in);  // throws json::parse_error on malformed input

  reject_unknown(j, {"margins", "correlation", "calibration", "seed", "n", "replications"},
                 "config");
  RunConfig cfg;
  if (!j.contains("margins") || !j.at("margins").is_array() || j.at("margins").empty())
    throw std::invalid_argument("config requires a nonempty 'margins' array");
  for (const auto& jm : j.at("margins")) {
    reject_unknown(jm, {"family", "theta", "lambda", "r", "n", "p"}, "margin entry");
    cfg.margins.push_back(dc::spec_from_json(jm));
  }
  if (j.contains("correlation"))
    cfg.correlation = correlation_from_json(j.at("correlation"), cfg.margins.size());
  if (j.contains("calibration")) {
    const json& jc = j.at("calibration");
    reject_unknown(jc, {"n_binary", "tolerance", "step_fraction", "max_iterations"},
                   "calibration");
    if (jc.contains("n_binary")) cfg.calibration.n_binary = jc.at("n_binary").get<int>();
    if (jc.contains("tolerance")) cfg.calibration.tolerance = jc.at("tolerance").get<double>();
    if (jc.contains("step_fraction"))
      cfg.calibration.step_fraction = jc.at("step_fraction").get<double>();
    if (jc.contains("max_iterations"))
      cfg.calibration.max_iterations = jc.at("max_iterations").get<int>();
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("n")) cfg.n = j.at("n").get<int>();
  if (j.contains("replications")) cfg.replications = j.at("replications").get<int>();
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write to " + path);
  out << content;
}

int cmd_validate(const RunConfig& cfg) {
  bool all_ok = true;
  for (size_t i = 0; i < cfg.margins.size(); ++i) {
    dc::ValidationReport rep = dc::validate_spec(cfg.margins[i]);
    std::cout << "margin " << (i + 1) << " " << cfg.margins[i].describe() << ": ";
    if (rep.ok()) {
      std::cout << "ok\n";
    } else {
      all_ok = false;
      std::cout << "INVALID";
      for (const auto& v : rep.violations) std::cout << " [" << v.field << ": " << v.constraint << "]";
      std::cout << "\n";
    }
  }
  return all_ok ? kExitOk : kExitDomain;
}

json bounds_report_to_json(const dc::BoundsReport& rep) {
  json pairs = json::array();
  for (const auto& p : rep.pairs) {
    const char* verdict = p.verdict == dc::Verdict::Feasible    ? "feasible"
                          : p.verdict == dc::Verdict::Marginal ? "marginal"
                                                               : "infeasible";
    pairs.push_back(json{{"i", p.i + 1},
                         {"j", p.j + 1},
                         {"target", p.target},
                         {"lower", p.lower},
                         {"upper", p.upper},
                         {"source", p.source},
                         {"verdict", verdict},
                         {"gsc_lower", p.gsc_lower},
                         {"gsc_upper", p.gsc_upper},
                         {"ep_lower", p.ep_lower},
                         {"ep_upper", p.ep_upper}});
  }
  return json{{"pairs", std::move(pairs)}, {"all_feasible", rep.all_feasible()}};
}

int cmd_bounds(const RunConfig& cfg, const std::string& out_path) {
  if (!cfg.correlation) throw std::invalid_argument("bounds requires a correlation matrix");
  std::vector<dc::TruncatedPmf> pmfs;
  std::vector<dc::CollapsedMargin> collapsed;
  for (const auto& spec : cfg.margins) {
    dc::ValidationReport v = dc::validate_spec(spec);
    if (!v.ok()) {
      std::cerr << "invalid margin: " << spec.describe() << "\n";
      return kExitDomain;
    }
    pmfs.push_back(dc::truncate_support(spec));
    collapsed.push_back(dc::collapse_margin(pmfs.back()));
  }
  dc::BoundsCheckOptions bopts;
  bopts.seed = cfg.seed;
  dc::BoundsReport rep = dc::check_target_matrix(pmfs, collapsed, *cfg.correlation, bopts);
  for (const auto& p : rep.pairs) {
    std::cout << "rho_" << (p.i + 1) << (p.j + 1) << " target " << p.target << " bounds ["
              << p.lower << ", " << p.upper << "] (" << p.source << "): "
              << (p.verdict == dc::Verdict::Feasible    ? "feasible"
                  : p.verdict == dc::Verdict::Marginal ? "marginal"
                                                       : "INFEASIBLE")
              << "\n";
  }
  if (!out_path.empty()) write_file(out_path, bounds_report_to_json(rep).dump(2) + "\n");
  return rep.all_feasible() ? kExitOk : kExitDomain;
}

int cmd_build(const RunConfig& cfg, const std::string& out_path) {
  if (!cfg.correlation) throw std::invalid_argument("build requires a correlation matrix");
  try {
    dc::GenerationPlan plan = dc::build_plan(cfg.margins, *cfg.correlation, cfg.calibration);
    write_file(out_path, dc::plan_to_json(plan).dump(2) + "\n");
    std::cout << "plan written to " << out_path << " (" << plan.dim() << " margins, "
              << plan.calibrations.size() << " calibrated pairs";
    if (plan.binary_repair.was_repaired || plan.latent_repair.was_repaired)
      std::cout << ", PD repair applied";
    std::cout << ")\n";
    return kExitOk;
  } catch (const dc::InfeasibleTargetError& e) {
    std::cerr << "infeasible target correlations:";
    for (const auto& lbl : e.report.infeasible_labels()) std::cerr << " " << lbl;
    std::cerr << "\n";
    return kExitDomain;
  } catch (const dc::CalibrationFailureError& e) {
    std::cerr << "calibration did not converge for:";
    for (const auto& c : e.calibrations)
      if (!c.converged) std::cerr << " rho_" << (c.i + 1) << (c.j + 1);
    std::cerr << "\n";
    return kExitDomain;
  }
}

int cmd_generate(const std::string& plan_path, int n, std::uint64_t seed,
                 const std::string& out_path) {
  std::ifstream in(plan_path);
  if (!in) throw std::invalid_argument("cannot open plan file: " + plan_path);
  dc::GenerationPlan plan = dc::plan_from_json(json::parse(in));
  if (n < 1) {
    std::cerr << "n must be >= 1\n";
    return kExitUsage;
  }
  dc::Dataset ds = dc::generate(plan, n, seed);
  write_file(out_path, dc::dataset_to_csv(ds));

  json corr = json::array();
  for (int i = 0; i < ds.empirical.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < ds.empirical.cols(); ++j) row.push_back(ds.empirical(i, j));
    corr.push_back(std::move(row));
  }
  const std::size_t plan_hash = std::hash<std::string>{}(dc::plan_to_json(plan).dump());
  json meta{{"seed", seed},
            {"n", n},
            {"plan_hash", plan_hash},
            {"columns", ds.labels},
            {"empirical_correlation", std::move(corr)}};
  write_file(out_path + ".meta.json", meta.dump(2) + "\n");
  std::cout << n << " x " << plan.dim() << " dataset written to " << out_path << "\n";
  return kExitOk;
}

int cmd_replicate(const RunConfig* cfg, const std::string& preset, int replications,
                  std::uint64_t seed, const std::string& out_path,
                  const dc::CalibrationOptions& cal) {
  dc::Scenario scenario;
  if (!preset.empty()) {
    scenario = dc::preset_scenario(preset);
  } else {
    if (!cfg || !cfg->correlation)
      throw std::invalid_argument("replicate requires --preset or a config with a correlation");
    scenario.name = "custom";
    scenario.specs = cfg->margins;
    scenario.sigma_star = *cfg->correlation;
    scenario.n = cfg->n;
    scenario.replications = cfg->replications;
  }
  if (replications > 0) scenario.replications = replications;
  if (scenario.replications < 2)
    std::cerr << "warning: R < 2, SD/SB columns are undefined\n";

  dc::EvalOptions opts;
  opts.calibration = cal;
  dc::EvalTable table = dc::run_replication(scenario, opts, seed);
  std::cout << table.to_text();
  if (!out_path.empty()) write_file(out_path, table.to_csv());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"correlated discrete data generation (generalized Poisson, "
               "negative binomial, binomial margins)"};
  app.require_subcommand(1);

  std::string config_path, plan_path, out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int n = 0, replications = 0;
  double tolerance = 0, step_fraction = 0;
  int n_binary = 0;
  std::string preset;

  auto add_cal_flags = [&](CLI::App* cmd) {
    cmd->add_option("--tolerance", tolerance, "calibration tolerance override");
    cmd->add_option("--n-binary", n_binary, "calibration sample size override");
    cmd->add_option("--step-fraction", step_fraction, "calibration step fraction override");
  };
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  CLI::App* validate = app.add_subcommand("validate", "validate marginal parameters");
  validate->add_option("config", config_path, "JSON config file")->required();

  CLI::App* bounds = app.add_subcommand("bounds", "check correlation feasibility bounds");
  bounds->add_option("config", config_path, "JSON config file")->required();
  bounds->add_option("--out", out_path, "write JSON bounds report here");
  add_seed(bounds);

  CLI::App* build = app.add_subcommand("build", "calibrate and write a generation plan");
  build->add_option("config", config_path, "JSON config file")->required();
  build->add_option("--out", out_path, "plan output path")->required();
  add_seed(build);
  add_cal_flags(build);

  CLI::App* generate = app.add_subcommand("generate", "generate a dataset from a plan");
  generate->add_option("--plan", plan_path, "plan JSON file")->required();
  generate->add_option("--n", n, "number of rows")->required();
  generate->add_option("--out", out_path, "CSV output path")->required();
  add_seed(generate);

  CLI::App* replicate = app.add_subcommand("replicate", "run a replication study");
  replicate->add_option("--preset", preset, "preset scenario name (e.g. gp-large)");
  replicate->add_option("--config", config_path, "JSON config file for a custom scenario");
  replicate->add_option("--replications", replications, "number of replicates");
  replicate->add_option("--n", n, "rows per replicate (custom scenarios)");
  replicate->add_option("--out", out_path, "CSV table output path");
  add_seed(replicate);
  add_cal_flags(replicate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    std::optional<RunConfig> cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (cfg) {
      if (seed_set) cfg->seed = seed;
      if (n > 0) cfg->n = n;
      if (tolerance > 0) cfg->calibration.tolerance = tolerance;
      if (n_binary > 0) cfg->calibration.n_binary = n_binary;
      if (step_fraction > 0) cfg->calibration.step_fraction = step_fraction;
      cfg->calibration.seed = cfg->seed;
    }

    if (validate->parsed()) return cmd_validate(*cfg);
    if (bounds->parsed()) return cmd_bounds(*cfg, out_path);
    if (build->parsed()) return cmd_build(*cfg, out_path);
    if (generate->parsed()) return cmd_generate(plan_path, n, seed_set ? seed : 0, out_path);
    if (replicate->parsed()) {
      dc::CalibrationOptions cal = cfg ? cfg->calibration : dc::CalibrationOptions{};
      if (tolerance > 0) cal.tolerance = tolerance;
      if (n_binary > 0) cal.n_binary = n_binary;
      if (step_fraction > 0) cal.step_fraction = step_fraction;
      const std::uint64_t master = cfg && !seed_set ? cfg->seed : seed;
      return cmd_replicate(cfg ? &*cfg : nullptr, preset, replications, master, out_path, cal);
    }
    return kExitUsage;
  } catch (const json::parse_error& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    // malformed/unknown config content is a usage error; domain rejections
    // (validation, feasibility) surface through command return codes
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}
