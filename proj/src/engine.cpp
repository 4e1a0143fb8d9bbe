#include "discorr/engine.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "discorr/parallel.hpp"

namespace discorr {

using nlohmann::json;

InfeasibleTargetError::InfeasibleTargetError(BoundsReport r)
    : std::runtime_error("target correlation matrix is infeasible"), report(std::move(r)) {}

CalibrationFailureError::CalibrationFailureError(std::vector<PairCalibration> c)
    : std::runtime_error("pair calibration did not converge"), calibrations(std::move(c)) {}

GenerationPlan build_plan(const std::vector<MarginalSpec>& specs,
                          const CorrelationMatrix& sigma_star,
                          const CalibrationOptions& opts) {
  const int j_dim = static_cast<int>(specs.size());
  if (sigma_star.dim() != j_dim)
    throw std::invalid_argument("build_plan: spec count does not match matrix dimension");

  GenerationPlan plan;
  plan.sigma_star = sigma_star;
  plan.margins.reserve(specs.size());
  std::vector<TruncatedPmf> pmfs;
  std::vector<CollapsedMargin> collapsed;
  for (const auto& spec : specs) {
    ValidationReport v = validate_spec(spec);
    if (!v.ok()) {
      std::ostringstream os;
      os << "invalid spec " << spec.describe() << ":";
      for (const auto& viol : v.violations) os << " [" << viol.field << ": " << viol.constraint << "]";
      throw std::invalid_argument(os.str());
    }
    PlanMargin pm;
    pm.spec = spec;
    pm.pmf = truncate_support(spec);
    pm.collapsed = collapse_margin(pm.pmf);
    pmfs.push_back(pm.pmf);
    collapsed.push_back(pm.collapsed);
    plan.margins.push_back(std::move(pm));
  }

  if (j_dim > 1) {
    BoundsCheckOptions bopts;
    bopts.seed = opts.seed;
    bopts.gsc_n = std::max(opts.n_binary, 10000);
    BoundsReport bounds = check_target_matrix(pmfs, collapsed, sigma_star, bopts);
    if (!bounds.all_feasible()) throw InfeasibleTargetError(std::move(bounds));

    auto [sigma_b, repair, cals] = calibrate_matrix(collapsed, sigma_star, opts);
    for (const auto& cal : cals)
      if (!cal.converged) throw CalibrationFailureError(cals);
    plan.sigma_b = sigma_b;
    plan.binary_repair = repair;
    plan.calibrations = std::move(cals);

    // tetrachoric (latent-normal) matrix is materialized once so generation
    // never re-solves
    Eigen::MatrixXd latent = Eigen::MatrixXd::Identity(j_dim, j_dim);
    for (int i = 0; i < j_dim; ++i) {
      for (int j = i + 1; j < j_dim; ++j) {
        const double rho =
            solve_tetrachoric(collapsed[i].p_b, collapsed[j].p_b, plan.sigma_b.m(i, j));
        latent(i, j) = rho;
        latent(j, i) = rho;
      }
    }
    plan.latent_repair = nearest_pd(CorrelationMatrix::from(latent));
    plan.sigma_latent = CorrelationMatrix::from(plan.latent_repair.repaired);
  } else {
    plan.sigma_b = CorrelationMatrix::identity(1);
    plan.sigma_latent = CorrelationMatrix::identity(1);
    plan.binary_repair.input = plan.sigma_b.m;
    plan.binary_repair.repaired = plan.sigma_b.m;
    plan.latent_repair = plan.binary_repair;
  }
  return plan;
}

Eigen::MatrixXd empirical_corr(const Eigen::MatrixXi& data) {
  const int n = static_cast<int>(data.rows());
  const int j_dim = static_cast<int>(data.cols());
  if (n < 2) throw std::invalid_argument("empirical_corr: need >= 2 rows");
  Eigen::MatrixXd x = data.cast<double>();
  Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::MatrixXd cov = x.transpose() * x;
  Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (int j = 0; j < j_dim; ++j)
    if (!(sd(j) > 0)) throw std::invalid_argument("empirical_corr: zero-variance column");
  Eigen::MatrixXd corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  for (int i = 0; i < j_dim; ++i) {
    corr(i, i) = 1.0;
    for (int j = 0; j < i; ++j) corr(i, j) = corr(j, i);
  }
  return corr;
}

Dataset generate(const GenerationPlan& plan, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate: n must be >= 1");
  const int j_dim = plan.dim();
  if (j_dim == 0) throw std::invalid_argument("generate: empty plan");

  // iid normals with one derived stream per column, correlated through the
  // lower-triangular factor
  Eigen::MatrixXd z(n, j_dim);
  parallel_for(j_dim, [&](int col) {
    RngStream stream = RngStream::derive(seed, Phase::GenerationLatent, col);
    for (int row = 0; row < n; ++row) z(row, col) = stream.normal();
  });
  const Eigen::MatrixXd l = lower_cholesky(plan.sigma_latent);
  Eigen::MatrixXd latent = z * l.transpose();

  std::vector<double> pb(j_dim);
  for (int j = 0; j < j_dim; ++j) pb[j] = plan.margins[j].collapsed.p_b;
  Eigen::MatrixXi binary = dichotomize(latent, pb);

  Dataset ds;
  ds.seed = seed;
  ds.values.resize(n, j_dim);
  parallel_for(j_dim, [&](int col) {
    RngStream stream = RngStream::derive(seed, Phase::GenerationExpand, col);
    std::vector<int> bin(n);
    for (int row = 0; row < n; ++row) bin[row] = binary(row, col);
    const std::vector<int> vals = expand(plan.margins[col].collapsed, bin, stream);
    for (int row = 0; row < n; ++row) ds.values(row, col) = vals[row];
  });

  ds.labels.resize(j_dim);
  for (int j = 0; j < j_dim; ++j) {
    std::ostringstream os;
    os << "y" << (j + 1);
    ds.labels[j] = os.str();
  }
  ds.empirical = j_dim > 1 && n > 1 ? empirical_corr(ds.values)
                                    : Eigen::MatrixXd::Identity(j_dim, j_dim);
  return ds;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

json pmf_to_json(const TruncatedPmf& p) {
  return json{{"support_max", p.support_max}, {"probs", p.probs},     {"cdf", p.cdf},
              {"mean", p.mean},               {"variance", p.variance},
              {"mass_deficit", p.mass_deficit}};
}

TruncatedPmf pmf_from_json(const json& j) {
  TruncatedPmf p;
  p.support_max = j.at("support_max").get<int>();
  p.probs = j.at("probs").get<std::vector<double>>();
  p.cdf = j.at("cdf").get<std::vector<double>>();
  p.mean = j.at("mean").get<double>();
  p.variance = j.at("variance").get<double>();
  p.mass_deficit = j.at("mass_deficit").get<double>();
  return p;
}

}  // namespace

json spec_to_json(const MarginalSpec& s) {
  switch (s.family) {
    case Family::GeneralizedPoisson:
      return json{{"family", "gp"}, {"theta", s.gp_theta}, {"lambda", s.gp_lambda}};
    case Family::NegativeBinomial:
      return json{{"family", "nb"}, {"r", s.nb_r}, {"p", s.nb_p}};
    case Family::Binomial:
      return json{{"family", "binomial"}, {"n", s.b_n}, {"p", s.b_p}};
  }
  throw std::logic_error("spec_to_json: unknown family");
}

MarginalSpec spec_from_json(const json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "gp")
    return MarginalSpec::gp(j.at("theta").get<double>(), j.at("lambda").get<double>());
  if (fam == "nb") return MarginalSpec::nb(j.at("r").get<int>(), j.at("p").get<double>());
  if (fam == "binomial")
    return MarginalSpec::binomial(j.at("n").get<int>(), j.at("p").get<double>());
  throw std::invalid_argument("unknown family '" + fam + "' (expected gp | nb | binomial)");
}

namespace {

json repair_to_json(const PdRepairReport& r) {
  return json{{"input", matrix_to_json(r.input)},
              {"repaired", matrix_to_json(r.repaired)},
              {"was_repaired", r.was_repaired},
              {"min_eig_before", r.min_eig_before},
              {"min_eig_after", r.min_eig_after},
              {"max_abs_change", r.max_abs_change}};
}

PdRepairReport repair_from_json(const json& j) {
  PdRepairReport r;
  r.input = matrix_from_json(j.at("input"));
  r.repaired = matrix_from_json(j.at("repaired"));
  r.was_repaired = j.at("was_repaired").get<bool>();
  r.min_eig_before = j.at("min_eig_before").get<double>();
  r.min_eig_after = j.at("min_eig_after").get<double>();
  r.max_abs_change = j.at("max_abs_change").get<double>();
  return r;
}

}  // namespace

json plan_to_json(const GenerationPlan& plan) {
  json margins = json::array();
  for (const auto& pm : plan.margins) {
    json cm{{"median_m", pm.collapsed.median_m},
            {"median_side", pm.collapsed.median_side == MedianSide::One ? "one" : "zero"},
            {"p_b", pm.collapsed.p_b},
            {"cond_zero", pmf_to_json(pm.collapsed.cond_zero)},
            {"cond_one", pmf_to_json(pm.collapsed.cond_one)}};
    margins.push_back(json{{"spec", spec_to_json(pm.spec)},
                           {"pmf", pmf_to_json(pm.pmf)},
                           {"collapsed", std::move(cm)}});
  }
  json cals = json::array();
  for (const auto& c : plan.calibrations) {
    json traj = json::array();
    for (const auto& s : c.trajectory)
      traj.push_back(json{{"delta_b", s.delta_b}, {"delta_star_c", s.delta_star_c}});
    cals.push_back(json{{"i", c.i},
                        {"j", c.j},
                        {"target", c.target},
                        {"delta_b", c.delta_b},
                        {"achieved", c.achieved},
                        {"iterations", c.iterations},
                        {"converged", c.converged},
                        {"trajectory", std::move(traj)}});
  }
  return json{{"schema_version", plan.schema_version},
              {"margins", std::move(margins)},
              {"sigma_star", matrix_to_json(plan.sigma_star.m)},
              {"sigma_b", matrix_to_json(plan.sigma_b.m)},
              {"sigma_latent", matrix_to_json(plan.sigma_latent.m)},
              {"binary_repair", repair_to_json(plan.binary_repair)},
              {"latent_repair", repair_to_json(plan.latent_repair)},
              {"calibrations", std::move(cals)}};
}

GenerationPlan plan_from_json(const json& j) {
  GenerationPlan plan;
  plan.schema_version = j.at("schema_version").get<int>();
  if (plan.schema_version != 1)
    throw std::invalid_argument("unsupported plan schema version");
  for (const auto& jm : j.at("margins")) {
    PlanMargin pm;
    pm.spec = spec_from_json(jm.at("spec"));
    pm.pmf = pmf_from_json(jm.at("pmf"));
    const json& cm = jm.at("collapsed");
    pm.collapsed.source = pm.pmf;
    pm.collapsed.median_m = cm.at("median_m").get<int>();
    pm.collapsed.median_side =
        cm.at("median_side").get<std::string>() == "one" ? MedianSide::One : MedianSide::Zero;
    pm.collapsed.p_b = cm.at("p_b").get<double>();
    pm.collapsed.cond_zero = pmf_from_json(cm.at("cond_zero"));
    pm.collapsed.cond_one = pmf_from_json(cm.at("cond_one"));
    plan.margins.push_back(std::move(pm));
  }
  plan.sigma_star = CorrelationMatrix::from(matrix_from_json(j.at("sigma_star")));
  plan.sigma_b = CorrelationMatrix::from(matrix_from_json(j.at("sigma_b")));
  plan.sigma_latent = CorrelationMatrix::from(matrix_from_json(j.at("sigma_latent")));
  plan.binary_repair = repair_from_json(j.at("binary_repair"));
  plan.latent_repair = repair_from_json(j.at("latent_repair"));
  for (const auto& jc : j.at("calibrations")) {
    PairCalibration c;
    c.i = jc.at("i").get<int>();
    c.j = jc.at("j").get<int>();
    c.target = jc.at("target").get<double>();
    c.delta_b = jc.at("delta_b").get<double>();
    c.achieved = jc.at("achieved").get<double>();
    c.iterations = jc.at("iterations").get<int>();
    c.converged = jc.at("converged").get<bool>();
    for (const auto& js : jc.at("trajectory"))
      c.trajectory.push_back({js.at("delta_b").get<double>(), js.at("delta_star_c").get<double>()});
    plan.calibrations.push_back(std::move(c));
  }
  return plan;
}

std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream os;
  for (size_t j = 0; j < ds.labels.size(); ++j) {
    if (j) os << ",";
    os << ds.labels[j];
  }
  os << "\n";
  for (int i = 0; i < ds.values.rows(); ++i) {
    for (int j = 0; j < ds.values.cols(); ++j) {
      if (j) os << ",";
      os << ds.values(i, j);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace discorr
