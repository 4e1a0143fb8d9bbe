#include "discorr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "discorr/parallel.hpp"

namespace discorr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::vector<Scenario> preset_scenarios() {
  std::vector<Scenario> out;

  // five generalized Poisson margins, unstructured correlations
  std::vector<MarginalSpec> gp_specs = {
      MarginalSpec::gp(5.14, 0.6445), MarginalSpec::gp(10.67, 0.1420),
      MarginalSpec::gp(30.38, -0.1378), MarginalSpec::gp(50.02, -0.0499),
      MarginalSpec::gp(2.0, 0.365)};
  Eigen::MatrixXd gp_sigma(5, 5);
  gp_sigma << 1, 0.0644, 0.1041, -0.0658, 0.2619,
      0.0644, 1, 0.1008, 0.1246, -0.0122,
      0.1041, 0.1008, 1, 0.0867, 0.1724,
      -0.0658, 0.1246, 0.0867, 1, 0.0452,
      0.2619, -0.0122, 0.1724, 0.0452, 1;

  // five negative binomial margins, exchangeable 0.5
  std::vector<MarginalSpec> nb_specs = {
      MarginalSpec::nb(3, 0.33), MarginalSpec::nb(8, 0.45), MarginalSpec::nb(15, 0.24),
      MarginalSpec::nb(20, 0.61), MarginalSpec::nb(43, 0.58)};
  Eigen::MatrixXd nb_sigma = Eigen::MatrixXd::Constant(5, 5, 0.5);
  nb_sigma.diagonal().setOnes();

  // five binomial margins, Toeplitz
  std::vector<MarginalSpec> b_specs = {
      MarginalSpec::binomial(5, 0.68), MarginalSpec::binomial(12, 0.36),
      MarginalSpec::binomial(25, 0.45), MarginalSpec::binomial(30, 0.51),
      MarginalSpec::binomial(40, 0.57)};
  Eigen::MatrixXd b_sigma(5, 5);
  const double toeplitz[5] = {1.0, 0.45, 0.40, 0.35, 0.30};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) b_sigma(i, j) = toeplitz[std::abs(i - j)];

  // six-variate mixed: two of each family
  std::vector<MarginalSpec> mix_specs = {
      MarginalSpec::gp(9.39, -0.023), MarginalSpec::gp(18.6, 0.1203),
      MarginalSpec::nb(6, 0.54), MarginalSpec::nb(15, 0.47),
      MarginalSpec::binomial(20, 0.62), MarginalSpec::binomial(40, 0.58)};
  Eigen::MatrixXd mix_sigma(6, 6);
  mix_sigma << 1, 0.28, 0.31, 0.27, 0.24, 0.17,
      0.28, 1, 0.18, 0.26, 0.11, 0.12,
      0.31, 0.18, 1, 0.14, 0.23, 0.26,
      0.27, 0.26, 0.14, 1, 0.24, 0.13,
      0.24, 0.11, 0.23, 0.24, 1, 0.15,
      0.17, 0.12, 0.26, 0.13, 0.15, 1;

  struct Base {
    std::string name;
    std::vector<MarginalSpec> specs;
    Eigen::MatrixXd sigma;
  };
  std::vector<Base> bases = {{"gp", gp_specs, gp_sigma},
                             {"nb", nb_specs, nb_sigma},
                             {"binomial", b_specs, b_sigma},
                             {"mixed", mix_specs, mix_sigma}};
  for (const auto& base : bases) {
    for (int n : {200, 2000}) {
      Scenario s;
      s.name = base.name + (n == 200 ? "-small" : "-large");
      s.specs = base.specs;
      s.sigma_star = CorrelationMatrix::from(base.sigma);
      s.n = n;
      s.replications = 200;
      out.push_back(std::move(s));
    }
  }
  return out;
}

Scenario preset_scenario(const std::string& name) {
  for (auto& s : preset_scenarios())
    if (s.name == name) return s;
  throw std::invalid_argument("unknown preset scenario '" + name + "'");
}

std::pair<double, double> fisher_ci(double r, int n, double level) {
  if (n < 4) throw std::invalid_argument("fisher_ci: n must be >= 4");
  r = std::clamp(r, -1.0 + 1e-15, 1.0 - 1e-15);
  const double z = std::atanh(r);
  const double half = std_normal_quantile(1.0 - (1.0 - level) / 2.0) / std::sqrt(n - 3.0);
  return {std::tanh(z - half), std::tanh(z + half)};
}

const EvalRow* EvalTable::find(const std::string& label) const {
  for (const auto& r : rows)
    if (r.label == label) return &r;
  return nullptr;
}

std::string EvalTable::to_csv() const {
  std::ostringstream os;
  os << "label,kind,tv,ae,sd,rb,sb,rmse,cr,excluded\n";
  os << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.label << "," << (r.kind == ParamKind::Correlation ? "correlation" : "marginal")
       << "," << r.tv << "," << r.ae << "," << r.sd << "," << r.rb << "," << r.sb << ","
       << r.rmse << "," << r.cr << "," << r.excluded << "\n";
  }
  return os.str();
}

std::string EvalTable::to_text() const {
  std::ostringstream os;
  os << scenario << "  (N = " << n << ", R = " << replications << ")\n";
  os << std::left << std::setw(10) << "param" << std::right << std::setw(10) << "TV"
     << std::setw(10) << "AE" << std::setw(10) << "SD" << std::setw(10) << "RB"
     << std::setw(10) << "SB" << std::setw(10) << "RMSE" << std::setw(8) << "CR\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << r.label << std::right << std::setw(10) << r.tv
       << std::setw(10) << r.ae << std::setw(10) << r.sd << std::setw(10) << r.rb
       << std::setw(10) << r.sb << std::setw(10) << r.rmse << std::setw(7)
       << std::setprecision(1) << r.cr << std::setprecision(4) << "\n";
  }
  return os.str();
}

namespace {

struct ParamSlot {
  std::string label;
  ParamKind kind;
  double tv;
};

double percentile(std::vector<double> sorted_copy, double q) {
  std::sort(sorted_copy.begin(), sorted_copy.end());
  const double pos = q * (static_cast<double>(sorted_copy.size()) - 1.0);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = static_cast<size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted_copy[lo] * (1.0 - frac) + sorted_copy[hi] * frac;
}

}  // namespace

EvalTable run_replication(const Scenario& scenario, const EvalOptions& opts,
                          std::uint64_t seed) {
  const int j_dim = static_cast<int>(scenario.specs.size());
  if (scenario.replications < 1) throw std::invalid_argument("run_replication: R must be >= 1");

  CalibrationOptions cal_opts = opts.calibration;
  cal_opts.seed = seed;
  GenerationPlan plan = build_plan(scenario.specs, scenario.sigma_star, cal_opts);

  // parameter layout: two per margin, then each correlation pair
  std::vector<ParamSlot> slots;
  for (int j = 0; j < j_dim; ++j) {
    const MarginalSpec& s = scenario.specs[j];
    const std::string idx = std::to_string(j + 1);
    switch (s.family) {
      case Family::GeneralizedPoisson:
        slots.push_back({"theta" + idx, ParamKind::MarginalParam, s.gp_theta});
        slots.push_back({"lambda" + idx, ParamKind::MarginalParam, s.gp_lambda});
        break;
      case Family::NegativeBinomial:
        slots.push_back({"r" + idx, ParamKind::MarginalParam, static_cast<double>(s.nb_r)});
        slots.push_back({"p" + idx, ParamKind::MarginalParam, s.nb_p});
        break;
      case Family::Binomial:
        slots.push_back({"n" + idx, ParamKind::MarginalParam, static_cast<double>(s.b_n)});
        slots.push_back({"p" + idx, ParamKind::MarginalParam, s.b_p});
        break;
    }
  }
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < j_dim; ++i)
    for (int j = i + 1; j < j_dim; ++j) {
      pairs.emplace_back(i, j);
      slots.push_back({"rho" + std::to_string(i + 1) + std::to_string(j + 1),
                       ParamKind::Correlation, scenario.sigma_star.m(i, j)});
    }
  const int n_params = static_cast<int>(slots.size());
  const int rep_count = scenario.replications;

  // estimates[r][p], covered[r][p]; NaN marks an excluded replicate
  std::vector<std::vector<double>> estimates(rep_count, std::vector<double>(n_params, kNaN));
  std::vector<std::vector<int>> covered(rep_count, std::vector<int>(n_params, -1));

  parallel_for(rep_count, [&](int rep) {
    const std::uint64_t gen_seed = mix_seed(seed, static_cast<std::uint64_t>(Phase::Replicate), rep);
    Dataset ds = generate(plan, scenario.n, gen_seed);

    for (int col = 0; col < j_dim; ++col) {
      std::vector<int> sample(scenario.n);
      for (int row = 0; row < scenario.n; ++row) sample[row] = ds.values(row, col);
      ParamEstimate est = mom_estimate(sample, scenario.specs[col].family);
      const int p0 = 2 * col, p1 = 2 * col + 1;
      if (!est.ok) continue;  // excluded for this replicate
      auto [e1, e2] = est.params();
      estimates[rep][p0] = e1;
      estimates[rep][p1] = e2;

      // nonparametric bootstrap percentile CI for both parameters
      RngStream boot = RngStream::derive(seed, Phase::Bootstrap,
                                         static_cast<std::uint64_t>(rep) * j_dim + col);
      std::vector<double> b1, b2;
      b1.reserve(opts.bootstrap_b);
      b2.reserve(opts.bootstrap_b);
      for (int b = 0; b < opts.bootstrap_b; ++b) {
        double sum = 0, sumsq = 0;
        for (int i = 0; i < scenario.n; ++i) {
          const int pick = sample[static_cast<int>(boot.uniform() * scenario.n)];
          sum += pick;
          sumsq += static_cast<double>(pick) * pick;
        }
        const double bm = sum / scenario.n;
        const double bv = (sumsq - scenario.n * bm * bm) / (scenario.n - 1.0);
        ParamEstimate be = mom_from_moments(bm, bv, scenario.specs[col].family);
        if (!be.ok) continue;
        auto [x1, x2] = be.params();
        b1.push_back(x1);
        b2.push_back(x2);
      }
      const double a = (1.0 - opts.ci_level) / 2.0;
      if (b1.size() >= 10) {
        covered[rep][p0] = (slots[p0].tv >= percentile(b1, a) &&
                            slots[p0].tv <= percentile(b1, 1.0 - a)) ? 1 : 0;
        covered[rep][p1] = (slots[p1].tv >= percentile(b2, a) &&
                            slots[p1].tv <= percentile(b2, 1.0 - a)) ? 1 : 0;
      }
    }

    for (size_t k = 0; k < pairs.size(); ++k) {
      const int p = 2 * j_dim + static_cast<int>(k);
      const double r = ds.empirical(pairs[k].first, pairs[k].second);
      estimates[rep][p] = r;
      auto [lo, hi] = fisher_ci(r, scenario.n, opts.ci_level);
      covered[rep][p] = (slots[p].tv >= lo && slots[p].tv <= hi) ? 1 : 0;
    }
  });

  EvalTable table;
  table.scenario = scenario.name;
  table.n = scenario.n;
  table.replications = rep_count;
  for (int p = 0; p < n_params; ++p) {
    EvalRow row;
    row.label = slots[p].label;
    row.kind = slots[p].kind;
    row.tv = slots[p].tv;

    std::vector<double> vals;
    int cov_num = 0, cov_den = 0;
    for (int rep = 0; rep < rep_count; ++rep) {
      if (std::isnan(estimates[rep][p])) continue;
      vals.push_back(estimates[rep][p]);
      if (covered[rep][p] >= 0) {
        ++cov_den;
        cov_num += covered[rep][p];
      }
    }
    row.excluded = rep_count - static_cast<int>(vals.size());
    if (vals.empty()) throw std::runtime_error("run_replication: all replicates excluded for " + row.label);

    double sum = 0;
    for (double v : vals) sum += v;
    row.ae = sum / static_cast<double>(vals.size());
    double ss = 0, sq = 0;
    for (double v : vals) {
      ss += (v - row.ae) * (v - row.ae);
      sq += (v - row.tv) * (v - row.tv);
    }
    row.sd = vals.size() > 1 ? std::sqrt(ss / (static_cast<double>(vals.size()) - 1.0)) : kNaN;
    row.rmse = std::sqrt(sq / static_cast<double>(vals.size()));
    row.rb = row.tv != 0 ? std::fabs((row.ae - row.tv) / row.tv) * 100.0 : kNaN;
    row.sb = row.sd > 0 ? std::fabs(row.ae - row.tv) / row.sd * 100.0 : kNaN;
    row.cr = cov_den > 0 ? 100.0 * cov_num / cov_den : kNaN;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace discorr
