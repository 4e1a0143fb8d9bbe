#ifndef DISCORR_EVAL_HPP
#define DISCORR_EVAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "discorr/engine.hpp"

namespace discorr {

struct Scenario {
  std::string name;
  std::vector<MarginalSpec> specs;
  CorrelationMatrix sigma_star;
  int n = 2000;           // observations per dataset
  int replications = 200;
};

enum class ParamKind { MarginalParam, Correlation };

struct EvalRow {
  std::string label;
  ParamKind kind = ParamKind::MarginalParam;
  double tv = 0.0;    // true value
  double ae = 0.0;    // average estimate
  double sd = 0.0;    // standard deviation of estimates
  double rb = 0.0;    // |(AE - TV)/TV| * 100
  double sb = 0.0;    // |AE - TV| / SD * 100
  double rmse = 0.0;
  double cr = 0.0;    // CI coverage * 100
  int excluded = 0;   // replicates dropped for infeasible moments
};

struct EvalTable {
  std::string scenario;
  int n = 0;
  int replications = 0;
  std::vector<EvalRow> rows;

  const EvalRow* find(const std::string& label) const;
  std::string to_csv() const;
  std::string to_text() const;
};

// Scenario presets at both N = 200 and N = 2000:
//   gp-small / gp-large            five generalized Poisson, unstructured
//   nb-small / nb-large            five negative binomial, exchangeable 0.5
//   binomial-small / binomial-large five binomial, Toeplitz
//   mixed-small / mixed-large      two of each family
std::vector<Scenario> preset_scenarios();
Scenario preset_scenario(const std::string& name);

struct EvalOptions {
  CalibrationOptions calibration;
  int bootstrap_b = 500;
  double ci_level = 0.95;
};

// Calibrate one plan, then per replicate: generate n rows, method-of-moments
// estimate every marginal parameter, collect every pairwise correlation, and
// aggregate into the TV/AE/SD/RB/SB/RMSE/CR table.
EvalTable run_replication(const Scenario& scenario, const EvalOptions& opts,
                          std::uint64_t seed);

// Fisher z-transform normal interval for a correlation estimate.
std::pair<double, double> fisher_ci(double r, int n, double level);

}  // namespace discorr

#endif
