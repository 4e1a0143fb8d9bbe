#ifndef DISCORR_ENGINE_HPP
#define DISCORR_ENGINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "discorr/calibration.hpp"
#include "discorr/collapse.hpp"
#include "discorr/corr_bounds.hpp"
#include "discorr/gaussian_core.hpp"
#include "discorr/marginals.hpp"

namespace discorr {

struct PlanMargin {
  MarginalSpec spec;
  TruncatedPmf pmf;
  CollapsedMargin collapsed;
};

// Everything needed for repeated generation: calibrate once, generate any
// number of datasets of any size without re-solving.
struct GenerationPlan {
  int schema_version = 1;
  std::vector<PlanMargin> margins;
  CorrelationMatrix sigma_star;    // target on the discrete scale
  CorrelationMatrix sigma_b;       // calibrated binary correlations
  CorrelationMatrix sigma_latent;  // tetrachoric solves of sigma_b
  PdRepairReport binary_repair;
  PdRepairReport latent_repair;
  std::vector<PairCalibration> calibrations;

  int dim() const { return static_cast<int>(margins.size()); }
};

struct Dataset {
  Eigen::MatrixXi values;            // n x J nonnegative integers
  std::vector<std::string> labels;
  Eigen::MatrixXd empirical;         // Pearson correlation of values
  std::uint64_t seed = 0;
};

// Thrown by build_plan when the target matrix fails the feasibility check;
// carries the full bounds report.
struct InfeasibleTargetError : std::runtime_error {
  BoundsReport report;
  explicit InfeasibleTargetError(BoundsReport r);
};

struct CalibrationFailureError : std::runtime_error {
  std::vector<PairCalibration> calibrations;
  explicit CalibrationFailureError(std::vector<PairCalibration> c);
};

GenerationPlan build_plan(const std::vector<MarginalSpec>& specs,
                          const CorrelationMatrix& sigma_star,
                          const CalibrationOptions& opts);

Dataset generate(const GenerationPlan& plan, int n, std::uint64_t seed);

Eigen::MatrixXd empirical_corr(const Eigen::MatrixXi& data);

nlohmann::json plan_to_json(const GenerationPlan& plan);
GenerationPlan plan_from_json(const nlohmann::json& j);

nlohmann::json spec_to_json(const MarginalSpec& s);
MarginalSpec spec_from_json(const nlohmann::json& j);

std::string dataset_to_csv(const Dataset& ds);

}  // namespace discorr

#endif
