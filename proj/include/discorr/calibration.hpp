#ifndef DISCORR_CALIBRATION_HPP
#define DISCORR_CALIBRATION_HPP

#include <cstdint>
#include <tuple>
#include <vector>

#include "discorr/collapse.hpp"
#include "discorr/gaussian_core.hpp"

namespace discorr {

struct CalibrationOptions {
  int n_binary = 100000;
  double tolerance = 0.001;
  double step_fraction = 0.5;
  int max_iterations = 50;
  std::uint64_t seed = 0;
};

struct CalibrationStep {
  double delta_b;
  double delta_star_c;
};

struct PairCalibration {
  int i = 0, j = 0;
  double target = 0.0;         // delta*
  double delta_b = 0.0;        // final binary correlation
  double achieved = 0.0;       // delta*^c at the final iterate
  int iterations = 0;
  bool converged = false;
  std::vector<CalibrationStep> trajectory;
};

// Find the binary correlation delta_b whose reverse-collapsed discrete
// correlation matches delta_star: at each iterate, generate n_binary
// bivariate binaries through the latent-normal threshold construction,
// expand both columns, measure the Pearson correlation and update
//   delta_b += step_fraction * (delta_star - delta_star_c)
// clamped inside the EP bounds shrunk by 1e-4.
PairCalibration calibrate_pair(const CollapsedMargin& a, const CollapsedMargin& b,
                               double delta_star, const CalibrationOptions& opts,
                               RngStream& stream);

// All J(J-1)/2 pairs, each on its own derived stream, assembled into the
// binary correlation matrix and PD-repaired.
std::tuple<CorrelationMatrix, PdRepairReport, std::vector<PairCalibration>>
calibrate_matrix(const std::vector<CollapsedMargin>& margins,
                 const CorrelationMatrix& sigma_star, const CalibrationOptions& opts);

}  // namespace discorr

#endif
