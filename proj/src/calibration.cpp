#include "discorr/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "discorr/corr_bounds.hpp"
#include "discorr/parallel.hpp"

namespace discorr {

namespace {

// One evaluation of the forward map: binary pair at delta_b, expanded to the
// discrete scale, measured by Pearson correlation.
double reverse_collapsed_corr(const CollapsedMargin& a, const CollapsedMargin& b,
                              double delta_b, int n, RngStream& stream) {
  const double rho = solve_tetrachoric(a.p_b, b.p_b, delta_b);
  Eigen::MatrixXd chol(2, 2);
  chol << 1.0, 0.0, rho, std::sqrt(1.0 - rho * rho);
  const double za = std_normal_quantile(a.p_b);
  const double zb = std_normal_quantile(b.p_b);

  std::vector<int> bin_a(n), bin_b(n);
  for (int i = 0; i < n; ++i) {
    const double n1 = stream.normal();
    const double n2 = stream.normal();
    bin_a[i] = n1 <= za ? 1 : 0;
    bin_b[i] = chol(1, 0) * n1 + chol(1, 1) * n2 <= zb ? 1 : 0;
  }
  const std::vector<int> xa = expand(a, bin_a, stream);
  const std::vector<int> xb = expand(b, bin_b, stream);
  std::vector<double> da(xa.begin(), xa.end()), db(xb.begin(), xb.end());
  return pearson(da, db);
}

}  // namespace

PairCalibration calibrate_pair(const CollapsedMargin& a, const CollapsedMargin& b,
                               double delta_star, const CalibrationOptions& opts,
                               RngStream& stream) {
  auto [ep_lo, ep_hi] = ep_binary_bounds(a.p_b, b.p_b);
  const double lo = ep_lo + 1e-4, hi = ep_hi - 1e-4;
  if (delta_star < ep_lo || delta_star > ep_hi)
    throw std::invalid_argument("calibrate_pair: target outside EP binary bounds");

  PairCalibration cal;
  cal.target = delta_star;

  double delta_b = std::clamp(delta_star, lo, hi);
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double achieved = reverse_collapsed_corr(a, b, delta_b, opts.n_binary, stream);
    cal.trajectory.push_back({delta_b, achieved});
    cal.delta_b = delta_b;
    cal.achieved = achieved;
    cal.iterations = it + 1;
    if (std::fabs(delta_star - achieved) <= opts.tolerance) {
      cal.converged = true;
      return cal;
    }
    delta_b = std::clamp(delta_b + opts.step_fraction * (delta_star - achieved), lo, hi);
  }
  return cal;  // converged stays false
}

std::tuple<CorrelationMatrix, PdRepairReport, std::vector<PairCalibration>>
calibrate_matrix(const std::vector<CollapsedMargin>& margins,
                 const CorrelationMatrix& sigma_star, const CalibrationOptions& opts) {
  const int j_dim = sigma_star.dim();
  if (static_cast<int>(margins.size()) != j_dim)
    throw std::invalid_argument("calibrate_matrix: dimension mismatch");

  struct PairTask {
    int i, j;
  };
  std::vector<PairTask> tasks;
  for (int i = 0; i < j_dim; ++i)
    for (int j = i + 1; j < j_dim; ++j) tasks.push_back({i, j});

  std::vector<PairCalibration> cals(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), [&](int t) {
    const auto [i, j] = tasks[t];
    RngStream stream = RngStream::derive(opts.seed, Phase::Calibration,
                                         static_cast<std::uint64_t>(i) * j_dim + j);
    PairCalibration cal = calibrate_pair(margins[i], margins[j], sigma_star.m(i, j), opts, stream);
    cal.i = i;
    cal.j = j;
    cals[t] = std::move(cal);
  });

  Eigen::MatrixXd sigma_b = Eigen::MatrixXd::Identity(j_dim, j_dim);
  for (const auto& cal : cals) {
    sigma_b(cal.i, cal.j) = cal.delta_b;
    sigma_b(cal.j, cal.i) = cal.delta_b;
  }
  PdRepairReport repair = nearest_pd(CorrelationMatrix::from(sigma_b));
  return {CorrelationMatrix::from(repair.repaired), repair, cals};
}

}  // namespace discorr
