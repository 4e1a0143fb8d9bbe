#ifndef DISCORR_CORR_BOUNDS_HPP
#define DISCORR_CORR_BOUNDS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "discorr/collapse.hpp"
#include "discorr/gaussian_core.hpp"
#include "discorr/marginals.hpp"

namespace discorr {

enum class Verdict { Feasible, Marginal, Infeasible };

struct PairBound {
  int i = 0, j = 0;           // 0-based column indices, i < j
  double target = 0.0;
  double lower = 0.0, upper = 0.0;  // effective (tightest) bounds
  std::string source;         // "GSC" or "EP", whichever binds
  Verdict verdict = Verdict::Feasible;
  double gsc_lower = 0.0, gsc_upper = 0.0;
  double ep_lower = 0.0, ep_upper = 0.0;
};

struct BoundsReport {
  std::vector<PairBound> pairs;
  bool all_feasible() const;
  std::vector<std::string> infeasible_labels() const;  // "rho_ij" (1-based)
};

// Generate-Sort-Correlate approximation of the Frechet-Hoeffding correlation
// bounds: one set of n uniforms mapped comonotonically (upper) and
// antimonotonically (lower) through both quantile functions.
std::pair<double, double> gsc_bounds(const TruncatedPmf& a, const TruncatedPmf& b, int n,
                                     RngStream& stream);

// Closed-form correlation bounds for a Bernoulli pair with expectations
// (p_i, p_j).
std::pair<double, double> ep_binary_bounds(double p_i, double p_j);

struct BoundsCheckOptions {
  int gsc_n = 100000;
  double marginal_band = 0.01;
  std::uint64_t seed = 0;
};

// Check every off-diagonal target against the GSC bounds on the discrete
// scale and the EP bounds on the collapsed binary scale.
BoundsReport check_target_matrix(const std::vector<TruncatedPmf>& pmfs,
                                 const std::vector<CollapsedMargin>& collapsed,
                                 const CorrelationMatrix& sigma,
                                 const BoundsCheckOptions& opts);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace discorr

#endif
