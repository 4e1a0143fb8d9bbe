#ifndef DISCORR_COLLAPSE_HPP
#define DISCORR_COLLAPSE_HPP

#include <vector>

#include "discorr/marginals.hpp"
#include "discorr/rng.hpp"

namespace discorr {

enum class MedianSide { Zero, One };

// A discrete margin dichotomized at its median, with the conditional PMFs
// needed to expand binary draws back to the discrete scale.
struct CollapsedMargin {
  TruncatedPmf source;
  int median_m = 0;
  MedianSide median_side = MedianSide::One;
  double p_b = 0.0;           // E[Y^b]
  TruncatedPmf cond_zero;     // probabilities p_k / (1 - p_b) on category 0
  TruncatedPmf cond_one;      // probabilities p_k / p_b on category 1
};

// M is the smallest k with cdf[k] >= 0.5; the point mass at M joins the
// side whose resulting E[Y^b] is closer to 0.5 (exact ties go to One).
CollapsedMargin collapse_margin(const TruncatedPmf& pmf);

// Replace each binary entry by an inverse-CDF draw from the matching
// conditional PMF, consuming exactly one uniform per entry in input order.
std::vector<int> expand(const CollapsedMargin& margin, const std::vector<int>& binary,
                        RngStream& stream);

}  // namespace discorr

#endif
