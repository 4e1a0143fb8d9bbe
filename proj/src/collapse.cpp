#include "discorr/collapse.hpp"

#include <cmath>
#include <stdexcept>

namespace discorr {

namespace {

// Conditional PMF restricted to one binary category, on the full 0..K grid
// with zeros outside the category.
TruncatedPmf conditional_pmf(const TruncatedPmf& src, int median_m, bool category_one,
                             MedianSide side, double category_mass, double total) {
  TruncatedPmf out;
  out.support_max = src.support_max;
  out.probs.assign(src.probs.size(), 0.0);
  double mean = 0.0;
  for (int k = 0; k <= src.support_max; ++k) {
    const bool in_one = k > median_m || (k == median_m && side == MedianSide::One);
    if (in_one == category_one) out.probs[k] = src.probs[k] / (category_mass * total);
    mean += out.probs[k] * k;
  }
  out.mean = mean;
  double var = 0.0;
  for (int k = 0; k <= src.support_max; ++k)
    var += out.probs[k] * (k - mean) * (k - mean);
  out.variance = var;
  out.cdf.resize(out.probs.size());
  double c = 0.0;
  for (size_t k = 0; k < out.probs.size(); ++k) {
    c += out.probs[k];
    out.cdf[k] = c;
  }
  return out;
}

}  // namespace

CollapsedMargin collapse_margin(const TruncatedPmf& pmf) {
  const double total = pmf.total_mass();
  if (pmf.probs.size() < 2 || !(total > 0))
    throw std::invalid_argument("collapse_margin: degenerate margin");

  // smallest k with CDF >= 0.5 (on the normalized scale)
  int m = 0;
  double cum = 0.0;
  std::vector<double> norm(pmf.probs.size());
  for (size_t k = 0; k < pmf.probs.size(); ++k) norm[k] = pmf.probs[k] / total;
  for (size_t k = 0; k < norm.size(); ++k) {
    cum += norm[k];
    if (cum >= 0.5) {
      m = static_cast<int>(k);
      break;
    }
  }

  double mass_above = 0.0;  // strictly above M
  for (size_t k = m + 1; k < norm.size(); ++k) mass_above += norm[k];
  const double p_if_one = mass_above + norm[m];
  const double p_if_zero = mass_above;

  // the median point mass joins the side bringing E[Y^b] closer to 0.5;
  // exact ties go to One
  MedianSide side = std::fabs(p_if_one - 0.5) <= std::fabs(p_if_zero - 0.5)
                        ? MedianSide::One
                        : MedianSide::Zero;
  const double p_b = side == MedianSide::One ? p_if_one : p_if_zero;
  if (!(p_b > 0.0 && p_b < 1.0))
    throw std::invalid_argument("collapse_margin: collapsing yields a degenerate binary margin");

  CollapsedMargin out;
  out.source = pmf;
  out.median_m = m;
  out.median_side = side;
  out.p_b = p_b;
  out.cond_zero = conditional_pmf(pmf, m, false, side, 1.0 - p_b, total);
  out.cond_one = conditional_pmf(pmf, m, true, side, p_b, total);
  return out;
}

std::vector<int> expand(const CollapsedMargin& margin, const std::vector<int>& binary,
                        RngStream& stream) {
  std::vector<int> out(binary.size());
  for (size_t i = 0; i < binary.size(); ++i) {
    const double u = stream.uniform();  // one uniform per entry, both categories
    if (binary[i] == 1)
      out[i] = margin.cond_one.quantile(u);
    else if (binary[i] == 0)
      out[i] = margin.cond_zero.quantile(u);
    else
      throw std::invalid_argument("expand: binary entries must be 0 or 1");
  }
  return out;
}

}  // namespace discorr
