#include "discorr/corr_bounds.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace discorr {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson: mismatched or undersized inputs");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0) || !(syy > 0)) throw std::invalid_argument("pearson: zero-variance input");
  return sxy / std::sqrt(sxx * syy);
}

std::pair<double, double> gsc_bounds(const TruncatedPmf& a, const TruncatedPmf& b, int n,
                                     RngStream& stream) {
  if (n < 10000) throw std::invalid_argument("gsc_bounds: n must be >= 10^4");
  std::vector<double> x(n), y_co(n), y_anti(n);
  for (int i = 0; i < n; ++i) {
    const double u = stream.uniform();
    x[i] = a.quantile(u);
    y_co[i] = b.quantile(u);
    // 1-u can hit 1.0 exactly at u=0; clamp into [0,1)
    y_anti[i] = b.quantile(std::min(1.0 - u, 1.0 - 0x1.0p-53));
  }
  const double lower = pearson(x, y_anti);
  const double upper = pearson(x, y_co);
  return {lower, upper};
}

std::pair<double, double> ep_binary_bounds(double p_i, double p_j) {
  if (!(p_i > 0 && p_i < 1) || !(p_j > 0 && p_j < 1))
    throw std::invalid_argument("ep_binary_bounds: probabilities must be inside (0,1)");
  const double q_i = 1 - p_i, q_j = 1 - p_j;
  const double lower = std::max(-std::sqrt(p_i * p_j / (q_i * q_j)),
                                -std::sqrt(q_i * q_j / (p_i * p_j)));
  const double upper = std::min(std::sqrt(p_i * q_j / (q_i * p_j)),
                                std::sqrt(q_i * p_j / (p_i * q_j)));
  return {lower, upper};
}

bool BoundsReport::all_feasible() const {
  for (const auto& p : pairs)
    if (p.verdict == Verdict::Infeasible) return false;
  return true;
}

std::vector<std::string> BoundsReport::infeasible_labels() const {
  std::vector<std::string> out;
  for (const auto& p : pairs) {
    if (p.verdict == Verdict::Infeasible) {
      std::ostringstream os;
      os << "rho_" << (p.i + 1) << (p.j + 1);
      out.push_back(os.str());
    }
  }
  return out;
}

BoundsReport check_target_matrix(const std::vector<TruncatedPmf>& pmfs,
                                 const std::vector<CollapsedMargin>& collapsed,
                                 const CorrelationMatrix& sigma,
                                 const BoundsCheckOptions& opts) {
  const int j_dim = sigma.dim();
  if (static_cast<int>(pmfs.size()) != j_dim || static_cast<int>(collapsed.size()) != j_dim)
    throw std::invalid_argument("check_target_matrix: dimension mismatch");

  BoundsReport report;
  for (int i = 0; i < j_dim; ++i) {
    for (int j = i + 1; j < j_dim; ++j) {
      PairBound pb;
      pb.i = i;
      pb.j = j;
      pb.target = sigma.m(i, j);

      RngStream stream = RngStream::derive(opts.seed, Phase::GscBounds,
                                           static_cast<std::uint64_t>(i) * j_dim + j);
      auto [gl, gu] = gsc_bounds(pmfs[i], pmfs[j], opts.gsc_n, stream);
      pb.gsc_lower = gl;
      pb.gsc_upper = gu;
      auto [el, eu] = ep_binary_bounds(collapsed[i].p_b, collapsed[j].p_b);
      pb.ep_lower = el;
      pb.ep_upper = eu;

      // the binary correlation dominates the discrete one in magnitude, so
      // both bound sets constrain the target
      pb.lower = std::max(gl, el);
      pb.upper = std::min(gu, eu);
      pb.source = (pb.upper == eu || pb.lower == el) ? "EP" : "GSC";
      if (pb.target < pb.lower || pb.target > pb.upper) {
        pb.verdict = Verdict::Infeasible;
        pb.source = (pb.target > pb.upper) ? (pb.upper == eu ? "EP" : "GSC")
                                           : (pb.lower == el ? "EP" : "GSC");
      } else if (pb.target > pb.upper - opts.marginal_band ||
                 pb.target < pb.lower + opts.marginal_band) {
        pb.verdict = Verdict::Marginal;
      }
      report.pairs.push_back(pb);
    }
  }
  return report;
}

}  // namespace discorr
