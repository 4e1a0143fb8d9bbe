#include "discorr/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace discorr {

std::string family_name(Family f) {
  switch (f) {
    case Family::GeneralizedPoisson: return "generalized-poisson";
    case Family::NegativeBinomial: return "negative-binomial";
    case Family::Binomial: return "binomial";
  }
  return "?";
}

MarginalSpec MarginalSpec::gp(double theta, double lambda) {
  MarginalSpec s;
  s.family = Family::GeneralizedPoisson;
  s.gp_theta = theta;
  s.gp_lambda = lambda;
  return s;
}

MarginalSpec MarginalSpec::nb(int r, double p) {
  MarginalSpec s;
  s.family = Family::NegativeBinomial;
  s.nb_r = r;
  s.nb_p = p;
  return s;
}

MarginalSpec MarginalSpec::binomial(int n, double p) {
  MarginalSpec s;
  s.family = Family::Binomial;
  s.b_n = n;
  s.b_p = p;
  return s;
}

std::string MarginalSpec::describe() const {
  std::ostringstream os;
  switch (family) {
    case Family::GeneralizedPoisson:
      os << "GP(theta=" << gp_theta << ", lambda=" << gp_lambda << ")";
      break;
    case Family::NegativeBinomial:
      os << "NB(r=" << nb_r << ", p=" << nb_p << ")";
      break;
    case Family::Binomial:
      os << "Binomial(n=" << b_n << ", p=" << b_p << ")";
      break;
  }
  return os.str();
}

int gp_support_limit(double theta, double lambda) {
  if (lambda >= 0) throw std::invalid_argument("gp_support_limit: lambda must be negative");
  // largest m with theta + m*lambda > 0
  double m = std::floor(theta / -lambda);
  if (theta + m * lambda <= 0) m -= 1;
  return static_cast<int>(m);
}

ValidationReport validate_spec(const MarginalSpec& spec) {
  ValidationReport report;
  auto bad = [&](const std::string& field, const std::string& constraint) {
    report.violations.push_back({field, constraint});
  };
  switch (spec.family) {
    case Family::GeneralizedPoisson: {
      if (!(spec.gp_theta > 0) || !std::isfinite(spec.gp_theta)) bad("theta", "theta > 0");
      if (!(spec.gp_lambda < 1) || !std::isfinite(spec.gp_lambda)) bad("lambda", "lambda < 1");
      if (std::isfinite(spec.gp_lambda) && spec.gp_lambda < 0 && spec.gp_theta > 0) {
        int m = gp_support_limit(spec.gp_theta, spec.gp_lambda);
        double floor_lambda = std::max(-1.0, -spec.gp_theta / std::max(m, 1));
        if (spec.gp_lambda < floor_lambda)
          bad("lambda", "lambda >= max(-1, -theta/m)");
        if (m < 4) bad("lambda", "m >= 4 (largest m with theta + m*lambda > 0)");
      }
      break;
    }
    case Family::NegativeBinomial: {
      if (spec.nb_r < 1) bad("r", "r >= 1 integer");
      if (!(spec.nb_p > 0 && spec.nb_p < 1)) bad("p", "0 < p < 1");
      break;
    }
    case Family::Binomial: {
      if (spec.b_n < 1) bad("n", "n >= 1 integer");
      if (!(spec.b_p > 0 && spec.b_p < 1)) bad("p", "0 < p < 1");
      break;
    }
  }
  return report;
}

namespace {

void require_valid(const MarginalSpec& spec) {
  ValidationReport r = validate_spec(spec);
  if (!r.ok()) {
    std::ostringstream os;
    os << "invalid marginal spec " << spec.describe() << ":";
    for (const auto& v : r.violations) os << " [" << v.field << ": " << v.constraint << "]";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

double log_pmf(const MarginalSpec& spec, long k) {
  if (k < 0) return -std::numeric_limits<double>::infinity();
  switch (spec.family) {
    case Family::GeneralizedPoisson: {
      const double th = spec.gp_theta, la = spec.gp_lambda;
      if (la < 0 && k > gp_support_limit(th, la))
        return -std::numeric_limits<double>::infinity();
      const double shift = th + la * static_cast<double>(k);
      if (shift <= 0) return -std::numeric_limits<double>::infinity();
      return std::log(th) + (k - 1) * std::log(shift) - th - la * k -
             std::lgamma(static_cast<double>(k) + 1.0);
    }
    case Family::NegativeBinomial: {
      const double r = spec.nb_r, p = spec.nb_p;
      return std::lgamma(r + k) - std::lgamma(static_cast<double>(k) + 1.0) -
             std::lgamma(r) + r * std::log(p) + k * std::log1p(-p);
    }
    case Family::Binomial: {
      const double n = spec.b_n, p = spec.b_p;
      if (k > spec.b_n) return -std::numeric_limits<double>::infinity();
      return std::lgamma(n + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
             std::lgamma(n - k + 1.0) + k * std::log(p) + (n - k) * std::log1p(-p);
    }
  }
  return -std::numeric_limits<double>::infinity();
}

double pmf(const MarginalSpec& spec, long k) {
  require_valid(spec);
  return std::exp(log_pmf(spec, k));
}

std::pair<double, double> moments(const MarginalSpec& spec) {
  require_valid(spec);
  switch (spec.family) {
    case Family::GeneralizedPoisson: {
      const double th = spec.gp_theta, la = spec.gp_lambda;
      const double one_m = 1.0 - la;
      return {th / one_m, th / (one_m * one_m * one_m)};
    }
    case Family::NegativeBinomial: {
      const double r = spec.nb_r, p = spec.nb_p;
      return {r * (1 - p) / p, r * (1 - p) / (p * p)};
    }
    case Family::Binomial: {
      const double n = spec.b_n, p = spec.b_p;
      return {n * p, n * p * (1 - p)};
    }
  }
  return {0, 0};
}

double TruncatedPmf::total_mass() const {
  double s = 0;
  for (double p : probs) s += p;
  return s;
}

int TruncatedPmf::quantile(double u) const {
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u outside [0, 1)");
  // cdf is short (hundreds of entries); binary search
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) return support_max;
  return static_cast<int>(it - cdf.begin());
}

TruncatedPmf truncate_support(const MarginalSpec& spec) {
  require_valid(spec);

  long limit = kSupportHardCap;
  bool finite_support = false;
  if (spec.family == Family::Binomial) {
    limit = spec.b_n;
    finite_support = true;
  } else if (spec.family == Family::GeneralizedPoisson && spec.gp_lambda < 0) {
    limit = gp_support_limit(spec.gp_theta, spec.gp_lambda);
    finite_support = true;
  }

  auto [mu, var] = moments(spec);

  std::vector<double> probs;
  long k = 0;
  double prev = -1.0;
  for (;; ++k) {
    if (k > limit) {
      if (finite_support) break;
      throw std::runtime_error("truncate_support: no truncation point below hard cap for " +
                               spec.describe());
    }
    double p = std::exp(log_pmf(spec, k));
    if (!finite_support && p <= kTailCutoff && p < prev && k > static_cast<long>(mu)) {
      // past the mode and decaying; every later value is smaller still
      break;
    }
    probs.push_back(p);
    prev = p;
  }
  // K = last support point with pmf above the cutoff (or the full finite support)
  if (!finite_support) {
    while (probs.size() > 1 && probs.back() <= kTailCutoff) probs.pop_back();
  }

  TruncatedPmf out;
  out.support_max = static_cast<int>(probs.size()) - 1;
  out.probs = std::move(probs);
  double total = 0;
  for (double p : out.probs) total += p;
  out.mean = mu;
  out.variance = var;

  bool renormalize = false;
  if (spec.family == Family::GeneralizedPoisson && spec.gp_lambda < 0) {
    // under-dispersed GP carries a known normalization deficit on 0..m
    out.mass_deficit = 1.0 - total;
    renormalize = out.mass_deficit > 1e-12;
  }
  out.cdf.resize(out.probs.size());
  double c = 0;
  for (size_t i = 0; i < out.probs.size(); ++i) {
    c += out.probs[i];
    out.cdf[i] = renormalize ? c / total : c;
  }
  return out;
}

double sample_mean(const std::vector<int>& sample) {
  if (sample.empty()) throw std::invalid_argument("sample_mean: empty sample");
  double s = 0;
  for (int v : sample) s += v;
  return s / static_cast<double>(sample.size());
}

double sample_variance(const std::vector<int>& sample) {
  if (sample.size() < 2) throw std::invalid_argument("sample_variance: need >= 2 points");
  double m = sample_mean(sample);
  double s = 0;
  for (int v : sample) s += (v - m) * (v - m);
  return s / static_cast<double>(sample.size() - 1);
}

std::pair<double, double> ParamEstimate::params() const {
  switch (family) {
    case Family::GeneralizedPoisson: return {gp_theta, gp_lambda};
    case Family::NegativeBinomial: return {nb_r, nb_p};
    case Family::Binomial: return {b_n, b_p};
  }
  return {0, 0};
}

ParamEstimate mom_from_moments(double mean, double variance, Family family) {
  ParamEstimate est;
  est.family = family;
  est.sample_mean = mean;
  est.sample_variance = variance;
  if (!(variance > 0) || !(mean > 0)) {
    est.failure = "nonpositive sample moments";
    return est;
  }
  switch (family) {
    case Family::GeneralizedPoisson: {
      double one_m = std::sqrt(mean / variance);  // 1 - lambda
      est.gp_lambda = 1.0 - one_m;
      est.gp_theta = mean * one_m;
      if (est.gp_lambda < -1.0) {
        est.failure = "dispersion estimate below -1";
        return est;
      }
      est.ok = true;
      return est;
    }
    case Family::NegativeBinomial: {
      if (!(variance > mean)) {
        est.failure = "variance <= mean (no over-dispersion)";
        return est;
      }
      est.nb_p = mean / variance;
      est.nb_r = mean * mean / (variance - mean);
      est.ok = true;
      return est;
    }
    case Family::Binomial: {
      if (!(variance < mean)) {
        est.failure = "variance >= mean (no under-dispersion)";
        return est;
      }
      est.b_p = 1.0 - variance / mean;
      est.b_n = mean / est.b_p;
      est.ok = true;
      return est;
    }
  }
  est.failure = "unknown family";
  return est;
}

ParamEstimate mom_estimate(const std::vector<int>& sample, Family family) {
  if (sample.size() < 2) throw std::invalid_argument("mom_estimate: need >= 2 points");
  return mom_from_moments(sample_mean(sample), sample_variance(sample), family);
}

}  // namespace discorr
