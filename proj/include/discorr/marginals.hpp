#ifndef DISCORR_MARGINALS_HPP
#define DISCORR_MARGINALS_HPP

#include <string>
#include <utility>
#include <vector>

namespace discorr {

enum class Family { GeneralizedPoisson, NegativeBinomial, Binomial };

std::string family_name(Family f);

// One marginal distribution. Only the fields of the active family are
// meaningful.
struct MarginalSpec {
  Family family = Family::GeneralizedPoisson;
  double gp_theta = 0.0;   // rate, > 0
  double gp_lambda = 0.0;  // dispersion, < 1 (may be negative)
  int nb_r = 0;            // successes, >= 1
  double nb_p = 0.0;       // success probability
  int b_n = 0;             // trials, >= 1
  double b_p = 0.0;        // success probability

  static MarginalSpec gp(double theta, double lambda);
  static MarginalSpec nb(int r, double p);
  static MarginalSpec binomial(int n, double p);

  std::string describe() const;
};

struct Violation {
  std::string field;
  std::string constraint;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_spec(const MarginalSpec& spec);

// Largest integer m with theta + m*lambda > 0, used as the finite support
// limit of the under-dispersed generalized Poisson.
int gp_support_limit(double theta, double lambda);

double log_pmf(const MarginalSpec& spec, long k);
double pmf(const MarginalSpec& spec, long k);

// closed-form (mean, variance)
std::pair<double, double> moments(const MarginalSpec& spec);

// Finite support 0..K after tail truncation at point probability 1e-10.
struct TruncatedPmf {
  int support_max = 0;            // K
  std::vector<double> probs;      // raw point probabilities, 0..K
  std::vector<double> cdf;        // cumulative; renormalized when mass_deficit > 0
  double mean = 0.0;
  double variance = 0.0;
  double mass_deficit = 0.0;      // raw 1 - sum(probs) for under-dispersed GP

  double total_mass() const;
  // smallest k with cdf[k] > u; u >= cdf[K] maps to K
  int quantile(double u) const;
};

inline constexpr double kTailCutoff = 1e-10;
inline constexpr long kSupportHardCap = 1000000;

TruncatedPmf truncate_support(const MarginalSpec& spec);

// Method-of-moments estimate. Raw (unrounded) r / n are reported; the
// round-up convention used for count parameters in data applications is a
// presentation choice left to callers.
struct ParamEstimate {
  Family family = Family::GeneralizedPoisson;
  double sample_mean = 0.0;
  double sample_variance = 0.0;
  bool ok = false;
  std::string failure;
  // same layout as MarginalSpec, raw estimates
  double gp_theta = 0.0, gp_lambda = 0.0;
  double nb_r = 0.0, nb_p = 0.0;
  double b_n = 0.0, b_p = 0.0;

  // the two estimated parameters in spec order, e.g. (theta, lambda)
  std::pair<double, double> params() const;
};

ParamEstimate mom_from_moments(double mean, double variance, Family family);
ParamEstimate mom_estimate(const std::vector<int>& sample, Family family);

double sample_mean(const std::vector<int>& sample);
double sample_variance(const std::vector<int>& sample);  // n-1 denominator

}  // namespace discorr

#endif
