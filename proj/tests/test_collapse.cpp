#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "discorr/collapse.hpp"
#include "discorr/marginals.hpp"
#include "discorr/rng.hpp"

using namespace discorr;

namespace {

// Approximate upper chi-square critical value (Wilson-Hilferty).
double chi2_crit(int df, double z) {
  const double a = 2.0 / (9.0 * df);
  const double c = 1.0 - a + z * std::sqrt(a);
  return df * c * c * c;
}

}  // namespace

TEST_CASE("collapse of Binomial(5, 0.68): median and side") {
  // exact binomial arithmetic oracle: cdf(2) = 0.1905262592, cdf(3) = 0.5125046272
  TruncatedPmf t = truncate_support(MarginalSpec::binomial(5, 0.68));
  CollapsedMargin c = collapse_margin(t);
  CHECK(c.median_m == 3);
  // p with M on the One side is 1 - cdf(2) = 0.8094737408; distance from 0.5
  // is 0.309, versus 0.0125 when M joins the Zero side, so M goes to Zero and
  // p_b = 1 - cdf(3) = 0.4874953728.
  CHECK(c.median_side == MedianSide::Zero);
  CHECK(c.p_b == doctest::Approx(0.4874953728).epsilon(1e-9));
}

TEST_CASE("exact tie sends the median mass to the One side") {
  // hand-built margin: pmf = (0.25, 0.5, 0.25); M = 1;
  // p_if_one = 0.75, p_if_zero = 0.25, equidistant from 0.5
  TruncatedPmf t;
  t.support_max = 2;
  t.probs = {0.25, 0.5, 0.25};
  t.cdf = {0.25, 0.75, 1.0};
  t.mean = 1.0;
  t.variance = 0.5;
  CollapsedMargin c = collapse_margin(t);
  CHECK(c.median_m == 1);
  CHECK(c.median_side == MedianSide::One);
  CHECK(c.p_b == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("binary success rates for heavy-tailed margins stay near one half") {
  // frozen from an independent longhand CDF evaluation of each margin: the
  // median point mass joins the Zero side in all three cases
  struct Row {
    MarginalSpec spec;
    int median;
    double expect;
  };
  const std::vector<Row> rows = {{MarginalSpec::gp(23.0, 0.72), 77, 0.4965406106},
                                 {MarginalSpec::gp(40.0, 0.58), 93, 0.4952781898},
                                 {MarginalSpec::gp(4.6, 0.14), 5, 0.4347055026}};
  for (const auto& row : rows) {
    CAPTURE(row.spec.describe());
    CollapsedMargin c = collapse_margin(truncate_support(row.spec));
    CHECK(c.median_m == row.median);
    CHECK(c.median_side == MedianSide::Zero);
    CHECK(c.p_b == doctest::Approx(row.expect).epsilon(1e-6));
  }
}

TEST_CASE("mixing the conditional PMFs reconstructs the source") {
  for (const auto& spec : {MarginalSpec::gp(5.14, 0.6445), MarginalSpec::nb(3, 0.33),
                           MarginalSpec::binomial(12, 0.36), MarginalSpec::gp(30.38, -0.1378)}) {
    CAPTURE(spec.describe());
    TruncatedPmf t = truncate_support(spec);
    CollapsedMargin c = collapse_margin(t);
    const double total = t.total_mass();
    for (int k = 0; k <= t.support_max; ++k) {
      const double mix =
          c.p_b * c.cond_one.probs[k] + (1.0 - c.p_b) * c.cond_zero.probs[k];
      CHECK(std::fabs(mix - t.probs[k] / total) <= 1e-12);
    }
    // each conditional is itself a distribution
    double s0 = 0, s1 = 0;
    for (int k = 0; k <= t.support_max; ++k) {
      s0 += c.cond_zero.probs[k];
      s1 += c.cond_one.probs[k];
    }
    CHECK(s0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s1 == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("expand respects the category supports") {
  TruncatedPmf t = truncate_support(MarginalSpec::binomial(5, 0.68));
  CollapsedMargin c = collapse_margin(t);
  std::vector<int> binary(5000);
  RngStream flip = RngStream::derive(3, Phase::GenerationLatent, 0);
  for (auto& b : binary) b = flip.uniform() < c.p_b ? 1 : 0;
  RngStream stream = RngStream::derive(3, Phase::GenerationExpand, 0);
  std::vector<int> out = expand(c, binary, stream);
  REQUIRE(out.size() == binary.size());
  for (size_t i = 0; i < out.size(); ++i) {
    if (binary[i] == 1)
      CHECK(c.cond_one.probs[out[i]] > 0.0);
    else
      CHECK(c.cond_zero.probs[out[i]] > 0.0);
  }
}

TEST_CASE("expand is deterministic for a fixed stream") {
  TruncatedPmf t = truncate_support(MarginalSpec::nb(8, 0.45));
  CollapsedMargin c = collapse_margin(t);
  std::vector<int> binary(1000);
  RngStream flip = RngStream::derive(11, Phase::GenerationLatent, 0);
  for (auto& b : binary) b = flip.uniform() < c.p_b ? 1 : 0;
  RngStream s1 = RngStream::derive(11, Phase::GenerationExpand, 0);
  RngStream s2 = RngStream::derive(11, Phase::GenerationExpand, 0);
  CHECK(expand(c, binary, s1) == expand(c, binary, s2));
}

TEST_CASE("expanded draws recover the source distribution (chi-square)") {
  // 100 independent trials at n = 20000, alpha = 0.01; require >= 98 passes
  TruncatedPmf t = truncate_support(MarginalSpec::binomial(12, 0.36));
  CollapsedMargin c = collapse_margin(t);
  const int n = 20000;
  int passes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    RngStream flip = RngStream::derive(500 + trial, Phase::GenerationLatent, 0);
    RngStream stream = RngStream::derive(500 + trial, Phase::GenerationExpand, 0);
    std::vector<int> binary(n);
    for (auto& b : binary) b = flip.uniform() < c.p_b ? 1 : 0;
    std::vector<int> out = expand(c, binary, stream);
    std::vector<int> count(t.support_max + 1, 0);
    for (int v : out) count[v] += 1;
    // pool cells until the expected count reaches 5
    double stat = 0;
    int cells = 0;
    double pool_obs = 0, pool_exp = 0;
    for (int k = 0; k <= t.support_max; ++k) {
      pool_obs += count[k];
      pool_exp += n * t.probs[k] / t.total_mass();
      if (pool_exp >= 5.0 || k == t.support_max) {
        stat += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
        cells += 1;
        pool_obs = pool_exp = 0;
      }
    }
    if (stat <= chi2_crit(cells - 1, 2.326347874)) passes += 1;
  }
  CHECK(passes >= 98);
}

TEST_CASE("expanded mean and variance track the source moments") {
  TruncatedPmf t = truncate_support(MarginalSpec::gp(10.67, 0.1420));
  CollapsedMargin c = collapse_margin(t);
  const int n = 200000;
  RngStream flip = RngStream::derive(77, Phase::GenerationLatent, 0);
  RngStream stream = RngStream::derive(77, Phase::GenerationExpand, 0);
  std::vector<int> binary(n);
  for (auto& b : binary) b = flip.uniform() < c.p_b ? 1 : 0;
  std::vector<int> out = expand(c, binary, stream);
  CHECK(sample_mean(out) == doctest::Approx(t.mean).epsilon(0.01));
  CHECK(sample_variance(out) == doctest::Approx(t.variance).epsilon(0.03));
}
