#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "discorr/calibration.hpp"
#include "discorr/corr_bounds.hpp"

using namespace discorr;

namespace {

CollapsedMargin collapsed_gp(double theta, double lambda) {
  return collapse_margin(truncate_support(MarginalSpec::gp(theta, lambda)));
}

CalibrationOptions fast_opts(std::uint64_t seed) {
  CalibrationOptions o;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("zero target is a fixed point up to Monte Carlo noise") {
  // the evaluation noise sd at n = 10^5 is about 0.003, so iteration-one
  // convergence is not guaranteed; the iterate must stay near zero and the
  // final achieved value must sit inside the tolerance
  CollapsedMargin a = collapsed_gp(5.14, 0.6445);
  CollapsedMargin b = collapsed_gp(2.0, 0.365);
  RngStream stream = RngStream::derive(17, Phase::Calibration, 0);
  PairCalibration cal = calibrate_pair(a, b, 0.0, fast_opts(17), stream);
  CHECK(cal.converged);
  CHECK(std::fabs(cal.delta_b) <= 0.02);
  CHECK(std::fabs(cal.achieved) <= 0.001);
  CHECK(cal.trajectory.front().delta_b == 0.0);  // starting value is the target
}

TEST_CASE("calibration hits a positive target within tolerance") {
  CollapsedMargin a = collapsed_gp(5.14, 0.6445);
  CollapsedMargin b = collapsed_gp(2.0, 0.365);
  RngStream stream = RngStream::derive(23, Phase::Calibration, 0);
  PairCalibration cal = calibrate_pair(a, b, 0.2619, fast_opts(23), stream);
  CHECK(cal.converged);
  CHECK(std::fabs(cal.achieved - 0.2619) <= 0.001);
  CHECK(cal.iterations <= 50);
  // attenuation: the binary correlation must be at least as strong
  CHECK(std::fabs(cal.delta_b) >= std::fabs(0.2619) - 0.002);
}

TEST_CASE("calibration preserves the target sign") {
  CollapsedMargin a = collapsed_gp(10.67, 0.1420);
  CollapsedMargin b = collapsed_gp(50.02, -0.0499);
  RngStream stream = RngStream::derive(31, Phase::Calibration, 0);
  PairCalibration cal = calibrate_pair(a, b, -0.3, fast_opts(31), stream);
  CHECK(cal.converged);
  CHECK(cal.delta_b < 0.0);
  CHECK(std::fabs(cal.achieved - (-0.3)) <= 0.001);
}

TEST_CASE("stronger targets need stronger binary correlations") {
  CollapsedMargin a = collapsed_gp(5.14, 0.6445);
  CollapsedMargin b = collapsed_gp(10.67, 0.1420);
  double prev = -1.0;
  for (double target : {0.1, 0.25, 0.4}) {
    RngStream stream = RngStream::derive(37, Phase::Calibration, 0);
    PairCalibration cal = calibrate_pair(a, b, target, fast_opts(37), stream);
    REQUIRE(cal.converged);
    CHECK(cal.delta_b > prev);
    prev = cal.delta_b;
  }
}

TEST_CASE("trajectory moves toward the target and stays inside EP bounds") {
  CollapsedMargin a = collapsed_gp(5.14, 0.6445);
  CollapsedMargin b = collapsed_gp(2.0, 0.365);
  RngStream stream = RngStream::derive(41, Phase::Calibration, 0);
  PairCalibration cal = calibrate_pair(a, b, 0.35, fast_opts(41), stream);
  REQUIRE(cal.converged);
  REQUIRE(cal.trajectory.size() == static_cast<size_t>(cal.iterations));
  auto [lo, hi] = ep_binary_bounds(a.p_b, b.p_b);
  for (size_t t = 0; t < cal.trajectory.size(); ++t) {
    CHECK(cal.trajectory[t].delta_b > lo);
    CHECK(cal.trajectory[t].delta_b < hi);
    if (t > 0) {
      const double miss = 0.35 - cal.trajectory[t - 1].delta_star_c;
      const double step = cal.trajectory[t].delta_b - cal.trajectory[t - 1].delta_b;
      // update rule: half the miss, possibly clipped at the bounds
      CHECK(step == doctest::Approx(0.5 * miss).epsilon(1e-9));
    }
  }
}

TEST_CASE("calibration is bit-for-bit deterministic") {
  CollapsedMargin a = collapsed_gp(23.0, 0.72);
  CollapsedMargin b = collapsed_gp(4.6, 0.14);
  RngStream s1 = RngStream::derive(47, Phase::Calibration, 0);
  RngStream s2 = RngStream::derive(47, Phase::Calibration, 0);
  PairCalibration c1 = calibrate_pair(a, b, 0.24, fast_opts(47), s1);
  PairCalibration c2 = calibrate_pair(a, b, 0.24, fast_opts(47), s2);
  REQUIRE(c1.iterations == c2.iterations);
  CHECK(c1.delta_b == c2.delta_b);
  CHECK(c1.achieved == c2.achieved);
  for (size_t t = 0; t < c1.trajectory.size(); ++t) {
    CHECK(c1.trajectory[t].delta_b == c2.trajectory[t].delta_b);
    CHECK(c1.trajectory[t].delta_star_c == c2.trajectory[t].delta_star_c);
  }
}

TEST_CASE("EP-infeasible target is rejected before iterating") {
  // Bernoulli(0.9) collapses to rate 0.9 and Bernoulli(0.1) to rate 0.1,
  // so the binary upper bound is sqrt(0.1*0.1/(0.9*0.9)) = 1/9
  CollapsedMargin a = collapse_margin(truncate_support(MarginalSpec::binomial(1, 0.9)));
  CollapsedMargin b = collapse_margin(truncate_support(MarginalSpec::binomial(1, 0.1)));
  REQUIRE(a.p_b == doctest::Approx(0.9).epsilon(1e-12));
  REQUIRE(b.p_b == doctest::Approx(0.1).epsilon(1e-12));
  RngStream stream = RngStream::derive(53, Phase::Calibration, 0);
  CHECK_THROWS_AS((void)calibrate_pair(a, b, 0.6, fast_opts(53), stream),
                  std::invalid_argument);
}

TEST_CASE("calibrate_matrix on an identity target returns the identity") {
  std::vector<CollapsedMargin> margins = {collapsed_gp(5.14, 0.6445),
                                          collapsed_gp(10.67, 0.1420),
                                          collapsed_gp(2.0, 0.365)};
  auto [sigma_b, repair, cals] =
      calibrate_matrix(margins, CorrelationMatrix::identity(3), fast_opts(59));
  REQUIRE(cals.size() == 3);
  for (const auto& c : cals) {
    CHECK(c.converged);
    CHECK(std::fabs(c.delta_b) <= 0.02);
    CHECK(std::fabs(c.achieved) <= 0.001);
  }
  CHECK((sigma_b.m - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 0.02);
  CHECK_FALSE(repair.was_repaired);
}

TEST_CASE("calibrate_matrix fills both triangles symmetrically") {
  std::vector<CollapsedMargin> margins = {collapsed_gp(5.14, 0.6445),
                                          collapsed_gp(10.67, 0.1420),
                                          collapsed_gp(2.0, 0.365)};
  Eigen::MatrixXd sig(3, 3);
  sig << 1.0, 0.25, 0.15, 0.25, 1.0, 0.3, 0.15, 0.3, 1.0;
  auto [sigma_b, repair, cals] =
      calibrate_matrix(margins, CorrelationMatrix::from(sig), fast_opts(61));
  REQUIRE(cals.size() == 3);
  for (const auto& c : cals) {
    CAPTURE(c.i);
    CAPTURE(c.j);
    CHECK(c.converged);
    CHECK(std::fabs(c.achieved - c.target) <= 0.001);
    CHECK(sigma_b.m(c.i, c.j) == sigma_b.m(c.j, c.i));
  }
  CHECK(sigma_b.m.diagonal() == Eigen::VectorXd::Ones(3));
}
