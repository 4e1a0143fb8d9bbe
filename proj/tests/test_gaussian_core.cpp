#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "discorr/gaussian_core.hpp"
#include "discorr/rng.hpp"

using namespace discorr;

namespace {

// Independent BVN oracle via Plackett's identity:
//   Phi2(x1, x2; rho) = Phi(x1) Phi(x2) + integral_0^rho phi2(x1, x2; r) dr
// integrated with composite Simpson on a fine grid. Shares no code with the
// production quadrature.
double bvn_oracle(double x1, double x2, double rho) {
  auto dens = [&](double r) {
    const double om = 1.0 - r * r;
    const double q = (x1 * x1 - 2.0 * r * x1 * x2 + x2 * x2) / om;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(om));
  };
  const int n = 2000;  // Simpson panels
  const double h = rho / n;
  double acc = dens(0.0) + dens(rho);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * dens(i * h);
  return std_normal_cdf(x1) * std_normal_cdf(x2) + acc * h / 3.0;
}

}  // namespace

TEST_CASE("normal quantile spot values") {
  CHECK(std_normal_quantile(0.5) == 0.0);
  CHECK(std_normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-6));
  CHECK(std_normal_quantile(0.0013499) == doctest::Approx(-3.0).epsilon(1e-4));
  CHECK_THROWS_AS((void)std_normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)std_normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("quantile/cdf round trip to 1e-12") {
  std::vector<double> ps = {1e-10, 1e-6, 0.0013499, 0.01, 0.1, 0.25, 0.5,
                            0.75,  0.9,  0.99,      0.999999, 1.0 - 1e-10};
  for (double p : ps) {
    CAPTURE(p);
    CHECK(std::fabs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-12);
  }
  // antisymmetry
  for (double p : {0.01, 0.2, 0.37}) {
    CHECK(std_normal_quantile(p) == doctest::Approx(-std_normal_quantile(1 - p)).epsilon(1e-14));
  }
}

TEST_CASE("bvn_cdf closed-form anchors") {
  CHECK(bvn_cdf(0.0, 0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
  // Sheppard: Phi2(0,0;rho) = 1/4 + asin(rho)/(2 pi)
  CHECK(bvn_cdf(0.0, 0.0, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
  CHECK(bvn_cdf(0.0, 0.0, -0.5) == doctest::Approx(1.0 / 6.0).epsilon(1e-7));
  // perfect dependence degenerates to min / max-overlap
  CHECK(bvn_cdf(0.3, 1.1, 1.0) == doctest::Approx(std_normal_cdf(0.3)).epsilon(1e-12));
  CHECK(bvn_cdf(0.3, 1.1, -1.0) ==
        doctest::Approx(std_normal_cdf(0.3) + std_normal_cdf(1.1) - 1.0).epsilon(1e-12));
  // marginalization
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(bvn_cdf(inf, 0.7, 0.4) == doctest::Approx(std_normal_cdf(0.7)).epsilon(1e-12));
  CHECK(bvn_cdf(-inf, 0.7, 0.4) == 0.0);
}

TEST_CASE("bvn_cdf matches an independent quadrature oracle") {
  for (double rho : {-0.95, -0.6, -0.2, 0.1, 0.35, 0.7, 0.93}) {
    for (double x1 : {-2.1, -0.4, 0.0, 0.8, 1.9}) {
      for (double x2 : {-1.5, 0.2, 1.2}) {
        CAPTURE(rho);
        CAPTURE(x1);
        CAPTURE(x2);
        CHECK(std::fabs(bvn_cdf(x1, x2, rho) - bvn_oracle(x1, x2, rho)) <= 1e-7);
      }
    }
  }
}

TEST_CASE("bvn_cdf symmetry in arguments") {
  for (double rho : {-0.8, 0.0, 0.55}) {
    CHECK(bvn_cdf(0.4, -1.2, rho) == doctest::Approx(bvn_cdf(-1.2, 0.4, rho)).epsilon(1e-14));
  }
}

TEST_CASE("tetrachoric solve: independence and the balanced identity") {
  CHECK(solve_tetrachoric(0.3, 0.8, 0.0) == doctest::Approx(0.0).epsilon(1e-8));
  // p = q = 0.5: latent rho = sin(pi * delta / 2)
  for (double delta : {0.2, 0.5, -0.7}) {
    CAPTURE(delta);
    CHECK(solve_tetrachoric(0.5, 0.5, delta) ==
          doctest::Approx(std::sin(std::numbers::pi * delta / 2.0)).epsilon(1e-7));
  }
}

TEST_CASE("tetrachoric round trip across a grid") {
  for (double pj : {0.2, 0.4545, 0.5, 0.7168}) {
    for (double pk : {0.3, 0.5017, 0.65}) {
      for (double rho : {-0.9, -0.4, 0.0, 0.3, 0.8}) {
        CAPTURE(pj);
        CAPTURE(pk);
        CAPTURE(rho);
        const double zj = std_normal_quantile(pj), zk = std_normal_quantile(pk);
        const double delta =
            (bvn_cdf(zj, zk, rho) - pj * pk) /
            std::sqrt(pj * (1 - pj) * pk * (1 - pk));
        CHECK(solve_tetrachoric(pj, pk, delta) == doctest::Approx(rho).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("tetrachoric solve is monotone in delta") {
  double prev = -2;
  for (double delta : {-0.4, -0.1, 0.0, 0.2, 0.45}) {
    const double rho = solve_tetrachoric(0.4545, 0.7168, delta);
    CHECK(rho > prev);
    prev = rho;
  }
}

TEST_CASE("tetrachoric solve rejects unattainable delta") {
  // Frechet upper bound for (0.4545, 0.7168) is well below 0.95
  CHECK_THROWS_AS((void)solve_tetrachoric(0.4545, 0.7168, 0.95), std::invalid_argument);
}

TEST_CASE("nearest_pd leaves PD input untouched") {
  PdRepairReport rep = nearest_pd(CorrelationMatrix::identity(4));
  CHECK_FALSE(rep.was_repaired);
  CHECK(rep.repaired == rep.input);

  Eigen::MatrixXd ex = Eigen::MatrixXd::Constant(5, 5, 0.5);
  ex.diagonal().setOnes();
  rep = nearest_pd(CorrelationMatrix::from(ex));
  CHECK_FALSE(rep.was_repaired);
  CHECK(rep.repaired == ex);
}

TEST_CASE("nearest_pd repairs an indefinite matrix") {
  Eigen::MatrixXd bad(3, 3);
  bad << 1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0;  // min eig < 0
  PdRepairReport rep = nearest_pd(CorrelationMatrix::from(bad));
  CHECK(rep.was_repaired);
  CHECK(rep.min_eig_before < 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rep.repaired);
  CHECK(es.eigenvalues().minCoeff() >= 0.0);
  for (int i = 0; i < 3; ++i) CHECK(rep.repaired(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((rep.repaired - rep.repaired.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // idempotence
  PdRepairReport rep2 = nearest_pd(CorrelationMatrix::from(rep.repaired));
  CHECK((rep2.repaired - rep.repaired).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("CorrelationMatrix::from validates") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.3, 0.31, 1.0;
  CHECK_THROWS_AS((void)CorrelationMatrix::from(m), std::invalid_argument);
  m << 1.0, 1.3, 1.3, 1.0;
  CHECK_THROWS_AS((void)CorrelationMatrix::from(m), std::invalid_argument);
  m << 0.9, 0.3, 0.3, 1.0;
  CHECK_THROWS_AS((void)CorrelationMatrix::from(m), std::invalid_argument);
}

TEST_CASE("mvn_sample reproduces the target correlation") {
  Eigen::MatrixXd ex = Eigen::MatrixXd::Constant(3, 3, 0.5);
  ex.diagonal().setOnes();
  RngStream stream = RngStream::derive(99, Phase::GenerationLatent, 0);
  const int n = 200000;
  Eigen::MatrixXd z = mvn_sample(CorrelationMatrix::from(ex), n, stream);
  REQUIRE(z.rows() == n);
  REQUIRE(z.cols() == 3);
  Eigen::MatrixXd centered = z.rowwise() - z.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(cov(i, i) == doctest::Approx(1.0).epsilon(0.02));
    for (int j = 0; j < i; ++j) {
      const double r = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
      CHECK(r == doctest::Approx(0.5).epsilon(0.02));
    }
  }
}

TEST_CASE("dichotomize uses the lower-tail rule") {
  Eigen::MatrixXd z(4, 1);
  z << -1.0, 0.0, 0.5, 2.0;
  std::vector<double> pb = {0.5};
  // threshold z(0.5) = 0 exactly; Y = 1 iff Z <= threshold, so 0 maps to 1
  Eigen::MatrixXi y = dichotomize(z, pb);
  CHECK(y(0, 0) == 1);
  CHECK(y(1, 0) == 1);
  CHECK(y(2, 0) == 0);
  CHECK(y(3, 0) == 0);
}

TEST_CASE("dichotomize hits the target rate") {
  std::vector<double> pb = {0.4545, 0.7168};
  RngStream stream = RngStream::derive(7, Phase::GenerationLatent, 1);
  const int n = 200000;
  Eigen::MatrixXd z(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) z(i, j) = stream.normal();
  Eigen::MatrixXi y = dichotomize(z, pb);
  for (int j = 0; j < 2; ++j) {
    const double rate = y.col(j).cast<double>().mean();
    CHECK(rate == doctest::Approx(pb[j]).epsilon(0.02));
  }
}
