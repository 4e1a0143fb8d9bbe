#include "discorr/gaussian_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace discorr {

double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Wichura (1988), algorithm AS 241, PPND16.
double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("std_normal_quantile: p outside (0,1)");
  const double q = p - 0.5;
  double r, val;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    val = q *
          (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
              1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
            1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
          (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
              5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
            4.2313330701600911252e1) * r + 1.0);
    return val;
  }
  r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

namespace {

// Gauss-Legendre abscissae/weights for the Drezner-Wesolowsky reduction
// (6-, 12- and 20-point rules, stored as symmetric halves).
const double kGlW1[3] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910};
const double kGlX1[3] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969};
const double kGlW2[6] = {0.04717533638651183, 0.1069393259953184, 0.1600783285433462,
                         0.2031674267230659, 0.2334925365383548, 0.2491470458134028};
const double kGlX2[6] = {-0.9815606342467192, -0.9041172563704749, -0.7699026741943047,
                         -0.5873179542866175, -0.3678314989981802, -0.1252334085114689};
const double kGlW3[10] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410907,
                          0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                          0.1316886384491766,  0.1420961093183820,  0.1491729864726037,
                          0.1527533871307258};
const double kGlX3[10] = {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
                          -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
                          -0.5108670019508271, -0.3737060887154195, -0.2277858511416451,
                          -0.1080549487073437};

// Upper-quadrant probability P(X > dh, Y > dk) for standard bivariate
// normals with correlation r (Genz's rendering of Drezner-Wesolowsky).
double bvn_upper(double dh, double dk, double r) {
  const double twopi = 2.0 * std::numbers::pi;
  const double* w;
  const double* x;
  int lg;
  if (std::fabs(r) < 0.3) {
    w = kGlW1; x = kGlX1; lg = 3;
  } else if (std::fabs(r) < 0.75) {
    w = kGlW2; x = kGlX2; lg = 6;
  } else {
    w = kGlW3; x = kGlX3; lg = 10;
  }
  double h = dh, k = dk;
  double hk = h * k;
  double bvn = 0.0;
  if (std::fabs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (int i = 0; i < lg; ++i) {
      for (int is = -1; is <= 1; is += 2) {
        const double sn = std::sin(asr * (is * x[i] + 1.0) / 2.0);
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / (2.0 * twopi) + std_normal_cdf(-h) * std_normal_cdf(-k);
  } else {
    if (r < 0) {
      k = -k;
      hk = -hk;
    }
    if (std::fabs(r) < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0)
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
      if (-hk < 100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * std::sqrt(twopi) * std_normal_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double xs = a * (is * x[i] + 1.0) * a * (is * x[i] + 1.0);
          const double rs = std::sqrt(1.0 - xs);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0)
            bvn += a * w[i] * std::exp(asr) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                    (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
      bvn = -bvn / twopi;
    }
    if (r > 0) {
      bvn += std_normal_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += std_normal_cdf(k) - std_normal_cdf(h);
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

}  // namespace

double bvn_cdf(double x1, double x2, double rho) {
  if (std::isnan(x1) || std::isnan(x2) || std::isnan(rho))
    throw std::invalid_argument("bvn_cdf: non-finite input");
  if (std::isinf(x1)) return x1 > 0 ? std_normal_cdf(x2) : 0.0;
  if (std::isinf(x2)) return x2 > 0 ? std_normal_cdf(x1) : 0.0;
  if (rho >= 1.0) return std_normal_cdf(std::min(x1, x2));
  if (rho <= -1.0) return std::max(0.0, std_normal_cdf(x1) + std_normal_cdf(x2) - 1.0);
  return bvn_upper(-x1, -x2, rho);
}

CorrelationMatrix CorrelationMatrix::identity(int j) {
  CorrelationMatrix c;
  c.m = Eigen::MatrixXd::Identity(j, j);
  return c;
}

CorrelationMatrix CorrelationMatrix::from(Eigen::MatrixXd mat) {
  if (mat.rows() != mat.cols()) throw std::invalid_argument("correlation matrix must be square");
  for (int i = 0; i < mat.rows(); ++i) {
    if (mat(i, i) != 1.0) throw std::invalid_argument("correlation matrix diagonal must be 1");
    for (int j = 0; j < i; ++j) {
      if (std::fabs(mat(i, j) - mat(j, i)) > 1e-12)
        throw std::invalid_argument("correlation matrix must be symmetric");
      if (std::fabs(mat(i, j)) > 1.0)
        throw std::invalid_argument("correlation entries must lie in [-1, 1]");
      // force exact symmetry
      mat(j, i) = mat(i, j);
    }
  }
  CorrelationMatrix c;
  c.m = std::move(mat);
  return c;
}

double solve_tetrachoric(double p_j, double p_k, double delta) {
  if (!(p_j > 0 && p_j < 1) || !(p_k > 0 && p_k < 1))
    throw std::invalid_argument("solve_tetrachoric: probabilities must be inside (0,1)");
  const double target = delta * std::sqrt(p_j * (1 - p_j) * p_k * (1 - p_k)) + p_j * p_k;
  const double frechet_lo = std::max(0.0, p_j + p_k - 1.0);
  const double frechet_hi = std::min(p_j, p_k);
  if (target < frechet_lo - 1e-12 || target > frechet_hi + 1e-12)
    throw std::invalid_argument("solve_tetrachoric: delta outside feasible bounds");

  const double zj = std_normal_quantile(p_j);
  const double zk = std_normal_quantile(p_k);
  auto f = [&](double rho) { return bvn_cdf(zj, zk, rho) - target; };

  double lo = -1.0 + 1e-9, hi = 1.0 - 1e-9;
  double flo = f(lo), fhi = f(hi);
  if (flo > 1e-8 || fhi < -1e-8)
    throw std::runtime_error("solve_tetrachoric: root not bracketed (bounds violation)");
  if (std::fabs(flo) <= 1e-8) return lo;
  if (std::fabs(fhi) <= 1e-8) return hi;

  double mid = 0.0;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::fabs(fm) <= 1e-8 || hi - lo < 1e-15) return mid;
    if (fm < 0)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

namespace {

Eigen::MatrixXd psd_project(const Eigen::MatrixXd& a, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd d = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void symmetrize_unit_diag(Eigen::MatrixXd& a) {
  a = ((a + a.transpose()) / 2.0).eval();
  for (int i = 0; i < a.rows(); ++i) a(i, i) = 1.0;
}

}  // namespace

PdRepairReport nearest_pd(const CorrelationMatrix& corr) {
  const Eigen::MatrixXd& a = corr.m;
  PdRepairReport rep;
  rep.input = a;
  rep.min_eig_before = min_eigenvalue(a);

  if (rep.min_eig_before >= 1e-8) {
    rep.repaired = a;
    rep.min_eig_after = rep.min_eig_before;
    return rep;
  }

  Eigen::MatrixXd y;
  if (rep.min_eig_before >= -1e-10) {
    // rounding noise only: floor the spectrum without full reprojection
    y = psd_project(a, 1e-8);
    symmetrize_unit_diag(y);
  } else {
    // Higham alternating projections with Dykstra correction
    y = a;
    Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
      const Eigen::MatrixXd r = y - ds;
      const Eigen::MatrixXd x = psd_project(r, 0.0);
      ds = x - r;
      Eigen::MatrixXd y_next = x;
      for (int i = 0; i < y_next.rows(); ++i) y_next(i, i) = 1.0;
      const double change = (y_next - y).norm();
      y = y_next;
      if (change <= 1e-7) {
        converged = true;
        break;
      }
    }
    if (!converged) throw std::runtime_error("nearest_pd: no convergence within 200 iterations");
    if (min_eigenvalue(y) < 1e-8) {
      y = psd_project(y, 1e-8);
      // restore the correlation scale after flooring
      Eigen::VectorXd d = y.diagonal().cwiseSqrt();
      y = d.cwiseInverse().asDiagonal() * y * d.cwiseInverse().asDiagonal();
    }
    symmetrize_unit_diag(y);
  }

  rep.repaired = y;
  rep.was_repaired = true;
  rep.min_eig_after = min_eigenvalue(y);
  rep.max_abs_change = (y - a).cwiseAbs().maxCoeff();
  return rep;
}

Eigen::MatrixXd lower_cholesky(const CorrelationMatrix& corr) {
  Eigen::LLT<Eigen::MatrixXd> llt(corr.m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // indefinite within tolerance: floor the spectrum and retry
  Eigen::MatrixXd floored = psd_project(corr.m, 1e-10);
  Eigen::LLT<Eigen::MatrixXd> llt2(floored);
  if (llt2.info() != Eigen::Success)
    throw std::runtime_error("lower_cholesky: matrix indefinite after repair");
  return llt2.matrixL();
}

Eigen::MatrixXd mvn_sample(const CorrelationMatrix& corr, int n, RngStream& stream) {
  if (n < 1) throw std::invalid_argument("mvn_sample: n must be >= 1");
  const int j = corr.dim();
  const Eigen::MatrixXd l = lower_cholesky(corr);
  Eigen::MatrixXd z(n, j);
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < j; ++col) z(row, col) = stream.normal();
  return z * l.transpose();
}

Eigen::MatrixXi dichotomize(const Eigen::MatrixXd& z, const std::vector<double>& p) {
  if (static_cast<size_t>(z.cols()) != p.size())
    throw std::invalid_argument("dichotomize: column count does not match p length");
  std::vector<double> thresholds(p.size());
  for (size_t j = 0; j < p.size(); ++j) thresholds[j] = std_normal_quantile(p[j]);
  Eigen::MatrixXi y(z.rows(), z.cols());
  for (int col = 0; col < z.cols(); ++col)
    for (int row = 0; row < z.rows(); ++row)
      y(row, col) = z(row, col) <= thresholds[col] ? 1 : 0;
  return y;
}

}  // namespace discorr
