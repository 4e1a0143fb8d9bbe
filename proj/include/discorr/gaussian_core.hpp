#ifndef DISCORR_GAUSSIAN_CORE_HPP
#define DISCORR_GAUSSIAN_CORE_HPP

#include <Eigen/Dense>
#include <vector>

#include "discorr/rng.hpp"

namespace discorr {

double std_normal_cdf(double z);

// Wichura AS 241 inverse normal CDF, |Phi(z) - p| <= 1e-12 on (0,1).
double std_normal_quantile(double p);

// P(Z1 <= x1, Z2 <= x2) for standard bivariate normal with correlation rho,
// absolute error below 1e-7 (Gauss-Legendre quadrature on the Drezner-
// Wesolowsky single-integral reduction).
double bvn_cdf(double x1, double x2, double rho);

struct CorrelationMatrix {
  Eigen::MatrixXd m;

  int dim() const { return static_cast<int>(m.rows()); }
  static CorrelationMatrix identity(int j);
  // validates symmetry (1e-12), unit diagonal, off-diagonals in [-1, 1]
  static CorrelationMatrix from(Eigen::MatrixXd mat);
};

struct PdRepairReport {
  Eigen::MatrixXd input;
  Eigen::MatrixXd repaired;
  bool was_repaired = false;
  double min_eig_before = 0.0;
  double min_eig_after = 0.0;
  double max_abs_change = 0.0;
};

// Solve the Emrich-Piedmonte equation
//   Phi[z(p_j), z(p_k); rho] = delta * sqrt(p_j q_j p_k q_k) + p_j p_k
// for rho by bracketed root search; the left side is strictly increasing
// in rho. Residual tolerance 1e-8.
double solve_tetrachoric(double p_j, double p_k, double delta);

// Higham alternating-projections nearest correlation matrix. Inputs with
// min eigenvalue >= 1e-8 are returned unchanged; values in [-1e-10, 1e-8]
// are floored only.
PdRepairReport nearest_pd(const CorrelationMatrix& corr);

// Lower-triangular factor of corr, with an eigenvalue-floored fallback when
// the Cholesky factorization fails.
Eigen::MatrixXd lower_cholesky(const CorrelationMatrix& corr);

// n rows of zero-mean normals with the given correlation.
Eigen::MatrixXd mvn_sample(const CorrelationMatrix& corr, int n, RngStream& stream);

// entry (i,j) = 1 iff z(i,j) <= std_normal_quantile(p[j])
Eigen::MatrixXi dichotomize(const Eigen::MatrixXd& z, const std::vector<double>& p);

}  // namespace discorr

#endif
