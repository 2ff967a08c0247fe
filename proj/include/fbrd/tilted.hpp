#pragma once

#include <cstddef>
#include <vector>

#include "fbrd/spectrum.hpp"
#include "fbrd/waterfill.hpp"

namespace fbrd::tilted {

// Per-letter tilt parameters frozen out of a water-filling solution.
struct TiltedParams {
  double theta = 0.0;
  double lambda_star = 0.0;  // 1/(2 theta), nats
  std::vector<waterfill::PerIndex> per_index;

  static TiltedParams from_solution(const waterfill::WaterfillSolution& sol);
  std::size_t n() const { return per_index.size(); }
};

// Closed-form d-tilted information of the block u (nats):
//   sum_i [ (d_i/(2 theta)) (u_i^2/sigma_i^2 - 1) + max(0, ln(sigma_i^2/theta))/2 ].
double tilted_info(const std::vector<double>& u, const TiltedParams& params);

// Definition-level oracle for a single letter:
//   -lambda*.d_letter - ln E[exp(-lambda* (u - Y)^2)],  Y ~ N(0, nu),
// by Gauss-Hermite quadrature (exact branch at nu = 0). Matches the
// single-letter closed-form term to 1e-8.
double tilted_info_numeric(double u, double sigma2, double nu,
                           double lambda_star, double d_letter);

struct JDerivatives {
  double J = 0.0;
  double J1 = 0.0;
  double J2 = 0.0;
  double J3 = 0.0;
};

// J(u, lambda) = lambda u^2 / a + ln(a)/2 with a = 1 + 2 lambda nu, plus its
// first three lambda-derivatives (nats).
JDerivatives J_and_derivatives(double u, double lambda, double nu);

// jmath(X) as an affine combination of iid chi-square(1) variables:
// jmath = sum_i weights[i] * Q_i + shift.
struct QuadFormView {
  std::vector<double> weights;  // d_i / (2 theta)
  double shift = 0.0;           // sum_i [max(0, ln(s_i^2/theta))/2 - w_i]
};
QuadFormView tilted_quadform(const TiltedParams& params);

double analytic_mean(const TiltedParams& params);      // n * R_n
double analytic_variance(const TiltedParams& params);  // n * V_n

struct Thresholds {
  double kappa0 = 0.0;   // lower bound demanded of E[(1/n)|J''|]
  double kappa1 = 0.0;   // lower bound demanded of Var[(1/sqrt n) J']
  double k_prime = 0.0;  // upper bound demanded of the sixth-moment average
};

struct AssumptionReport {
  double var_Jprime = 0.0;    // Var[(1/sqrt n) J'(X, lambda*)]
  double mean_absJpp = 0.0;   // E[(1/n) |J''(X, lambda*)|]
  double sixth_moment = 0.0;  // (1/n) sum (sigma_i^2 + nu_i)^6
  Thresholds thresholds;
  bool curvature_ok = false;  // mean_absJpp >= kappa0
  bool variance_ok = false;   // var_Jprime >= kappa1
  bool moment_ok = false;     // sixth_moment <= k_prime
};

AssumptionReport assumption_report(const spectrum::EigenSpectrum& spec,
                                   const waterfill::WaterfillSolution& solution,
                                   const Thresholds& thresholds);

struct BerryEsseenStats {
  double v2 = 0.0;  // average summand variance
  double t3 = 0.0;  // average third absolute central moment
  double m = 0.0;   // 6 t3 / v2^{3/2}

  double cdf_bound(std::size_t n) const;  // m / sqrt(n), not asserted
};

BerryEsseenStats berry_esseen_stats(const std::vector<double>& variances,
                                    const std::vector<double>& third_moments);

// E|Q - 1|^3 for Q ~ chi-square(1): 8 - 32 (Phi(1) - 1/2) + 48 phi(1).
double chi2_abs_third_central_moment();

// Variance and third absolute central moment of each tilted summand
// w_i (Q_i - 1): (2 w_i^2, w_i^3 E|Q-1|^3).
void tilted_summand_moments(const TiltedParams& params,
                            std::vector<double>& variances,
                            std::vector<double>& third_moments);

BerryEsseenStats tilted_berry_esseen(const TiltedParams& params);

}  // namespace fbrd::tilted
