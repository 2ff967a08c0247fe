#include "fbrd/tilted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbrd/errors.hpp"
#include "fbrd/normal.hpp"
#include "fbrd/quadrature.hpp"

namespace fbrd::tilted {

TiltedParams TiltedParams::from_solution(
    const waterfill::WaterfillSolution& sol) {
  if (!(sol.theta > 0.0))
    throw DomainError("TiltedParams: water level must be positive");
  TiltedParams p;
  p.theta = sol.theta;
  p.lambda_star = 1.0 / (2.0 * sol.theta);
  p.per_index = sol.per_index;
  return p;
}

double tilted_info(const std::vector<double>& u, const TiltedParams& params) {
  if (u.size() != params.per_index.size())
    throw DomainError("tilted_info: sample length does not match parameters");
  const double theta = params.theta;
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& p = params.per_index[i];
    const double w = p.d / (2.0 * theta);
    acc += w * (u[i] * u[i] / p.sigma2 - 1.0);
    if (p.sigma2 > theta) acc += 0.5 * std::log(p.sigma2 / theta);
  }
  return acc;
}

double tilted_info_numeric(double u, double sigma2, double nu,
                           double lambda_star, double d_letter) {
  if (!(lambda_star > 0.0))
    throw DomainError("tilted_info_numeric: lambda must be positive");
  if (nu < 0.0) throw DomainError("tilted_info_numeric: nu must be >= 0");
  (void)sigma2;

  if (nu == 0.0) {
    // Reproduction is a point mass at 0.
    return -lambda_star * d_letter + lambda_star * u * u;
  }

  // E[exp(-lambda (u - Y)^2)] with Y = sqrt(2 nu) t, t against exp(-t^2):
  // (1/sqrt(pi)) int exp(-t^2) exp(-lambda (u - sqrt(2 nu) t)^2) dt.
  const double s = std::sqrt(2.0 * nu);
  auto log_expectation = [&](int npts) {
    const auto& rule = num::gauss_hermite(npts);
    double emax = -std::numeric_limits<double>::infinity();
    std::vector<double> expo(rule.x.size());
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      const double r = u - s * rule.x[i];
      expo[i] = -lambda_star * r * r;
      emax = std::max(emax, expo[i]);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i)
      acc += rule.w[i] * std::exp(expo[i] - emax);
    return emax + std::log(acc) - 0.5 * std::log(M_PI);
  };

  double prev = log_expectation(100);
  for (int npts = 200; npts <= 1600; npts *= 2) {
    const double cur = log_expectation(npts);
    if (std::abs(cur - prev) <= 1e-11 * std::max(1.0, std::abs(cur)))
      return -lambda_star * d_letter - cur;
    prev = cur;
  }
  throw ComputationError("tilted_info_numeric: quadrature did not settle");
}

JDerivatives J_and_derivatives(double u, double lambda, double nu) {
  if (!(lambda > 0.0))
    throw DomainError("J_and_derivatives: lambda must be positive");
  if (nu < 0.0) throw DomainError("J_and_derivatives: nu must be >= 0");
  const double a = 1.0 + 2.0 * lambda * nu;
  const double u2 = u * u;
  JDerivatives d;
  d.J = lambda * u2 / a + 0.5 * std::log(a);
  d.J1 = nu / a + u2 / (a * a);
  d.J2 = -2.0 * nu * nu / (a * a) - 4.0 * u2 * nu / (a * a * a);
  d.J3 = 8.0 * nu * nu * nu / (a * a * a) +
         24.0 * u2 * nu * nu / (a * a * a * a);
  return d;
}

QuadFormView tilted_quadform(const TiltedParams& params) {
  QuadFormView q;
  q.weights.reserve(params.per_index.size());
  double shift = 0.0;
  for (const auto& p : params.per_index) {
    const double w = p.d / (2.0 * params.theta);
    q.weights.push_back(w);
    shift -= w;
    if (p.sigma2 > params.theta)
      shift += 0.5 * std::log(p.sigma2 / params.theta);
  }
  q.shift = shift;
  return q;
}

double analytic_mean(const TiltedParams& params) {
  double acc = 0.0;
  for (const auto& p : params.per_index)
    if (p.sigma2 > params.theta)
      acc += 0.5 * std::log(p.sigma2 / params.theta);
  return acc;
}

double analytic_variance(const TiltedParams& params) {
  double acc = 0.0;
  for (const auto& p : params.per_index) {
    const double w = p.d / (2.0 * params.theta);
    acc += 2.0 * w * w;
  }
  return acc;
}

AssumptionReport assumption_report(const spectrum::EigenSpectrum& spec,
                                   const waterfill::WaterfillSolution& solution,
                                   const Thresholds& thresholds) {
  if (solution.per_index.size() != spec.n)
    throw DomainError("assumption_report: solution does not match spectrum");
  const double theta = solution.theta;
  const double n = static_cast<double>(spec.n);

  double var_jp = 0.0, mean_jpp = 0.0, sixth = 0.0;
  for (const auto& p : solution.per_index) {
    const double s4 = p.sigma2 * p.sigma2;
    const double t2 = theta * theta;
    if (p.sigma2 > theta) {
      // Active letter: a(lambda*) = sigma^2/theta.
      var_jp += 2.0 * t2 * t2 / s4;
      mean_jpp += 2.0 * t2 * (1.0 - t2 / s4);
    } else {
      var_jp += 2.0 * s4;
    }
    const double b = p.sigma2 + p.nu;
    sixth += b * b * b * b * b * b;
  }

  AssumptionReport rep;
  rep.var_Jprime = var_jp / n;
  rep.mean_absJpp = mean_jpp / n;
  rep.sixth_moment = sixth / n;
  rep.thresholds = thresholds;
  rep.curvature_ok = rep.mean_absJpp >= thresholds.kappa0;
  rep.variance_ok = rep.var_Jprime >= thresholds.kappa1;
  rep.moment_ok = rep.sixth_moment <= thresholds.k_prime;
  return rep;
}

double BerryEsseenStats::cdf_bound(std::size_t n) const {
  return m / std::sqrt(static_cast<double>(n));
}

BerryEsseenStats berry_esseen_stats(const std::vector<double>& variances,
                                    const std::vector<double>& third_moments) {
  if (variances.empty() || variances.size() != third_moments.size())
    throw DomainError("berry_esseen_stats: moment lists must match, nonempty");
  double v2 = 0.0, t3 = 0.0;
  for (std::size_t i = 0; i < variances.size(); ++i) {
    if (!(variances[i] > 0.0))
      throw DomainError("berry_esseen_stats: variances must be positive");
    if (third_moments[i] < 0.0)
      throw DomainError("berry_esseen_stats: third moments must be >= 0");
    v2 += variances[i];
    t3 += third_moments[i];
  }
  v2 /= static_cast<double>(variances.size());
  t3 /= static_cast<double>(variances.size());

  BerryEsseenStats s;
  s.v2 = v2;
  s.t3 = t3;
  s.m = 6.0 * t3 / (v2 * std::sqrt(v2));
  return s;
}

double chi2_abs_third_central_moment() {
  // E|Q - 1|^3 = E(Q - 1)^3 + 4 int_0^1 (1 - z^2)^3 phi(z) dz, and the
  // truncated-normal moments reduce the integral to Phi(1), phi(1).
  static const double value = 8.0 - 32.0 * (num::normal_cdf(1.0) - 0.5) +
                              48.0 * num::normal_pdf(1.0);
  return value;
}

void tilted_summand_moments(const TiltedParams& params,
                            std::vector<double>& variances,
                            std::vector<double>& third_moments) {
  const double k3 = chi2_abs_third_central_moment();
  variances.clear();
  third_moments.clear();
  variances.reserve(params.per_index.size());
  third_moments.reserve(params.per_index.size());
  for (const auto& p : params.per_index) {
    const double w = p.d / (2.0 * params.theta);
    variances.push_back(2.0 * w * w);
    third_moments.push_back(w * w * w * k3);
  }
}

BerryEsseenStats tilted_berry_esseen(const TiltedParams& params) {
  std::vector<double> v, t;
  tilted_summand_moments(params, v, t);
  return berry_esseen_stats(v, t);
}

}  // namespace fbrd::tilted
