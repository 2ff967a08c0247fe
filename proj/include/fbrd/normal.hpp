#pragma once

namespace fbrd::num {

double normal_pdf(double x);

// Phi(x) = P[Z <= x] for Z ~ N(0,1).
double normal_cdf(double x);

// ln Phi(x), stable far into the left tail (x ~ -300 is fine).
double log_normal_cdf(double x);

// Upper tail Q(x) = 1 - Phi(x).
double q_function(double x);

// Phi^{-1}(p), p in (0,1). Rational initial guess polished by Halley steps;
// roundtrip |Phi(quantile(p)) - p| is at machine level.
double normal_quantile(double p);

// Q^{-1}(eps): Q(q_inverse(eps)) = eps within 1e-12 for eps in (0,1).
double q_inverse(double eps);

}  // namespace fbrd::num
