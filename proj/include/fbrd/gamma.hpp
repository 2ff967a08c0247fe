#pragma once

namespace fbrd::num {

// Regularized lower incomplete gamma P(a, x) = gamma(a,x)/Gamma(a).
double gammp(double a, double x);

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gammq(double a, double x);

// ln P(a, x), stable when P underflows (x << a). Series evaluation with the
// leading factor kept in log space.
double log_gammp(double a, double x);

// Chi-square CDF with k degrees of freedom: P[X <= x] = P(k/2, x/2).
double chi2_cdf(double k, double x);

}  // namespace fbrd::num
