#include "fbrd/gamma.hpp"

#include <cmath>
#include <limits>

#include "fbrd/errors.hpp"

namespace fbrd::num {

namespace {

// Series for the lower tail, returns ln P(a,x). Converges fast for x < a+1.
double series_log(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int it = 0; it < 10000; ++it) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-17) {
      return a * std::log(x) - x - std::lgamma(a) + std::log(sum);
    }
  }
  throw ComputationError("incomplete gamma: series failed to converge");
}

// Modified Lentz continued fraction for the upper tail Q(a,x), x >= a+1.
double cf_upper(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) {
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
  }
  throw ComputationError("incomplete gamma: continued fraction stalled");
}

}  // namespace

double gammp(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw DomainError("gammp: require a > 0, x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return std::exp(series_log(a, x));
  return 1.0 - cf_upper(a, x);
}

double gammq(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw DomainError("gammq: require a > 0, x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - std::exp(series_log(a, x));
  return cf_upper(a, x);
}

double log_gammp(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw DomainError("log_gammp: require a > 0, x >= 0");
  }
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (x < a + 1.0) return series_log(a, x);
  const double q = cf_upper(a, x);
  return std::log1p(-q);
}

double chi2_cdf(double k, double x) { return gammp(0.5 * k, 0.5 * x); }

}  // namespace fbrd::num
