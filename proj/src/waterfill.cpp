#include "fbrd/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbrd/errors.hpp"
#include "fbrd/quadrature.hpp"

namespace fbrd::waterfill {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double budget(const std::vector<double>& eig, double theta) {
  double s = 0.0;
  for (double v : eig) s += std::min(theta, v);
  return s / static_cast<double>(eig.size());
}

}  // namespace

double RateDispersionPoint::rate_bits() const { return rate_nats / kLn2; }

double RateDispersionPoint::dispersion_bits2() const {
  return dispersion_nats2 / (kLn2 * kLn2);
}

WaterfillSolution solve_water_level(const spectrum::EigenSpectrum& spec,
                                    double d) {
  const auto& eig = spec.eigenvalues;
  if (eig.empty()) throw DomainError("solve_water_level: empty spectrum");
  if (!(d > 0.0) || !std::isfinite(d))
    throw DomainError("solve_water_level: distortion must be positive");

  const double d_max = budget(eig, spec.max_eigenvalue());
  if (d >= d_max)
    throw DomainError(
        "solve_water_level: distortion at or above d_max; rate is zero");

  double theta;
  if (d <= spec.min_eigenvalue()) {
    // Below the smallest eigenvalue every letter is active and the budget
    // reduces to theta itself; take the root exactly.
    theta = d;
  } else {
    // budget(theta) is continuous, strictly increasing on (0, max eigenvalue]
    // with budget(0+) = 0, so the root is bracketed.
    double lo = 0.0;
    double hi = spec.max_eigenvalue();
    for (int it = 0; it < 200; ++it) {
      theta = 0.5 * (lo + hi);
      const double b = budget(eig, theta);
      if (b < d)
        lo = theta;
      else
        hi = theta;
      if (hi - lo <= 1e-12 * hi) break;
    }
    theta = 0.5 * (lo + hi);
  }

  WaterfillSolution out;
  out.theta = theta;
  out.d_target = d;
  out.per_index.reserve(eig.size());
  for (double s2 : eig) {
    PerIndex p;
    p.sigma2 = s2;
    p.nu = std::max(0.0, s2 - theta);
    p.d = std::min(theta, s2);
    if (s2 > theta) ++out.active_count;
    out.per_index.push_back(p);
  }
  return out;
}

RateDispersionPoint rate_dispersion(const spectrum::EigenSpectrum& spec,
                                    const WaterfillSolution& solution) {
  if (solution.per_index.size() != spec.n)
    throw DomainError("rate_dispersion: solution does not match spectrum");
  const double theta = solution.theta;
  if (!(theta > 0.0))
    throw DomainError("rate_dispersion: invalid water level");

  double rate = 0.0;
  double disp = 0.0;
  for (const auto& p : solution.per_index) {
    if (p.sigma2 > theta) rate += 0.5 * std::log(p.sigma2 / theta);
    const double r = std::min(1.0, (p.sigma2 / theta) * (p.sigma2 / theta));
    disp += 0.5 * r;
  }
  const double n = static_cast<double>(spec.n);

  RateDispersionPoint pt;
  pt.n = spec.n;
  pt.d = solution.d_target;
  pt.rate_nats = rate / n;
  pt.dispersion_nats2 = disp / n;
  pt.lambda_star = 1.0 / (2.0 * theta);
  return pt;
}

LimitPoint limiting_point(const spectrum::SourceSpec& source, double d) {
  source.validate();
  if (source.kind != spectrum::SourceSpec::Kind::gauss_markov)
    throw DomainError("limiting_point: requires a Gauss-Markov source");
  if (!(d > 0.0) || !std::isfinite(d))
    throw DomainError("limiting_point: distortion must be positive");

  const spectrum::SpectralDensity sd{source.a, source.sigma2};
  const double d_max = source.sigma2 / (1.0 - source.a * source.a);
  if (d >= d_max)
    throw DomainError(
        "limiting_point: distortion at or above d_max; rate is zero");

  const double pi = M_PI;
  auto S = [&](double w) { return spectrum::psd(sd, w); };

  double theta;
  if (d <= sd.theta_min()) {
    // Every frequency stays active; the budget integral is just theta.
    theta = d;
  } else {
    // Solve (1/pi) * int_0^pi min(theta, S(w)) dw = d. S is decreasing on
    // [0, pi], so the integrand has a single kink at the crossing angle.
    auto budget = [&](double th) {
      const double wc = spectrum::crossing_angle(sd, th);
      if (wc < 0.0) {
        // theta below the whole spectrum (all active) or above it (none).
        return th < S(pi) ? th : d_max;
      }
      fbrd::num::QuadOptions opt;
      opt.abs_tol = 1e-12;
      const double tail = fbrd::num::integrate(S, wc, pi, opt);
      return (th * wc + tail) / pi;
    };
    double lo = sd.theta_min();
    double hi = sd.theta_max();
    for (int it = 0; it < 200; ++it) {
      theta = 0.5 * (lo + hi);
      if (budget(theta) < d)
        lo = theta;
      else
        hi = theta;
      if (hi - lo <= 1e-12 * hi) break;
    }
    theta = 0.5 * (lo + hi);
  }

  const double wc_raw = spectrum::crossing_angle(sd, theta);
  const double wc = wc_raw < 0.0 ? (theta < S(pi) ? pi : 0.0) : wc_raw;

  fbrd::num::QuadOptions opt;
  opt.abs_tol = 1e-11;
  double rate = 0.0;
  if (wc > 0.0) {
    rate = fbrd::num::integrate(
               [&](double w) { return 0.5 * std::log(S(w) / theta); }, 0.0,
               wc, opt) /
           pi;
  }
  const double disp =
      fbrd::num::integrate(
          [&](double w) {
            const double r = S(w) / theta;
            return 0.5 * std::min(1.0, r * r);
          },
          0.0, pi, opt, {wc}) /
      pi;

  LimitPoint lp;
  lp.d = d;
  lp.theta_star = theta;
  lp.rate_limit = rate;
  lp.dispersion_limit = disp;
  lp.d_max = d_max;
  return lp;
}

std::optional<double> loglog_slope(const std::vector<double>& x,
                                   const std::vector<double>& y,
                                   double floor) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (y[i] > floor && x[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 3) return std::nullopt;
  const double n = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

ConcentrationReport concentration_report(
    const spectrum::SourceSpec& source, double d,
    const std::vector<std::size_t>& n_list,
    const spectrum::SpectrumOptions& options) {
  if (n_list.size() < 3)
    throw DomainError("concentration_report: need at least three blocklengths");

  ConcentrationReport rep;
  rep.limit = limiting_point(source, d);

  std::vector<double> ns, g_theta, g_rate, g_disp;
  for (std::size_t n : n_list) {
    const auto spec = spectrum::eigen_spectrum(source, n, options);
    const auto sol = solve_water_level(spec, d);
    const auto pt = rate_dispersion(spec, sol);

    ConcentrationRow row;
    row.n = n;
    row.theta_n = sol.theta;
    row.gap_theta = std::abs(sol.theta - rep.limit.theta_star);
    row.gap_rate = std::abs(pt.rate_nats - rep.limit.rate_limit);
    row.gap_dispersion =
        std::abs(pt.dispersion_nats2 - rep.limit.dispersion_limit);
    rep.rows.push_back(row);

    ns.push_back(static_cast<double>(n));
    g_theta.push_back(row.gap_theta);
    g_rate.push_back(row.gap_rate);
    g_disp.push_back(row.gap_dispersion);
  }

  rep.slope_theta = loglog_slope(ns, g_theta);
  rep.slope_rate = loglog_slope(ns, g_rate);
  rep.slope_dispersion = loglog_slope(ns, g_disp);
  return rep;
}

}  // namespace fbrd::waterfill
