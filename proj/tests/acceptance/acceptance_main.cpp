// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single PASS/FAIL line with the measured numbers. Exits nonzero
// if any check fails. Budgets are wall-clock seconds on a single core.

#include <initializer_list>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "fbrd/bounds.hpp"
#include "fbrd/config.hpp"
#include "fbrd/csv.hpp"
#include "fbrd/normal.hpp"
#include "fbrd/quadform.hpp"
#include "fbrd/rng.hpp"
#include "fbrd/run.hpp"
#include "fbrd/simulate.hpp"
#include "fbrd/spectrum.hpp"
#include "fbrd/tilted.hpp"
#include "fbrd/waterfill.hpp"

using namespace fbrd;
using spectrum::SourceSpec;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

double now_s() {
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string num(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

waterfill::WaterfillSolution one_letter(double sigma2, double theta) {
  waterfill::WaterfillSolution sol;
  sol.theta = theta;
  sol.d_target = std::min(theta, sigma2);
  sol.per_index = {{sigma2, std::max(0.0, sigma2 - theta),
                    std::min(theta, sigma2)}};
  sol.active_count = sigma2 > theta ? 1 : 0;
  return sol;
}

// 1. Single-letter tilted information: closed form against the
//    definition-level Gauss-Hermite oracle, 100 randomized configurations.
Outcome check_tilted_oracle() {
  CounterRng rng(2026, 1);
  double max_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double sigma2 = 0.2 + 3.8 * rng.next_double();
    const double theta = sigma2 * (0.1 + 1.3 * rng.next_double());
    const auto sol = one_letter(sigma2, theta);
    const auto params = tilted::TiltedParams::from_solution(sol);
    const double u = 3.0 * std::sqrt(sigma2) * rng.next_gauss();
    const double closed = tilted::tilted_info({u}, params);
    const double oracle = tilted::tilted_info_numeric(
        u, sigma2, sol.per_index[0].nu, 1.0 / (2.0 * theta),
        sol.per_index[0].d);
    max_err = std::max(max_err, std::fabs(closed - oracle));
  }
  return {max_err <= 1e-8, "max |closed - quadrature| = " + num(max_err, 3)};
}

// 2. Mean/variance identities of the tilted information (E = n R_n,
//    Var = n V_n) analytically to 1e-12, then against 1e6 Monte Carlo
//    samples within 4 standard errors.
Outcome check_identities() {
  double worst = 0.0;
  for (double a : {0.0, 0.3, 0.9}) {
    for (std::size_t n : {4, 16, 64}) {
      const auto spec = spectrum::eigen_spectrum(SourceSpec::gauss_markov(a, 1.0), n);
      for (double frac : {0.2, 0.5, 0.9}) {
        const double d = frac * spec.average_variance();
        const auto sol = waterfill::solve_water_level(spec, d);
        const auto params = tilted::TiltedParams::from_solution(sol);
        const auto pt = waterfill::rate_dispersion(spec, sol);
        const double dn = static_cast<double>(n);
        const double em = std::fabs(tilted::analytic_mean(params) - dn * pt.rate_nats) /
                          std::max(1.0, dn * pt.rate_nats);
        const double ev =
            std::fabs(tilted::analytic_variance(params) - dn * pt.dispersion_nats2) /
            std::max(1.0, dn * pt.dispersion_nats2);
        worst = std::max({worst, em, ev});
      }
    }
  }
  if (worst > 1e-12)
    return {false, "analytic identity error " + num(worst, 3)};

  const auto spec = spectrum::eigen_spectrum(
      SourceSpec::explicit_list({3.0, 2.2, 1.5, 0.9, 0.6, 0.3}), 6);
  const auto sol = waterfill::solve_water_level(spec, 0.5);
  const auto params = tilted::TiltedParams::from_solution(sol);
  const double mean = tilted::analytic_mean(params);
  const double var = tilted::analytic_variance(params);

  const std::size_t N = 1000000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  std::vector<double> x(6);
  for (std::size_t s = 0; s < N; ++s) {
    CounterRng rng(77, stream_id(s, 2));
    for (int i = 0; i < 6; ++i)
      x[i] = std::sqrt(sol.per_index[i].sigma2) * rng.next_gauss();
    const double j = tilted::tilted_info(x, params);
    const double c = j - mean;
    s1 += c;
    s2 += c * c;
    s4 += c * c * c * c;
  }
  const double dn = static_cast<double>(N);
  const double mc_mean = mean + s1 / dn;
  const double mc_var = s2 / dn;
  const double se_mean = std::sqrt(var / dn);
  const double se_var = std::sqrt((s4 / dn - mc_var * mc_var) / dn);
  const double zm = std::fabs(mc_mean - mean) / se_mean;
  const double zv = std::fabs(mc_var - var) / se_var;
  const bool ok = zm <= 4.0 && zv <= 4.0;
  return {ok, "identity err " + num(worst, 2) + ", MC z-scores mean " +
                  num(zm, 3) + ", var " + num(zv, 3)};
}

// 3. Every eigenvalue of the blocklength-n covariance lies in the spectral
//    density range, and the eigenvalue sum matches the matrix trace.
Outcome check_eigen_sandwich() {
  double worst_range = 0.0, worst_trace = 0.0;
  for (double a : {0.0, 0.3, 0.7, 0.9}) {
    const spectrum::SpectralDensity psd{a, 1.0};
    for (auto model : {spectrum::CovarianceModel::zero_init,
                       spectrum::CovarianceModel::stationary}) {
      for (std::size_t n = 2; n <= 512; n *= 2) {
        spectrum::SpectrumOptions opt;
        opt.model = model;
        const auto spec =
            spectrum::eigen_spectrum(SourceSpec::gauss_markov(a, 1.0), n, opt);
        worst_range = std::max(worst_range,
                               psd.theta_min() - spec.min_eigenvalue());
        worst_range = std::max(worst_range,
                               spec.max_eigenvalue() - psd.theta_max());
        double sum = 0.0;
        for (double ev : spec.eigenvalues) sum += ev;
        const double tr =
            spectrum::covariance_matrix(spec.source, n, model).trace();
        worst_trace = std::max(worst_trace, std::fabs(sum - tr) / tr);
      }
    }
  }
  const bool ok = worst_range <= 1e-10 && worst_trace <= 1e-10;
  return {ok, "worst range excess " + num(worst_range, 3) +
                  ", worst trace rel err " + num(worst_trace, 3)};
}

// 4. Averaged-spectrum bound: |eigenvalue average - spectral integral| of
//    F = min(1/2, .) stays below C_L/n at every doubling blocklength.
Outcome check_szego_bound() {
  const auto src = SourceSpec::gauss_markov(0.5, 1.0);
  const spectrum::SpectralDensity psd{0.5, 1.0};
  spectrum::BoundedLipschitzFn fn;
  fn.f = [](double x) { return std::min(0.5, x); };
  fn.sup_norm = 0.5;
  fn.lipschitz = 1.0;
  const double pi = 3.14159265358979323846;
  const double CL = std::max(
      fn.sup_norm + 2.0 * 0.5 * fn.lipschitz * pi * 1.0 / std::pow(0.5, 4),
      2.0 * fn.sup_norm);
  const std::vector<double> splits = {spectrum::crossing_angle(psd, 0.5)};

  double worst_margin = -1e300, worst_const = 0.0;
  for (std::size_t n = 16; n <= 1024; n *= 2) {
    const auto g = spectrum::szego_gap(src, n, fn, splits);
    worst_margin = std::max(worst_margin,
                            g.gap - CL / static_cast<double>(n));
    worst_const = std::max(worst_const,
                           std::fabs(g.bound * static_cast<double>(n) - CL) / CL);
  }
  const bool ok = worst_margin <= 0.0 && worst_const <= 1e-12;
  return {ok, "worst gap - C_L/n = " + num(worst_margin, 3) +
                  " (C_L = " + num(CL, 6) + ")"};
}

// 5. Water-level concentration: log-log slope of |theta_n - theta*| within
//    [-1.3, -0.8] at a = 0.5, d = 0.3, plus bounded n-scaled rate and
//    dispersion gaps.
Outcome check_concentration() {
  std::vector<std::size_t> ns;
  for (std::size_t n = 16; n <= 1024; n *= 2) ns.push_back(n);
  const auto rep =
      waterfill::concentration_report(SourceSpec::gauss_markov(0.5, 1.0), 0.3, ns);

  double max_rate = 0.0, max_disp = 0.0, max_theta_gap = 0.0;
  for (const auto& row : rep.rows) {
    const double dn = static_cast<double>(row.n);
    max_rate = std::max(max_rate, dn * row.gap_rate);
    max_disp = std::max(max_disp, dn * row.gap_dispersion);
    max_theta_gap = std::max(max_theta_gap, row.gap_theta);
  }
  const bool bounded = max_rate <= 1.0 && max_disp <= 1.0;
  const bool slope_ok = rep.slope_theta && *rep.slope_theta >= -1.3 &&
                        *rep.slope_theta <= -0.8;

  // Reference slope at a distortion above the spectral floor, where the
  // water level actually moves with n.
  const auto ref =
      waterfill::concentration_report(SourceSpec::gauss_markov(0.5, 1.0), 0.6, ns);

  std::string detail;
  if (rep.slope_theta) {
    detail = "slope " + num(*rep.slope_theta, 4);
  } else {
    detail = "no slope: d = 0.3 sits below the spectral floor 4/9, so "
             "theta_n = theta* = 0.3 at every n and every gap is exactly " +
             num(max_theta_gap, 2);
  }
  detail += "; max n|R_n - R| = " + num(max_rate, 3) +
            ", max n|V_n - V| = " + num(max_disp, 3);
  if (ref.slope_theta)
    detail += "; d = 0.6 reference slope " + num(*ref.slope_theta, 4);
  return {slope_ok && bounded, detail};
}

struct GridPoint {
  double a = 0.0;
  std::size_t n = 0;
  double eps = 0.0;
  double conv = 0.0;
  double ach = 0.0;
  double approx = 0.0;
};

std::vector<GridPoint> run_bound_grid() {
  std::vector<GridPoint> grid;
  for (double a : {0.0, 0.5}) {
    const double d = 0.3 * 1.0 / (1.0 - a * a);
    std::vector<std::pair<std::size_t, double>> cells;
    for (std::size_t n : {8, 16, 32, 64})
      for (double eps : {0.1, 0.5}) cells.emplace_back(n, eps);
    if (a == 0.5)
      for (std::size_t n : {128, 256}) cells.emplace_back(n, 0.1);
    for (const auto& [n, eps] : cells) {
      bounds::BoundQuery q;
      q.n = n;
      q.d = d;
      q.epsilon = eps;
      q.source = SourceSpec::gauss_markov(a, 1.0);
      GridPoint p;
      p.a = a;
      p.n = n;
      p.eps = eps;
      p.conv = bounds::converse_rate(q).rate_nats;
      p.ach = bounds::achievability_rate(q, 20000, 2026, 0).rate_nats;
      p.approx = bounds::gaussian_approx(q).rate_nats;
      grid.push_back(p);
    }
  }
  return grid;
}

// 6. Converse below achievability everywhere on the grid, and the normal
//    approximation inside the sandwich once widened by kappa ln(n)/n for a
//    single kappa <= 5.
Outcome check_sandwich(const std::vector<GridPoint>& grid) {
  bool ordered = true;
  double kappa = 0.0;
  std::string bad;
  for (const auto& p : grid) {
    if (p.n > 64) continue;  // extension points serve the scaling series
    if (p.conv > p.ach) {
      ordered = false;
      bad = " (violated at a=" + num(p.a, 2) + ", n=" + num(double(p.n), 3) +
            ", eps=" + num(p.eps, 2) + ")";
    }
    const double scale = static_cast<double>(p.n) / std::log(double(p.n));
    kappa = std::max({kappa, (p.conv - p.approx) * scale,
                      (p.approx - p.ach) * scale});
  }
  const bool ok = ordered && kappa <= 5.0;
  return {ok, "fitted kappa = " + num(kappa, 4) +
                  (ordered ? "" : ", converse above achievability" + bad)};
}

// 7. The n/ln(n)-scaled achievability-converse gap stays within a factor of
//    10 across n = 8..256 (boundedness proxy for the log(n)/n remainder).
Outcome check_gap_scaling(const std::vector<GridPoint>& grid) {
  double lo = 1e300, hi = 0.0;
  for (const auto& p : grid) {
    if (p.a != 0.5 || p.eps != 0.1) continue;
    const double s = (p.ach - p.conv) * static_cast<double>(p.n) /
                     std::log(static_cast<double>(p.n));
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const bool ok = lo > 0.0 && hi / lo <= 10.0;
  return {ok, "scaled gap in [" + num(lo, 4) + ", " + num(hi, 4) +
                  "], ratio " + num(hi / lo, 4)};
}

// 8. Random-code ground truth at n=8, d=0.25, eps=0.1: the achievability
//    codebook meets the target error within 3 binomial sigma, and no code at
//    the converse-maximal size beats the converse error floor.
Outcome check_codec() {
  bounds::BoundQuery q;
  q.n = 8;
  q.d = 0.25;
  q.epsilon = 0.1;
  q.source = SourceSpec::gauss_markov(0.0, 1.0);

  const auto ach = bounds::achievability_rate(q, 100000, 99, 0);
  const auto M_ach =
      static_cast<std::uint64_t>(std::ceil(std::exp(ach.log_M_nats)));

  simulate::CodecConfig cc;
  cc.source = q.source;
  cc.n = 8;
  cc.d = 0.25;
  cc.trials = 100000;
  cc.seed = 5;
  cc.M = M_ach;
  const auto r_ach = simulate::run_random_code(cc);
  const double sig_a =
      std::sqrt(std::max(r_ach.eps_hat * (1.0 - r_ach.eps_hat), 1e-9) /
                static_cast<double>(cc.trials));
  const bool ach_ok = r_ach.eps_hat <= 0.1 + 3.0 * sig_a;

  const auto conv = bounds::converse_rate(q);
  const auto M_conv = static_cast<std::uint64_t>(
      std::max(1.0, std::floor(std::exp(conv.log_M_nats))));
  const double eps_floor = bounds::converse_epsilon_at(
      q, std::log(static_cast<double>(M_conv)));
  cc.M = M_conv;
  const auto r_conv = simulate::run_random_code(cc);
  const double sig_c =
      std::sqrt(std::max(r_conv.eps_hat * (1.0 - r_conv.eps_hat), 1e-9) /
                static_cast<double>(cc.trials));
  const bool conv_ok = r_conv.eps_hat >= eps_floor - 3.0 * sig_c;

  return {ach_ok && conv_ok,
          "M_ach = " + num(double(M_ach), 6) + ": eps_hat " +
              num(r_ach.eps_hat, 4) + " vs 0.1 + 3 sigma = " +
              num(0.1 + 3.0 * sig_a, 4) + "; M_conv = " +
              num(double(M_conv), 6) + ": eps_hat " + num(r_conv.eps_hat, 4) +
              " vs floor - 3 sigma = " + num(eps_floor - 3.0 * sig_c, 4)};
}

// 9. Weighted noncentral chi-square CDF inversion against 1e6-sample Monte
//    Carlo on 20 random configurations, plus the normal quantile roundtrip.
Outcome check_quadform() {
  CounterRng cfg_rng(909, 1);
  double worst_z = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int terms = 3 + static_cast<int>(cfg_rng.next_double() * 6.0);
    std::vector<quadform::Term> ts;
    for (int j = 0; j < terms; ++j) {
      quadform::Term t;
      t.weight = 0.2 + 2.8 * cfg_rng.next_double();
      t.df = 1 + static_cast<int>(cfg_rng.next_double() * 4.0);
      const double u = cfg_rng.next_double();
      t.nc = u < 0.4 ? 0.0 : 2.5 * u * u;
      ts.push_back(t);
    }
    quadform::QuadFormCdf qf(ts);
    const double y = qf.mean() * (0.5 + 0.8 * cfg_rng.next_double());
    const double p = qf.cdf(y);

    const std::size_t N = 1000000;
    std::size_t hits = 0;
    for (std::size_t s = 0; s < N; ++s) {
      CounterRng rng(4044, stream_id(s, static_cast<std::uint64_t>(k)));
      double sum = 0.0;
      for (const auto& t : ts) {
        double g = rng.next_gauss() + std::sqrt(t.nc);
        double q2 = g * g;
        for (int i = 1; i < t.df; ++i) {
          g = rng.next_gauss();
          q2 += g * g;
        }
        sum += t.weight * q2;
      }
      if (sum <= y) ++hits;
    }
    const double phat = static_cast<double>(hits) / static_cast<double>(N);
    const double se = std::sqrt(
        std::max(phat * (1.0 - phat), 1e-12) / static_cast<double>(N));
    worst_z = std::max(worst_z, std::fabs(p - phat) / se);
  }

  // Roundtrip on the tail side, where the probability itself is a
  // representable double. (For x < 0 the complement saturates toward 1 and
  // any algorithm hits the ulp wall near 1e-9, so that side carries no
  // information about the quantile code.)
  double worst_rt = 0.0;
  for (int i = 1; i <= 99; ++i) {
    const double x = 6.0 * static_cast<double>(i) / 99.0;
    worst_rt = std::max(
        worst_rt, std::fabs(num::q_inverse(num::q_function(x)) - x));
  }
  for (double eps = 1e-12; eps < 0.6; eps *= 2.9) {
    worst_rt = std::max(
        worst_rt,
        std::fabs(num::q_function(num::q_inverse(eps)) - eps) / eps);
  }
  const bool ok = worst_z <= 4.0 && worst_rt <= 1e-12;
  return {ok, "worst MC z-score " + num(worst_z, 3) +
                  ", worst quantile roundtrip " + num(worst_rt, 3)};
}

// 10. Byte-identical rendered output for a fixed seed across thread counts.
Outcome check_determinism() {
  const char* configs[] = {
      R"({"source": {"kind": "gauss_markov", "a": 0.0},
          "task": {"subcommand": "achievability", "n": 8, "d": 0.25,
                   "epsilon": 0.3, "samples": 10000, "seed": 7}})",
      R"({"source": {"kind": "gauss_markov", "a": 0.5},
          "task": {"subcommand": "sweep", "n_list": [4, 8, 16], "d": 0.4,
                   "epsilon": 0.25, "samples": 10000, "seed": 11}})",
      R"({"source": {"kind": "gauss_markov", "a": 0.0},
          "task": {"subcommand": "simulate-codec", "n": 8, "d": 0.25,
                   "M": 64, "trials": 2000, "seed": 3}})",
  };
  for (const char* text : configs) {
    auto render_with = [&](int threads) {
      auto cfg = io::RunConfig::from_json_text(text);
      cfg.task.threads = threads;
      cfg.validate();
      std::vector<io::Row> rows;
      const std::string summary = io::execute(cfg, rows);
      return io::render(cfg, rows, summary);
    };
    if (render_with(1) != render_with(3))
      return {false, std::string("outputs differ for subcommand in ") + text};
  }
  return {true, "3 subcommands byte-identical at 1 vs 3 threads"};
}

}  // namespace

int main() {
  int failures = 0;
  std::vector<GridPoint> grid;

  auto report = [&](int index, const char* label, double budget_s,
                    const Outcome& out, double elapsed) {
    const bool in_budget = budget_s <= 0.0 || elapsed <= budget_s;
    const bool ok = out.ok && in_budget;
    if (!ok) ++failures;
    std::printf("%s criterion %d: %s [%s; %.1f s%s]\n", ok ? "PASS" : "FAIL",
                index, label, out.detail.c_str(), elapsed,
                in_budget ? "" : ", over budget");
    std::fflush(stdout);
  };
  auto timed = [&](int index, const char* label, double budget_s,
                   auto&& fn) {
    const double t0 = now_s();
    const Outcome out = fn();
    report(index, label, budget_s, out, now_s() - t0);
  };

  timed(1, "single-letter tilted information closed form vs quadrature", 10,
        check_tilted_oracle);
  timed(2, "mean/variance identities, analytic and Monte Carlo", 60,
        check_identities);
  timed(3, "eigenvalue range sandwich and trace", 300, check_eigen_sandwich);
  timed(4, "averaged-spectrum gap below C_L/n", 120, check_szego_bound);
  timed(5, "water-level concentration slope", 300, check_concentration);

  {
    const double t0 = now_s();
    grid = run_bound_grid();
    const double grid_s = now_s() - t0;
    const double t1 = now_s();
    const Outcome s = check_sandwich(grid);
    report(6, "converse/achievability sandwich with approximation inside",
           1800, s, grid_s + (now_s() - t1));
    const double t2 = now_s();
    const Outcome g = check_gap_scaling(grid);
    report(7, "scaled achievability-converse gap boundedness", 0, g,
           now_s() - t2);
  }

  timed(8, "random-code error vs analytic bounds", 600, check_codec);
  timed(9, "quadratic-form inversion vs Monte Carlo, quantile roundtrip", 300,
        check_quadform);
  timed(10, "byte-identical output across thread counts", 0,
        check_determinism);

  std::printf("acceptance summary: %d/10 passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
