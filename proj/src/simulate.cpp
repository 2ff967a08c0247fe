#include "fbrd/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbrd/errors.hpp"
#include "fbrd/parallel.hpp"
#include "fbrd/rng.hpp"
#include "fbrd/tilted.hpp"

namespace fbrd::simulate {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kZ95 = 1.959963984540054;
// Below this the ball probability is indistinguishable from a double
// underflow; such samples are tallied separately.
constexpr double kLnTiny = -690.7755278982138;

void wilson_interval(std::size_t failures, std::size_t trials,
                     CodecResult& out) {
  const double t = static_cast<double>(trials);
  const double p = static_cast<double>(failures) / t;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / t;
  const double center = (p + z2 / (2.0 * t)) / denom;
  const double half =
      (kZ95 / denom) * std::sqrt(p * (1.0 - p) / t + z2 / (4.0 * t * t));
  out.eps_hat = p;
  out.mc_stderr = std::sqrt(p * (1.0 - p) / t);
  // Containment of p can be lost to rounding at the extremes (at p = 0 the
  // center and half-width cancel exactly), so clamp against it too.
  out.wilson_lo = std::min(p, std::max(0.0, center - half));
  out.wilson_hi = std::max(p, std::min(1.0, center + half));
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double xb = 0.0, yb = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    xb += x[i];
    yb += y[i];
  }
  xb /= static_cast<double>(m);
  yb /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xb) * (x[i] - xb);
    sxy += (x[i] - xb) * (y[i] - yb);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

void CodecConfig::validate() const {
  source.validate();
  if (n < 1) throw DomainError("CodecConfig: n must be >= 1");
  if (M < 1) throw DomainError("CodecConfig: M must be >= 1");
  if (trials < 1000) throw DomainError("CodecConfig: need at least 1e3 trials");
  if (!(d >= 0.0) || !std::isfinite(d))
    throw DomainError("CodecConfig: d must be finite and nonnegative");
  if (static_cast<double>(n) * static_cast<double>(M) >
      static_cast<double>(std::uint64_t{1} << 26))
    throw DomainError("CodecConfig: n * M exceeds the 2^26 work cap");
}

CodecResult run_random_code(const CodecConfig& config) {
  config.validate();
  CodecResult res;
  res.trials = config.trials;

  if (config.d == 0.0) {
    // Continuous codewords never hit a block exactly.
    res.failures = config.trials;
    wilson_interval(res.failures, res.trials, res);
    return res;
  }

  const auto spec = spectrum::eigen_spectrum(config.source, config.n);
  const std::size_t n = config.n;

  // At or above the average variance the water level saturates: the optimal
  // reproduction collapses to the zero codeword (rate zero).
  std::vector<double> sigma(n), nu_sd(n, 0.0);
  bool degenerate = true;
  if (config.d < spec.average_variance()) {
    const auto sol = waterfill::solve_water_level(spec, config.d);
    for (std::size_t i = 0; i < n; ++i) {
      sigma[i] = std::sqrt(sol.per_index[i].sigma2);
      nu_sd[i] = std::sqrt(sol.per_index[i].nu);
      if (sol.per_index[i].nu > 0.0) degenerate = false;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) sigma[i] = std::sqrt(spec.eigenvalues[i]);
  }

  const double budget = static_cast<double>(n) * config.d;
  const auto ranges = chunk_ranges(config.trials, 1024);
  std::vector<std::size_t> chunk_failures(ranges.size(), 0);

  parallel_chunks(
      ranges.size(),
      resolve_threads(
          static_cast<unsigned>(config.threads < 0 ? 0 : config.threads)),
      [&](std::size_t ci) {
        std::vector<double> x(n);
        std::size_t bad = 0;
        for (std::size_t t = ranges[ci].first; t < ranges[ci].second; ++t) {
          CounterRng src_rng(config.seed, stream_id(t, 0));
          for (std::size_t i = 0; i < n; ++i)
            x[i] = sigma[i] * src_rng.next_gauss();

          bool hit = false;
          if (degenerate) {
            // Every codeword is the zero block; one distance decides.
            double dist = 0.0;
            for (std::size_t i = 0; i < n; ++i) dist += x[i] * x[i];
            hit = dist <= budget;
          } else {
            for (std::uint64_t j = 0; j < config.M && !hit; ++j) {
              CounterRng cw(config.seed, stream_id(t, j + 1));
              double dist = 0.0;
              for (std::size_t i = 0; i < n; ++i) {
                const double diff = x[i] - nu_sd[i] * cw.next_gauss();
                dist += diff * diff;
              }
              hit = dist <= budget;
            }
          }
          if (!hit) ++bad;
        }
        chunk_failures[ci] = bad;
      });

  for (std::size_t c : chunk_failures) res.failures += c;
  wilson_interval(res.failures, res.trials, res);
  return res;
}

void AepConfig::validate() const {
  source.validate();
  if (!(d > 0.0) || !std::isfinite(d))
    throw DomainError("AepConfig: d must be positive");
  if (n_list.empty()) throw DomainError("AepConfig: n_list is empty");
  for (std::size_t n : n_list)
    if (n < 1) throw DomainError("AepConfig: blocklengths must be >= 1");
  if (samples < 10000)
    throw DomainError("AepConfig: need at least 1e4 samples per blocklength");
}

bounds::FittedConstants AepReport::fitted() const {
  return {C0, c_nats / kLn2, K};
}

AepReport aep_experiment(const AepConfig& config) {
  config.validate();
  AepReport rep;

  const unsigned threads = resolve_threads(
      static_cast<unsigned>(config.threads < 0 ? 0 : config.threads));
  std::vector<std::vector<double>> all_gaps(config.n_list.size());
  std::vector<std::size_t> underflows(config.n_list.size(), 0);

  for (std::size_t k = 0; k < config.n_list.size(); ++k) {
    const std::size_t n = config.n_list[k];
    const auto spec = spectrum::eigen_spectrum(config.source, n);
    const auto sol = waterfill::solve_water_level(spec, config.d);
    const auto params = tilted::TiltedParams::from_solution(sol);
    const bounds::BallProbEvaluator ball(sol);

    auto& gaps = all_gaps[k];
    gaps.assign(config.samples, 0.0);
    const auto ranges = chunk_ranges(config.samples, 256);
    parallel_chunks(ranges.size(), threads, [&](std::size_t ci) {
      std::vector<double> x(n);
      for (std::size_t s = ranges[ci].first; s < ranges[ci].second; ++s) {
        CounterRng rng(config.seed, stream_id(s, 0xAE1u, n));
        for (std::size_t i = 0; i < n; ++i)
          x[i] = std::sqrt(sol.per_index[i].sigma2) * rng.next_gauss();
        const double info = tilted::tilted_info(x, params);
        const double lp = ball.log_prob(x);
        gaps[s] = lp >= kLnTiny ? -lp - info
                                : std::numeric_limits<double>::quiet_NaN();
      }
    });

    std::size_t uf = 0;
    for (double g : gaps)
      if (std::isnan(g)) ++uf;
    underflows[k] = uf;

    AepRow row;
    row.n = n;
    row.theta = sol.theta;
    row.underflow = uf;
    rep.rows.push_back(row);
  }

  // Empirical (1 - 1/sqrt(n)) quantiles of the finite gaps.
  std::vector<double> lnn, q;
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    auto finite = all_gaps[k];
    finite.erase(std::remove_if(finite.begin(), finite.end(),
                                [](double g) { return std::isnan(g); }),
                 finite.end());
    if (finite.empty())
      throw ComputationError(
          "aep_experiment: every ball probability underflowed at n = " +
          std::to_string(rep.rows[k].n));
    std::sort(finite.begin(), finite.end());
    const double level =
        1.0 - 1.0 / std::sqrt(static_cast<double>(rep.rows[k].n));
    const auto m = static_cast<double>(finite.size());
    auto idx = static_cast<std::size_t>(std::ceil(level * m));
    idx = std::min(finite.size() - 1, idx == 0 ? 0 : idx - 1);
    rep.rows[k].gap_quantile = finite[idx];
    rep.rows[k].gap_max = finite.back();
    lnn.push_back(std::log(static_cast<double>(rep.rows[k].n)));
    q.push_back(rep.rows[k].gap_quantile);
  }

  rep.C0 = std::max(0.0, ls_slope(lnn, q));
  rep.c_nats = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < q.size(); ++k)
    rep.c_nats = std::max(rep.c_nats, q[k] - rep.C0 * lnn[k]);

  rep.K = 0.0;
  rep.candidate_K = 0.0;
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const double bound = rep.C0 * lnn[k] + rep.c_nats;
    const double cand = config.candidate_C0 * lnn[k] + config.candidate_c_nats;
    std::size_t viol = underflows[k];  // underflowed gaps are huge
    std::size_t cand_viol = underflows[k];
    for (double g : all_gaps[k]) {
      if (std::isnan(g)) continue;
      if (g > bound) ++viol;
      if (g > cand) ++cand_viol;
    }
    auto& row = rep.rows[k];
    row.violation_fraction =
        static_cast<double>(viol) / static_cast<double>(config.samples);
    row.candidate_violation =
        static_cast<double>(cand_viol) / static_cast<double>(config.samples);
    row.residual = row.gap_quantile - bound;
    const double root_n = std::sqrt(static_cast<double>(row.n));
    rep.K = std::max(rep.K, root_n * row.violation_fraction);
    rep.candidate_K = std::max(rep.candidate_K, root_n * row.candidate_violation);
  }
  return rep;
}

void SweepConfig::validate() const {
  source.validate();
  if (!(d > 0.0) || !std::isfinite(d))
    throw DomainError("SweepConfig: d must be positive");
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw DomainError("SweepConfig: epsilon must lie in (0,1)");
  if (n_list.size() < 3)
    throw DomainError("SweepConfig: n_list needs at least 3 entries");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw DomainError("SweepConfig: n_list must be strictly ascending");
  if (samples < 10000)
    throw DomainError("SweepConfig: need at least 1e4 samples per point");
}

SweepReport convergence_sweep(const SweepConfig& config) {
  config.validate();
  SweepReport rep;
  rep.limit = waterfill::limiting_point(config.source, config.d);

  std::vector<double> ns, gap_theta, gap_rate, gap_disp;
  for (std::size_t n : config.n_list) {
    const auto spec = spectrum::eigen_spectrum(config.source, n);
    const auto sol = waterfill::solve_water_level(spec, config.d);
    const auto pt = waterfill::rate_dispersion(spec, sol);

    bounds::BoundQuery query;
    query.n = n;
    query.d = config.d;
    query.epsilon = config.epsilon;
    query.source = config.source;

    const auto ap = bounds::gaussian_approx(query);
    const auto cv = bounds::converse_rate(query);
    const auto ac = bounds::achievability_rate(query, config.samples,
                                               config.seed, config.threads);

    SweepRow row;
    row.n = n;
    row.theta_n = sol.theta;
    row.rate_n = pt.rate_nats;
    row.dispersion_n = pt.dispersion_nats2;
    row.approx_rate = ap.rate_nats;
    row.converse_rate = cv.rate_nats;
    row.achievability_rate = ac.rate_nats;
    row.mc_stderr = ac.mc_stderr;
    if (n >= 2)
      row.gap_scaled = (ac.rate_nats - cv.rate_nats) *
                       static_cast<double>(n) /
                       std::log(static_cast<double>(n));
    rep.rows.push_back(row);

    ns.push_back(static_cast<double>(n));
    gap_theta.push_back(std::abs(sol.theta - rep.limit.theta_star));
    gap_rate.push_back(std::abs(pt.rate_nats - rep.limit.rate_limit));
    gap_disp.push_back(std::abs(pt.dispersion_nats2 - rep.limit.dispersion_limit));
  }

  rep.slope_theta = waterfill::loglog_slope(ns, gap_theta);
  rep.slope_rate = waterfill::loglog_slope(ns, gap_rate);
  rep.slope_dispersion = waterfill::loglog_slope(ns, gap_disp);

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  bool any = false;
  for (const auto& row : rep.rows) {
    if (row.n < 2) continue;
    any = true;
    lo = std::min(lo, row.gap_scaled);
    hi = std::max(hi, row.gap_scaled);
  }
  if (!any)
    rep.gap_ratio = 0.0;
  else if (lo > 0.0)
    rep.gap_ratio = hi / lo;
  else
    rep.gap_ratio = std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace fbrd::simulate
