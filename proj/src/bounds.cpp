#include "fbrd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "fbrd/errors.hpp"
#include "fbrd/normal.hpp"
#include "fbrd/parallel.hpp"
#include "fbrd/quadform.hpp"
#include "fbrd/rng.hpp"

namespace fbrd::bounds {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Prepared {
  spectrum::EigenSpectrum spec;
  waterfill::WaterfillSolution sol;
  waterfill::RateDispersionPoint pt;
  tilted::TiltedParams params;
};

Prepared prepare(const BoundQuery& q) {
  q.validate();
  Prepared p;
  p.spec = spectrum::eigen_spectrum(q.source, q.n, q.options);
  p.sol = waterfill::solve_water_level(p.spec, q.d);
  p.pt = waterfill::rate_dispersion(p.spec, p.sol);
  p.params = tilted::TiltedParams::from_solution(p.sol);
  return p;
}

quadform::QuadFormCdf tilted_quad(const tilted::TiltedParams& params) {
  const auto qf = tilted::tilted_quadform(params);
  std::vector<quadform::Term> terms;
  terms.reserve(qf.weights.size());
  for (double w : qf.weights) terms.push_back({w, 1, 0.0});
  return quadform::QuadFormCdf(std::move(terms), qf.shift);
}

struct GammaOpt {
  double value = 0.0;
  double gamma = 0.0;
};

// sup over gamma > 0 of sf(L + gamma) - exp(-gamma): coarse log-spaced grid,
// then golden-section between the bracketing neighbors. Ties keep the
// smaller gamma.
GammaOpt best_gamma(const quadform::QuadFormCdf& quad, double L,
                    double gamma_max) {
  auto h = [&](double g) { return quad.sf(L + g) - std::exp(-g); };

  constexpr int kGrid = 64;
  const double lg_lo = std::log(1e-6);
  const double lg_hi = std::log(gamma_max);
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  double gs[kGrid];
  for (int i = 0; i < kGrid; ++i) {
    gs[i] = std::exp(lg_lo + (lg_hi - lg_lo) * i / (kGrid - 1));
    const double v = h(gs[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }

  double a = gs[std::max(0, best - 1)];
  double b = gs[std::min(kGrid - 1, best + 1)];
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = h(c), fd = h(d);
  for (int it = 0; it < 200 && (b - a) > 1e-11 * std::max(1.0, b); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = h(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = h(d);
    }
  }
  const double g = 0.5 * (a + b);
  GammaOpt out{h(g), g};
  if (best_val > out.value) out = {best_val, gs[best]};
  return out;
}

}  // namespace

void BoundQuery::validate() const {
  source.validate();
  if (n < 1) throw DomainError("BoundQuery: n must be >= 1");
  if (!(d > 0.0) || !std::isfinite(d))
    throw DomainError("BoundQuery: d must be positive");
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw DomainError("BoundQuery: epsilon must lie in (0,1)");
}

const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::approx:
      return "approx";
    case BoundKind::converse:
      return "converse";
    case BoundKind::achievability:
      return "achievability";
    case BoundKind::achievability_formula:
      return "achievability_formula";
  }
  return "unknown";
}

double BoundResult::rate_bits() const { return rate_nats / kLn2; }
double BoundResult::log_M_bits() const { return log_M_nats / kLn2; }

double q_inverse(double epsilon) { return num::q_inverse(epsilon); }

BoundResult gaussian_approx(const BoundQuery& query) {
  const Prepared p = prepare(query);
  const double n = static_cast<double>(query.n);
  BoundResult res;
  res.kind = BoundKind::approx;
  res.n = query.n;
  res.theta = p.sol.theta;
  res.dispersion_nats2 = p.pt.dispersion_nats2;
  res.rate_nats = p.pt.rate_nats +
                  std::sqrt(p.pt.dispersion_nats2 / n) * q_inverse(query.epsilon);
  res.log_M_nats = res.rate_nats * n;
  return res;
}

double tilted_cdf(const spectrum::EigenSpectrum& spec,
                  const waterfill::WaterfillSolution& solution, double t) {
  if (solution.per_index.size() != spec.n)
    throw DomainError("tilted_cdf: solution does not match spectrum");
  const auto params = tilted::TiltedParams::from_solution(solution);
  return tilted_quad(params).cdf(t);
}

BoundResult converse_rate(const BoundQuery& query) {
  const Prepared p = prepare(query);
  const auto quad = tilted_quad(p.params);
  const double n = static_cast<double>(query.n);
  const double gamma_max = 20.0 * std::max(std::log(n), kLn2);

  auto G = [&](double L) { return best_gamma(quad, L, gamma_max); };

  BoundResult res;
  res.kind = BoundKind::converse;
  res.n = query.n;
  res.theta = p.sol.theta;
  res.dispersion_nats2 = p.pt.dispersion_nats2;

  const GammaOpt at_zero = G(0.0);
  if (at_zero.value < query.epsilon) {
    res.log_M_nats = 0.0;
    res.rate_nats = 0.0;
    res.trace.gamma_star = at_zero.gamma;
    res.trace.note = "trivial at this epsilon: every nonnegative rate passes";
  } else {
    double lo = 0.0;
    double hi = std::max(1.0, n * (p.pt.rate_nats + 1.0));
    int guard = 0;
    while (G(hi).value >= query.epsilon && ++guard < 64) {
      lo = hi;
      hi *= 2.0;
    }
    if (guard >= 64)
      throw ComputationError("converse_rate: upper bracket not found");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (G(mid).value >= query.epsilon)
        lo = mid;
      else
        hi = mid;
      if (hi - lo <= 1e-10 * std::max(1.0, hi)) break;
    }
    res.log_M_nats = lo;
    res.rate_nats = lo / n;
    res.trace.gamma_star = G(lo).gamma;
    res.trace.bracket_lo = lo;
    res.trace.bracket_hi = hi;
  }

  // Reference point: the fixed slack gamma = ln(n)/2, solved in closed
  // form from the survival function.
  const double gf = 0.5 * std::log(n);
  res.trace.gamma_fixed = gf;
  const double target = query.epsilon + std::exp(-gf);
  double L_fixed = 0.0;
  if (target < 1.0 && quad.sf(gf) >= target) {
    double lo = gf;
    double hi = quad.mean() + 20.0 * std::sqrt(quad.variance()) + 10.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (quad.sf(mid) >= target)
        lo = mid;
      else
        hi = mid;
      if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
    }
    L_fixed = std::max(0.0, lo - gf);
  }
  res.trace.rate_fixed_gamma = L_fixed / n;
  return res;
}

double converse_epsilon_at(const BoundQuery& query, double log_M_nats) {
  const Prepared p = prepare(query);
  const auto quad = tilted_quad(p.params);
  const double n = static_cast<double>(query.n);
  const double gamma_max = 20.0 * std::max(std::log(n), kLn2);
  return std::max(0.0, best_gamma(quad, log_M_nats, gamma_max).value);
}

double log_ball_probability(const std::vector<double>& x,
                            const waterfill::WaterfillSolution& solution) {
  if (x.size() != solution.per_index.size())
    throw DomainError("ball_probability: sample length mismatch");
  double thr = static_cast<double>(x.size()) * solution.d_target;
  std::vector<quadform::Term> terms;
  terms.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double nu = solution.per_index[i].nu;
    if (nu > 0.0)
      terms.push_back({nu, 1, x[i] * x[i] / nu});
    else
      thr -= x[i] * x[i];
  }
  if (terms.empty()) return thr >= 0.0 ? 0.0 : kNegInf;
  if (thr <= 0.0) return kNegInf;
  return quadform::QuadFormCdf(std::move(terms), 0.0).log_cdf(thr);
}

double ball_probability(const std::vector<double>& x,
                        const waterfill::WaterfillSolution& solution) {
  const double lp = log_ball_probability(x, solution);
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

struct BallProbEvaluator::Impl {
  waterfill::WaterfillSolution sol;
  std::optional<quadform::NoncentralFamily> family;
};

BallProbEvaluator::BallProbEvaluator(
    const waterfill::WaterfillSolution& solution)
    : impl_(std::make_unique<Impl>()) {
  impl_->sol = solution;
  const std::size_t n = solution.per_index.size();
  if (n < 4 || solution.active_count != n) return;
  std::vector<double> w(n);
  double wmin = std::numeric_limits<double>::infinity();
  double wmax = 0.0, s2 = 0.0, s4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = solution.per_index[i].nu;
    wmin = std::min(wmin, w[i]);
    wmax = std::max(wmax, w[i]);
    const double v = solution.per_index[i].sigma2;
    s2 += v;
    s4 += v * v;
  }
  // Equal weights merge into one exact term; the one-off path is already
  // cheap there.
  if (wmax - wmin <= 1e-12 * wmax) return;
  // Weighted-noncentrality mass is sum x_i^2 here: mean s2, variance 2 s4.
  // Six sigmas of headroom makes budget overruns vanishingly rare.
  const double budget = s2 + 6.0 * std::sqrt(2.0 * s4);
  impl_->family.emplace(std::move(w),
                        static_cast<double>(n) * solution.d_target, budget);
}

BallProbEvaluator::~BallProbEvaluator() = default;
BallProbEvaluator::BallProbEvaluator(BallProbEvaluator&&) noexcept = default;
BallProbEvaluator& BallProbEvaluator::operator=(BallProbEvaluator&&) noexcept =
    default;

double BallProbEvaluator::log_prob(const std::vector<double>& x) const {
  if (!impl_->family) return log_ball_probability(x, impl_->sol);
  const auto& per = impl_->sol.per_index;
  if (x.size() != per.size())
    throw DomainError("ball_probability: sample length mismatch");
  std::vector<double> nc(per.size());
  for (std::size_t i = 0; i < per.size(); ++i)
    nc[i] = x[i] * x[i] / per[i].nu;
  return impl_->family->log_cdf(nc);
}

BoundResult achievability_rate(const BoundQuery& query, std::size_t samples,
                               std::uint64_t seed, int threads) {
  if (samples < 10000)
    throw DomainError("achievability_rate: need at least 1e4 samples");
  const Prepared p = prepare(query);
  const std::size_t n = query.n;

  // Per-sample log ball probabilities are independent of M; cache them once.
  const BallProbEvaluator ball(p.sol);
  std::vector<double> lnP(samples);
  const auto ranges = chunk_ranges(samples, 256);
  parallel_chunks(ranges.size(), resolve_threads(static_cast<unsigned>(
                                     threads < 0 ? 0 : threads)),
                  [&](std::size_t ci) {
                    std::vector<double> x(n);
                    for (std::size_t s = ranges[ci].first;
                         s < ranges[ci].second; ++s) {
                      CounterRng rng(seed, stream_id(s, 0xACEu));
                      for (std::size_t i = 0; i < n; ++i)
                        x[i] = std::sqrt(p.sol.per_index[i].sigma2) *
                               rng.next_gauss();
                      lnP[s] = ball.log_prob(x);
                    }
                  });

  // Mean and 3-sigma error bar of exp(-exp(logM + lnP)) over the cache.
  auto objective = [&](double logM, double* stderr_out) {
    double mean = 0.0, m2 = 0.0;
    std::size_t count = 0;
    for (double lp : lnP) {
      double f = 1.0;
      if (lp != kNegInf) {
        const double e = logM + lp;
        f = e > 50.0 ? 0.0 : std::exp(-std::exp(e));
      }
      ++count;
      const double delta = f - mean;
      mean += delta / static_cast<double>(count);
      m2 += delta * (f - mean);
    }
    const double var = m2 / static_cast<double>(samples - 1);
    *stderr_out = std::sqrt(var / static_cast<double>(samples));
    return mean;
  };
  auto feasible = [&](double logM, double* se) {
    return objective(logM, se) + 3.0 * (*se) <= query.epsilon;
  };

  double se = 0.0;
  BoundResult res;
  res.kind = BoundKind::achievability;
  res.n = query.n;
  res.theta = p.sol.theta;
  res.dispersion_nats2 = p.pt.dispersion_nats2;
  res.trace.samples = samples;
  res.trace.seed = seed;

  if (feasible(0.0, &se)) {
    res.log_M_nats = 0.0;
    res.rate_nats = 0.0;
    res.mc_stderr = se;
    res.trace.note = "a single codeword already meets epsilon";
    return res;
  }

  double lo = 0.0;
  double hi = static_cast<double>(n) * p.pt.rate_nats +
              std::sqrt(static_cast<double>(n) * p.pt.dispersion_nats2) * 5.0 +
              std::log(static_cast<double>(n) + 1.0) + 10.0;
  int guard = 0;
  while (!feasible(hi, &se) && ++guard < 64) hi *= 2.0;
  if (guard >= 64) {
    double se0 = 0.0;
    const double obj = objective(hi, &se0);
    throw ComputationError(
        "achievability_rate: insufficient samples to certify epsilon (mean " +
        std::to_string(obj) + ", 3*stderr " + std::to_string(3.0 * se0) +
        "); roughly " +
        std::to_string(static_cast<std::size_t>(
            9.0 * se0 * se0 * samples /
            std::max(1e-12, (query.epsilon - obj) * (query.epsilon - obj)))) +
        " samples required");
  }
  res.trace.bracket_lo = lo;
  res.trace.bracket_hi = hi;

  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid, &se))
      hi = mid;
    else
      lo = mid;
  }
  feasible(hi, &se);  // refresh the error bar at the returned point
  res.log_M_nats = hi;
  res.rate_nats = hi / static_cast<double>(n);
  res.mc_stderr = se;
  return res;
}

BoundResult achievability_formula_rate(const BoundQuery& query,
                                       const FittedConstants& constants) {
  const Prepared p = prepare(query);
  if (query.n < 2)
    throw DomainError(
        "achievability_formula_rate: blocklength too small for formula");
  const double n = static_cast<double>(query.n);
  const double m_n = tilted::tilted_berry_esseen(p.params).m;
  const double eps_n =
      query.epsilon - (m_n + 1.0 + constants.k) / std::sqrt(n);
  if (!(eps_n > 0.0) || !(eps_n < 1.0))
    throw DomainError(
        "achievability_formula_rate: blocklength too small for formula "
        "(effective epsilon " +
        std::to_string(eps_n) + " outside (0,1))");

  const double rate_b = p.pt.rate_bits();
  const double disp_b2 = p.pt.dispersion_bits2();
  const double log2n = std::log2(n);
  const double log2M = n * rate_b + std::sqrt(n * disp_b2) * q_inverse(eps_n) +
                       std::log2(0.5 * log2n) + constants.C0 * log2n +
                       constants.c_log2;

  BoundResult res;
  res.kind = BoundKind::achievability_formula;
  res.n = query.n;
  res.theta = p.sol.theta;
  res.dispersion_nats2 = p.pt.dispersion_nats2;
  res.log_M_nats = log2M * kLn2;
  res.rate_nats = res.log_M_nats / n;
  res.trace.note = "closed-form rate with fitted constants";
  return res;
}

}  // namespace fbrd::bounds
