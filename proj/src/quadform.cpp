#include "fbrd/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "fbrd/errors.hpp"
#include "fbrd/gamma.hpp"
#include "fbrd/normal.hpp"
#include "fbrd/quadrature.hpp"

namespace fbrd::quadform {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogHalf2Pi = 0.9189385332046727;  // ln(2 pi)/2

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// ln(Phi(hi) - Phi(lo)) for hi >= lo, stable in both tails.
double log_normal_interval(double lo, double hi) {
  if (hi + lo > 0.0) {
    std::swap(lo, hi);
    lo = -lo;
    hi = -hi;
  }
  const double la = num::log_normal_cdf(hi);
  const double lb = num::log_normal_cdf(lo);
  const double diff = lb - la;
  if (diff >= 0.0) return kNegInf;
  return la + std::log1p(-std::exp(diff));
}

// P[ChiSquare(2*df2, nc) <= 2*y2] through the Poisson mixture of central
// chi-squares.
double noncentral_mixture_cdf(double df2, double nc, double y2) {
  const double hl = 0.5 * nc;
  double logw = -hl;
  double acc = 0.0;
  double mass = 0.0;
  for (int j = 0; j < 200000; ++j) {
    const double pw = std::exp(logw);
    const double g = num::gammp(df2 + j, y2);
    acc += pw * g;
    mass += pw;
    if (1.0 - mass <= 1e-16) return acc;
    if (j > hl && pw * g < 1e-18) return acc;
    logw += std::log(hl) - std::log1p(j);
  }
  throw ComputationError("quadform: noncentral mixture did not converge");
}

double noncentral_mixture_log_cdf(double df2, double nc, double y2) {
  const double hl = 0.5 * nc;
  double logw = -hl;
  double acc = kNegInf;
  for (int j = 0; j < 200000; ++j) {
    const double t = logw + num::log_gammp(df2 + j, y2);
    acc = logaddexp(acc, t);
    if (j > hl && t < acc - 45.0) return acc;
    logw += std::log(hl) - std::log1p(j);
  }
  throw ComputationError("quadform: noncentral mixture did not converge");
}

// Lugannani-Rice lower-tail approximation for a positive quadratic form.
double saddle_log_cdf_terms(const std::vector<Term>& terms, double y) {
  if (y <= 0.0) return kNegInf;
  auto K = [&](double s) {
    double acc = 0.0;
    for (const auto& t : terms) {
      const double r = 1.0 - 2.0 * s * t.weight;
      acc += -0.5 * t.df * std::log(r) + t.nc * s * t.weight / r;
    }
    return acc;
  };
  auto K1 = [&](double s) {
    double acc = 0.0;
    for (const auto& t : terms) {
      const double r = 1.0 - 2.0 * s * t.weight;
      acc += t.df * t.weight / r + t.nc * t.weight / (r * r);
    }
    return acc;
  };
  auto K2 = [&](double s) {
    double acc = 0.0;
    for (const auto& t : terms) {
      const double w2 = t.weight * t.weight;
      const double r = 1.0 - 2.0 * s * t.weight;
      acc += 2.0 * t.df * w2 / (r * r) + 4.0 * t.nc * w2 / (r * r * r);
    }
    return acc;
  };

  // Lower tail: K'(s) = y has a unique root s < 0 when y < mean.
  double lo = -1.0, hi = 0.0;
  for (int it = 0; it < 400 && K1(lo) > y; ++it) lo *= 4.0;
  if (K1(lo) > y)
    throw ComputationError("quadform: saddlepoint bracket failed");
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double g = K1(s) - y;
    if (g > 0.0)
      hi = s;
    else
      lo = s;
    const double step = g / K2(s);
    double next = s - step;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-14 * std::max(1.0, std::abs(s))) {
      s = next;
      break;
    }
    s = next;
  }

  const double rate = s * y - K(s);  // >= 0 by convex duality
  const double w = -std::sqrt(std::max(0.0, 2.0 * rate));
  const double v = s * std::sqrt(K2(s));
  if (w == 0.0 || v == 0.0)
    throw ComputationError("quadform: saddlepoint degenerate at the mean");
  const double la = num::log_normal_cdf(w);
  const double r =
      (1.0 / w - 1.0 / v) * std::exp(-0.5 * w * w - kLogHalf2Pi - la);
  if (1.0 + r <= 0.0)
    throw ComputationError("quadform: saddlepoint correction overwhelmed");
  return la + std::log1p(r);
}

struct Unit {
  double weight;
  double delta;  // sqrt(nc)
};

// log P[ sum_{k>=idx} w_k (Z_k + delta_k)^2 <= y ] by conditioning on Z_idx.
// The substitution z = -delta + b sin(psi) removes the sqrt-type endpoint
// behaviour of the remaining-budget factor, restoring spectral convergence.
double nested_units(const std::vector<Unit>& units, std::size_t idx, double y,
                    int npts) {
  if (y <= 0.0) return kNegInf;
  const Unit& un = units[idx];
  const double b = std::sqrt(y / un.weight);
  if (idx + 1 == units.size())
    return log_normal_interval(-b - un.delta, b - un.delta);

  const auto& gl = num::gauss_legendre(npts);
  const double half_pi = 0.5 * M_PI;
  double acc = kNegInf;
  for (std::size_t i = 0; i < gl.x.size(); ++i) {
    const double psi = half_pi * gl.x[i];
    const double c = std::cos(psi);
    const double z = -un.delta + b * std::sin(psi);
    const double rest = nested_units(units, idx + 1, y * c * c, npts);
    if (rest == kNegInf) continue;
    const double term = std::log(gl.w[i] * b * half_pi * c) -
                        0.5 * z * z - kLogHalf2Pi + rest;
    acc = logaddexp(acc, term);
  }
  return acc;
}

}  // namespace

QuadFormCdf::QuadFormCdf(std::vector<Term> terms, double shift, double abs_tol)
    : shift_(shift), tol_(abs_tol) {
  if (!(abs_tol > 0.0)) throw DomainError("QuadFormCdf: tolerance must be > 0");
  if (!std::isfinite(shift)) throw DomainError("QuadFormCdf: shift not finite");
  for (const auto& t : terms) {
    if (!(t.weight > 0.0) || !std::isfinite(t.weight))
      throw DomainError("QuadFormCdf: weights must be positive and finite");
    if (t.df < 1) throw DomainError("QuadFormCdf: df must be >= 1");
    if (t.nc < 0.0 || !std::isfinite(t.nc))
      throw DomainError("QuadFormCdf: noncentrality must be >= 0 and finite");
  }
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.weight > b.weight; });
  for (const auto& t : terms) {
    if (!terms_.empty() &&
        terms_.back().weight - t.weight <= 1e-12 * terms_.back().weight) {
      terms_.back().df += t.df;
      terms_.back().nc += t.nc;
    } else {
      terms_.push_back(t);
    }
  }
  for (const auto& t : terms_) {
    total_df_ += t.df;
    amp_rate_ += (t.df + t.nc) * t.weight;
  }
  if (terms_.empty()) {
    kind_ = Kind::degenerate;
    method_ = "degenerate";
  } else if (terms_.size() == 1) {
    kind_ = Kind::single;
    method_ = "exact";
  } else if (total_df_ <= 3) {
    kind_ = Kind::nested;
    method_ = "nested";
  } else {
    kind_ = Kind::imhof;
    method_ = "imhof";
  }
}

double QuadFormCdf::mean() const { return shift_ + amp_rate_; }

double QuadFormCdf::variance() const {
  double v = 0.0;
  for (const auto& t : terms_)
    v += (2.0 * t.df + 4.0 * t.nc) * t.weight * t.weight;
  return v;
}

double QuadFormCdf::single_cdf(double y) const {
  if (y <= 0.0) return 0.0;
  const Term& t = terms_.front();
  const double y2 = 0.5 * y / t.weight;
  if (t.nc == 0.0) return num::gammp(0.5 * t.df, y2);
  if (t.df == 1) {
    const double b = std::sqrt(y / t.weight);
    const double delta = std::sqrt(t.nc);
    return num::normal_cdf(b - delta) - num::normal_cdf(-b - delta);
  }
  return noncentral_mixture_cdf(0.5 * t.df, t.nc, y2);
}

double QuadFormCdf::single_log_cdf(double y) const {
  if (y <= 0.0) return kNegInf;
  const Term& t = terms_.front();
  const double y2 = 0.5 * y / t.weight;
  if (t.nc == 0.0) return num::log_gammp(0.5 * t.df, y2);
  if (t.df == 1) {
    const double b = std::sqrt(y / t.weight);
    const double delta = std::sqrt(t.nc);
    return log_normal_interval(-b - delta, b - delta);
  }
  return noncentral_mixture_log_cdf(0.5 * t.df, t.nc, y2);
}

double QuadFormCdf::nested_log_cdf(double y) const {
  if (y <= 0.0) return kNegInf;
  std::vector<Unit> units;
  units.reserve(total_df_);
  for (const auto& t : terms_) {
    // Noncentrality can sit on a single unit of the split.
    units.push_back({t.weight, std::sqrt(t.nc)});
    for (int k = 1; k < t.df; ++k) units.push_back({t.weight, 0.0});
  }
  double prev = nested_units(units, 0, y, 120);
  for (int npts = 240; npts <= 1920; npts *= 2) {
    const double cur = nested_units(units, 0, y, npts);
    if (std::abs(cur - prev) <= 1e-9 * std::max(1.0, std::abs(cur)))
      return cur;
    prev = cur;
  }
  throw ComputationError("quadform: nested quadrature did not settle");
}

void QuadFormCdf::build_grid(double kappa, double y_ref) const {
  // Truncation point: |integrand| <= u^{-1-K_S} prod_S w^{-df/2} for any
  // subset S of the terms, so take the best prefix of the descending weights.
  double cum_k = 0.0, cum_lnw = 0.0;
  double ln_u = std::numeric_limits<double>::infinity();
  const double tail_budget = 0.5 * tol_ * M_PI;
  for (const auto& t : terms_) {
    cum_k += 0.5 * t.df;
    cum_lnw += 0.5 * t.df * std::log(t.weight);
    if (cum_k >= 2.0)
      ln_u = std::min(ln_u, (-std::log(cum_k * tail_budget) - cum_lnw) / cum_k);
  }
  double U = std::exp(ln_u);

  // Bound on the phase rate |beta'| * 2 and on the amplitude-decay rate;
  // every term's contribution dies off as its own (w u)^2 saturates.
  auto decay = [&](double u) {
    double r = 0.0;
    for (const auto& t : terms_) {
      const double wu = t.weight * u;
      r += (t.df + t.nc) * t.weight / (1.0 + wu * wu);
    }
    return r;
  };
  auto ln_env = [&](double u) {
    double lr = 0.0;
    for (const auto& t : terms_) {
      const double wu2 = t.weight * u * t.weight * u;
      lr += 0.25 * t.df * std::log1p(wu2) + 0.5 * t.nc * wu2 / (1.0 + wu2);
    }
    return -lr - std::log(M_PI * u);
  };
  // Once the threshold ramp dominates the phase rate, van der Corput gives
  // |int_U^inf| <= 4 env(U) / (y - decay(U)), usually a much earlier cut
  // than the power-law rule.
  if (y_ref > 0.0) {
    auto osc_ok = [&](double u) {
      const double dc = decay(u);
      if (dc > 0.5 * y_ref) return false;
      return std::log(4.0 / (y_ref - dc)) + ln_env(u) <= std::log(0.5 * tol_);
    };
    if (osc_ok(U)) {
      double lo = std::min(1e-3, U), hi = U;
      if (osc_ok(lo)) {
        hi = lo;
      } else {
        for (int it = 0; it < 100 && hi - lo > 1e-3 * hi; ++it) {
          const double mid = std::sqrt(lo * hi);
          if (osc_ok(mid))
            hi = mid;
          else
            lo = mid;
        }
      }
      U = hi;
    }
  }

  // Panel widths follow the local rate bound; at u = 0 this is the uniform
  // quarter-period rule, and panels widen as the per-term rates saturate.
  const double kconst = kappa - 2.0 * amp_rate_;
  std::vector<double> starts, halves;
  double a = 0.0;
  while (a < U) {
    const double width =
        std::min(U - a, M_PI / (2.0 * (kconst + 2.0 * decay(a))));
    if (a + width == a) break;
    starts.push_back(a);
    halves.push_back(0.5 * width);
    a += width;
    if (starts.size() > 266000)
      throw ComputationError("quadform: inversion grid budget exceeded");
  }

  const auto& gl = num::gauss_legendre(15);
  const std::size_t total = starts.size() * gl.x.size();
  u_.assign(total, 0.0);
  beta0_.assign(total, 0.0);
  weff_.assign(total, 0.0);
  std::size_t idx = 0;
  for (std::size_t p = 0; p < starts.size(); ++p) {
    for (std::size_t i = 0; i < gl.x.size(); ++i, ++idx) {
      const double u = starts[p] + halves[p] * (1.0 + gl.x[i]);
      double beta = 0.0, lnrho = 0.0;
      for (const auto& t : terms_) {
        const double wu = t.weight * u;
        const double wu2 = wu * wu;
        beta += 0.5 * t.df * std::atan(wu) + 0.5 * t.nc * wu / (1.0 + wu2);
        lnrho += 0.25 * t.df * std::log1p(wu2) +
                 0.5 * t.nc * wu2 / (1.0 + wu2);
      }
      u_[idx] = u;
      beta0_[idx] = beta;
      weff_[idx] = gl.w[i] * halves[p] * std::exp(-lnrho) / (u * M_PI);
    }
  }
  kappa_built_ = kappa;
  y_osc_built_ = y_ref;
}

double QuadFormCdf::imhof_cdf(double y) const {
  const double kappa = 0.5 * std::abs(y) + 2.0 * amp_rate_;
  // The cache covers any query with a smaller rate bound whose threshold is
  // no smaller than the ramp the truncation was certified against.
  if (kappa > kappa_built_ || std::abs(y) < y_osc_built_)
    build_grid(1.5 * kappa, 0.5 * std::abs(y));
  double s = 0.0;
  for (std::size_t i = 0; i < u_.size(); ++i)
    s += weff_[i] * std::sin(beta0_[i] - 0.5 * y * u_[i]);
  return std::clamp(0.5 - s, 0.0, 1.0);
}

double QuadFormCdf::saddle_log_cdf(double y) const {
  return saddle_log_cdf_terms(terms_, y);
}

double QuadFormCdf::cdf(double x) const {
  const double y = x - shift_;
  switch (kind_) {
    case Kind::degenerate:
      return y >= 0.0 ? 1.0 : 0.0;
    case Kind::single:
      return single_cdf(y);
    case Kind::nested: {
      const double lp = nested_log_cdf(y);
      return lp == kNegInf ? 0.0 : std::exp(lp);
    }
    case Kind::imhof: {
      if (y <= 0.0) return 0.0;
      // Deep lower tail goes straight to the saddlepoint; the left tail of a
      // positive quadratic form is sub-Gaussian, so z < -8 guarantees the
      // probability is far below the inversion tolerance.
      const double z = (y - amp_rate_) / std::sqrt(variance());
      if (z < -8.0) {
        const double lp = saddle_log_cdf(y);
        if (lp < std::log(1e-9)) return std::exp(lp);
      }
      return imhof_cdf(y);
    }
  }
  return 0.0;
}

double QuadFormCdf::log_cdf(double x) const {
  const double y = x - shift_;
  switch (kind_) {
    case Kind::degenerate:
      return y >= 0.0 ? 0.0 : kNegInf;
    case Kind::single:
      return single_log_cdf(y);
    case Kind::nested:
      return nested_log_cdf(y);
    case Kind::imhof: {
      if (y <= 0.0) return kNegInf;
      const double z = (y - amp_rate_) / std::sqrt(variance());
      if (z < -8.0) {
        const double lp = saddle_log_cdf(y);
        if (lp < std::log(1e-4)) return lp;
      }
      const double p = imhof_cdf(y);
      if (p >= 1e-4) return std::log(p);
      return saddle_log_cdf(y);
    }
  }
  return kNegInf;
}

NoncentralFamily::NoncentralFamily(std::vector<double> weights,
                                   double threshold, double nc_weight_budget,
                                   double abs_tol)
    : w_(std::move(weights)),
      y_(threshold),
      budget_(nc_weight_budget),
      tol_(abs_tol) {
  if (w_.size() < 4)
    throw DomainError("NoncentralFamily: needs at least 4 weights");
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw DomainError("NoncentralFamily: threshold must be positive");
  if (!(nc_weight_budget >= 0.0) || !std::isfinite(nc_weight_budget))
    throw DomainError("NoncentralFamily: budget must be >= 0 and finite");
  if (!(abs_tol > 0.0))
    throw DomainError("NoncentralFamily: tolerance must be > 0");
  double wmin = std::numeric_limits<double>::infinity();
  for (double w : w_) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw DomainError("NoncentralFamily: weights must be positive");
    sum_w_ += w;
    wmin = std::min(wmin, w);
  }

  // Truncation by the central-amplitude prefix rule on descending weights;
  // the noncentral factors only add decay, so the cut holds for every query.
  std::vector<double> desc(w_);
  std::sort(desc.begin(), desc.end(), std::greater<double>());
  double cum_k = 0.0, cum_lnw = 0.0;
  double ln_u = std::numeric_limits<double>::infinity();
  const double tail_budget = 0.5 * tol_ * M_PI;
  for (double w : desc) {
    cum_k += 0.5;
    cum_lnw += 0.5 * std::log(w);
    if (cum_k >= 2.0)
      ln_u = std::min(ln_u, (-std::log(cum_k * tail_budget) - cum_lnw) / cum_k);
  }
  double U = std::exp(ln_u);

  // Phase/amplitude rate bound, uniform over admissible queries: the budget
  // term charges the whole noncentrality mass to the slowest-decaying weight.
  const double wmin2 = wmin * wmin;
  auto decay = [&](double u) {
    double r = 0.0;
    for (double w : w_) r += w / (1.0 + w * w * u * u);
    return r + budget_ / (1.0 + wmin2 * u * u);
  };
  // Oscillation cut as in QuadFormCdf::build_grid, with the central envelope
  // (noncentral factors only shrink it).
  auto osc_ok = [&](double u) {
    const double dc = decay(u);
    if (dc > 0.5 * y_) return false;
    double lr = 0.0;
    for (double w : w_) lr += 0.25 * std::log1p(w * w * u * u);
    return std::log(4.0 / (y_ - dc)) - lr - std::log(M_PI * u) <=
           std::log(0.5 * tol_);
  };
  if (osc_ok(U)) {
    double lo = std::min(1e-3, U), hi = U;
    if (osc_ok(lo)) {
      hi = lo;
    } else {
      for (int it = 0; it < 100 && hi - lo > 1e-3 * hi; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (osc_ok(mid))
          hi = mid;
        else
          lo = mid;
      }
    }
    U = hi;
  }

  // Panel widths track the local rate bound; at u = 0 this matches the
  // uniform rule with the same safety factor.
  std::vector<double> starts, halves;
  double a = 0.0;
  while (a < U) {
    const double kloc = 0.5 * y_ + 2.0 * decay(a);
    const double width = std::min(U - a, M_PI / (3.0 * kloc));
    if (a + width == a) break;
    starts.push_back(a);
    halves.push_back(0.5 * width);
    a += width;
    if (starts.size() > 400000)
      throw ComputationError("NoncentralFamily: grid budget exceeded");
  }

  const auto& gl = num::gauss_legendre(15);
  const std::size_t n = w_.size();
  const std::size_t total = starts.size() * gl.x.size();
  u_.reserve(total);
  phase0_.reserve(total);
  qexp_.reserve(total);
  for (std::size_t p = 0; p < starts.size(); ++p) {
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
      const double u = starts[p] + halves[p] * (1.0 + gl.x[i]);
      double beta = 0.0, lnrho = 0.0;
      for (double w : w_) {
        const double wu = w * u;
        beta += 0.5 * std::atan(wu);
        lnrho += 0.25 * std::log1p(wu * wu);
      }
      u_.push_back(u);
      phase0_.push_back(beta - 0.5 * y_ * u);
      qexp_.push_back(gl.w[i] * halves[p] * std::exp(-lnrho) / (u * M_PI));
    }
  }
  if (total * n <= 3000000) {
    gtab_.resize(total * n);
    htab_.resize(total * n);
    for (std::size_t idx = 0; idx < total; ++idx) {
      const double u = u_[idx];
      for (std::size_t i = 0; i < n; ++i) {
        const double wu = w_[i] * u;
        const double wu2 = wu * wu;
        gtab_[idx * n + i] = 0.5 * wu / (1.0 + wu2);
        htab_[idx * n + i] = 0.5 * wu2 / (1.0 + wu2);
      }
    }
    tabulated_ = true;
  }
}

double NoncentralFamily::log_cdf(const std::vector<double>& nc) const {
  const std::size_t n = w_.size();
  if (nc.size() != n)
    throw DomainError("NoncentralFamily: noncentrality size mismatch");
  double snw = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(nc[i] >= 0.0) || !std::isfinite(nc[i]))
      throw DomainError("NoncentralFamily: noncentrality must be >= 0");
    snw += nc[i] * w_[i];
    var += w_[i] * w_[i] * (2.0 + 4.0 * nc[i]);
  }
  auto make_terms = [&] {
    std::vector<Term> terms(n);
    for (std::size_t i = 0; i < n; ++i) terms[i] = {w_[i], 1, nc[i]};
    return terms;
  };
  // Rare query past the grid's certified range: one-off exact object.
  if (snw > budget_) return QuadFormCdf(make_terms(), 0.0, tol_).log_cdf(y_);

  const double z = (y_ - (sum_w_ + snw)) / std::sqrt(var);
  if (z < -2.0) {
    // Probably far below the inversion tolerance; try the cheap route first.
    const double lp = saddle_log_cdf_terms(make_terms(), y_);
    if (lp < std::log(1e-4)) return lp;
  }

  double s = 0.0;
  const std::size_t total = u_.size();
  if (tabulated_) {
    for (std::size_t idx = 0; idx < total; ++idx) {
      const double* g = &gtab_[idx * n];
      const double* h = &htab_[idx * n];
      double dg = 0.0, dh = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dg += nc[i] * g[i];
        dh += nc[i] * h[i];
      }
      s += qexp_[idx] * std::exp(-dh) * std::sin(phase0_[idx] + dg);
    }
  } else {
    for (std::size_t idx = 0; idx < total; ++idx) {
      const double u = u_[idx];
      double dg = 0.0, dh = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double wu = w_[i] * u;
        const double wu2 = wu * wu;
        const double t = nc[i] / (1.0 + wu2);
        dg += 0.5 * t * wu;
        dh += 0.5 * t * wu2;
      }
      s += qexp_[idx] * std::exp(-dh) * std::sin(phase0_[idx] + dg);
    }
  }
  const double p = std::clamp(0.5 - s, 0.0, 1.0);
  if (p >= 1e-4) return std::log(p);
  return saddle_log_cdf_terms(make_terms(), y_);
}

}  // namespace fbrd::quadform
