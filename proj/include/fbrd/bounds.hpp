#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fbrd/spectrum.hpp"
#include "fbrd/tilted.hpp"
#include "fbrd/waterfill.hpp"

namespace fbrd::bounds {

struct BoundQuery {
  std::size_t n = 0;
  double d = 0.0;
  double epsilon = 0.0;
  spectrum::SourceSpec source;
  spectrum::SpectrumOptions options;

  void validate() const;  // structural checks only; feasibility of d is
                          // established against the actual spectrum
};

enum class BoundKind { approx, converse, achievability, achievability_formula };

const char* to_string(BoundKind kind);

struct SearchTrace {
  double gamma_star = 0.0;        // optimizing slack of the converse, nats
  double gamma_fixed = 0.0;       // reference schedule ln(n)/2, nats
  double rate_fixed_gamma = 0.0;  // converse rate under that fixed schedule
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string note;
};

struct BoundResult {
  BoundKind kind = BoundKind::approx;
  std::size_t n = 0;
  double log_M_nats = 0.0;
  double theta = 0.0;             // water level the bound was evaluated at
  double dispersion_nats2 = 0.0;  // V_n(d) behind the bound
  double rate_nats = 0.0;         // log_M_nats / n
  double mc_stderr = 0.0;  // 0 for analytic kinds
  SearchTrace trace;

  double rate_bits() const;
  double log_M_bits() const;
};

// Upper quantile of the standard normal: Q(q_inverse(eps)) = eps.
double q_inverse(double epsilon);

// rate = R_n(d) + sqrt(V_n(d)/n) Q^{-1}(epsilon), no remainder term.
BoundResult gaussian_approx(const BoundQuery& query);

// P[jmath(X, d) <= t] with t in nats, absolute accuracy 1e-8.
double tilted_cdf(const spectrum::EigenSpectrum& spec,
                  const waterfill::WaterfillSolution& solution, double t);

// Largest log M (nats) with sup_gamma { P[jmath >= log M + gamma] -
// exp(-gamma) } >= epsilon, so every smaller codebook is infeasible. The
// trace carries the optimizing gamma and the ln(n)/2 reference schedule.
BoundResult converse_rate(const BoundQuery& query);

// The infeasible-epsilon level the converse assigns to a given codebook
// size: sup_gamma { P[jmath >= log_M + gamma] - exp(-gamma) }.
double converse_epsilon_at(const BoundQuery& query, double log_M_nats);

// P[ sum_i (x_i - Y_i)^2 <= n d ] with independent Y_i ~ N(0, nu_i);
// deterministic letters (nu_i = 0) consume x_i^2 of the budget.
double ball_probability(const std::vector<double>& x,
                        const waterfill::WaterfillSolution& solution);
double log_ball_probability(const std::vector<double>& x,
                            const waterfill::WaterfillSolution& solution);

// Shared-state form of log_ball_probability for evaluating many source
// samples against one water-filling solution. When every letter is active
// the quadratic form keeps a fixed threshold across samples, so a reusable
// inversion family replaces the per-sample setup; other shapes fall back to
// the one-off path. Immutable after construction, safe to share across
// threads.
class BallProbEvaluator {
 public:
  explicit BallProbEvaluator(const waterfill::WaterfillSolution& solution);
  ~BallProbEvaluator();
  BallProbEvaluator(BallProbEvaluator&&) noexcept;
  BallProbEvaluator& operator=(BallProbEvaluator&&) noexcept;

  double log_prob(const std::vector<double>& x) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Smallest log M (resolution 1e-3 nats) whose random-coding excess-
// distortion estimate plus 3 standard errors stays below epsilon.
BoundResult achievability_rate(const BoundQuery& query, std::size_t samples,
                               std::uint64_t seed, int threads = 0);

// Empirical constants for the closed-form achievability rate. C0 is
// unit-free; c_log2 is in bits; k matches the sqrt(n)-scaled violation rate.
struct FittedConstants {
  double C0 = 0.0;
  double c_log2 = 0.0;
  double k = 0.0;
};

// log2 M = n R + sqrt(n V) Q^{-1}(eps_n) + log2(log2(n)/2) + C0 log2(n) + c
// in bits, with eps_n = epsilon - (M_n + 1 + k)/sqrt(n). Errors out when
// eps_n leaves (0,1): the blocklength is too small for the formula.
BoundResult achievability_formula_rate(const BoundQuery& query,
                                       const FittedConstants& constants);

}  // namespace fbrd::bounds
