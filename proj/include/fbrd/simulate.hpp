#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fbrd/bounds.hpp"
#include "fbrd/spectrum.hpp"
#include "fbrd/waterfill.hpp"

namespace fbrd::simulate {

// Random-code trial in the eigenbasis: source letters X_i ~ N(0, sigma_i^2),
// codewords drawn i.i.d. with letter variances nu_i from the water-filling
// solution at distortion d. A trial fails when none of the M codewords lands
// within per-letter distortion d of the source block.
struct CodecConfig {
  spectrum::SourceSpec source;
  std::size_t n = 0;
  std::uint64_t M = 0;
  double d = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const;
};

struct CodecResult {
  std::size_t trials = 0;
  std::size_t failures = 0;
  double eps_hat = 0.0;
  double mc_stderr = 0.0;
  // Wilson 95% interval for the failure probability.
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
};

CodecResult run_random_code(const CodecConfig& config);

// Measures, per blocklength, the gap
//   -ln P(ball(X, d)) - j(X, d)   [nats]
// between the log ball-probability and the tilted information, then fits the
// slack C0 ln(n) + c that covers the empirical (1 - 1/sqrt(n)) quantile at
// every n, and the residual violation mass K = max_n sqrt(n) P[gap > slack].
struct AepConfig {
  spectrum::SourceSpec source;
  double d = 0.0;
  std::vector<std::size_t> n_list;
  std::size_t samples = 0;  // per blocklength, >= 1e4
  std::uint64_t seed = 0;
  int threads = 0;
  // Candidate slack constants to grade alongside the fit (nats).
  double candidate_C0 = 0.0;
  double candidate_c_nats = 0.0;

  void validate() const;
};

struct AepRow {
  std::size_t n = 0;
  double theta = 0.0;         // water level at this blocklength
  double gap_quantile = 0.0;  // empirical (1 - 1/sqrt(n)) quantile, nats
  double gap_max = 0.0;       // largest finite gap observed
  std::size_t underflow = 0;  // samples whose ball probability underflowed
  double violation_fraction = 0.0;  // P[gap > C0 ln n + c] under the fit
  double candidate_violation = 0.0;  // same under the candidate constants
  double residual = 0.0;             // gap_quantile - (C0 ln n + c), <= 0
};

struct AepReport {
  std::vector<AepRow> rows;
  double C0 = 0.0;      // slope against ln n
  double c_nats = 0.0;  // intercept, nats
  double K = 0.0;       // max_n sqrt(n) * violation fraction
  double candidate_K = 0.0;  // same under the candidate constants

  bounds::FittedConstants fitted() const;
};

AepReport aep_experiment(const AepConfig& config);

// Per-blocklength comparison of the three bounds plus the finite-n
// water-filling point, with the concentration slopes toward the limit and
// the scaled converse/achievability gap (ach - conv) * n / ln n.
struct SweepConfig {
  spectrum::SourceSpec source;
  double d = 0.0;
  double epsilon = 0.0;
  std::vector<std::size_t> n_list;
  std::size_t samples = 0;  // achievability Monte Carlo budget per n
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const;
};

struct SweepRow {
  std::size_t n = 0;
  double theta_n = 0.0;
  double rate_n = 0.0;        // nats
  double dispersion_n = 0.0;  // nats^2
  double approx_rate = 0.0;   // nats per letter
  double converse_rate = 0.0;
  double achievability_rate = 0.0;
  double mc_stderr = 0.0;
  double gap_scaled = 0.0;  // (ach - conv) * n / ln n, zero at n = 1
};

struct SweepReport {
  std::vector<SweepRow> rows;
  waterfill::LimitPoint limit;
  std::optional<double> slope_theta;
  std::optional<double> slope_rate;
  std::optional<double> slope_dispersion;
  // max/min of gap_scaled over n >= 2; +inf if some gap is nonpositive.
  double gap_ratio = 0.0;
};

SweepReport convergence_sweep(const SweepConfig& config);

}  // namespace fbrd::simulate
