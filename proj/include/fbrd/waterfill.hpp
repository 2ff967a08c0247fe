#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fbrd/spectrum.hpp"

namespace fbrd::waterfill {

struct PerIndex {
  double sigma2 = 0.0;  // eigenvalue
  double nu = 0.0;      // reproduction variance max(0, sigma2 - theta)
  double d = 0.0;       // per-letter distortion min(theta, sigma2)
};

struct WaterfillSolution {
  double theta = 0.0;
  double d_target = 0.0;
  std::vector<PerIndex> per_index;
  std::size_t active_count = 0;  // indices with sigma2 > theta (strict)

  std::size_t n() const { return per_index.size(); }
};

struct RateDispersionPoint {
  std::size_t n = 0;
  double d = 0.0;
  double rate_nats = 0.0;
  double dispersion_nats2 = 0.0;
  double lambda_star = 0.0;  // 1/(2 theta), nats convention

  double rate_bits() const;
  double dispersion_bits2() const;
};

struct LimitPoint {
  double d = 0.0;
  double theta_star = 0.0;
  double rate_limit = 0.0;        // nats per sample
  double dispersion_limit = 0.0;  // nats^2 per sample
  double d_max = 0.0;             // sigma^2 / (1 - a^2)
};

// Water level theta with (1/n) sum min(theta, sigma_i^2) = d, by bisection
// on the monotone budget map (the map is piecewise linear, so Newton offers
// nothing). Relative tolerance 1e-12, 200 iteration cap.
WaterfillSolution solve_water_level(const spectrum::EigenSpectrum& spec,
                                    double d);

RateDispersionPoint rate_dispersion(const spectrum::EigenSpectrum& spec,
                                    const WaterfillSolution& solution);

// Limiting water level, rate and dispersion from the power spectral density.
LimitPoint limiting_point(const spectrum::SourceSpec& source, double d);

struct ConcentrationRow {
  std::size_t n = 0;
  double theta_n = 0.0;
  double gap_theta = 0.0;
  double gap_rate = 0.0;
  double gap_dispersion = 0.0;
};

struct ConcentrationReport {
  std::vector<ConcentrationRow> rows;
  LimitPoint limit;
  // Least-squares slopes of ln(gap) vs ln(n); absent when fewer than three
  // gaps are distinguishable from zero.
  std::optional<double> slope_theta;
  std::optional<double> slope_rate;
  std::optional<double> slope_dispersion;
};

ConcentrationReport concentration_report(
    const spectrum::SourceSpec& source, double d,
    const std::vector<std::size_t>& n_list,
    const spectrum::SpectrumOptions& options = {});

// Helper shared with the reporting code: slope of ln(y) vs ln(x) over the
// points with y > floor; nullopt when fewer than 3 such points remain.
std::optional<double> loglog_slope(const std::vector<double>& x,
                                   const std::vector<double>& y,
                                   double floor = 1e-14);

}  // namespace fbrd::waterfill
