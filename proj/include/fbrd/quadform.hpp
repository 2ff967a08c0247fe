#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace fbrd::quadform {

// One component weight * ChiSquare(df, nc) with weight > 0, nc >= 0.
struct Term {
  double weight = 1.0;
  int df = 1;
  double nc = 0.0;
};

// CDF of Q = sum_k weight_k ChiSquare(df_k, nc_k) + shift.
//
// Dispatch after merging equal weights:
//   - single term: exact (regularized gamma / normal-difference / Poisson
//     mixture),
//   - total df <= 3: nested conditioning quadrature, exact in log space,
//   - otherwise: Imhof characteristic-function inversion on a cached panel
//     grid (absolute accuracy abs_tol), with a Lugannani-Rice saddlepoint
//     for log_cdf when the lower tail drops below 1e-4.
//
// The Imhof grid is built lazily and cached; instances are not safe for
// concurrent use. Build one per thread.
class QuadFormCdf {
 public:
  explicit QuadFormCdf(std::vector<Term> terms, double shift = 0.0,
                       double abs_tol = 1e-8);

  double cdf(double x) const;  // P[Q <= x]
  double sf(double x) const { return 1.0 - cdf(x); }
  double log_cdf(double x) const;

  double mean() const;
  double variance() const;
  const std::string& method() const { return method_; }

 private:
  enum class Kind { degenerate, single, nested, imhof };

  std::vector<Term> terms_;  // merged, weights descending
  double shift_ = 0.0;
  double tol_ = 1e-8;
  Kind kind_ = Kind::degenerate;
  std::string method_;
  int total_df_ = 0;
  double amp_rate_ = 0.0;  // sum (df + nc) * weight, phase-rate bound

  // cached Imhof grid
  mutable std::vector<double> u_, beta0_, weff_;
  mutable double kappa_built_ = -1.0;
  mutable double y_osc_built_ = std::numeric_limits<double>::infinity();

  double single_cdf(double y) const;      // y in core coordinates
  double single_log_cdf(double y) const;
  double nested_log_cdf(double y) const;
  void build_grid(double kappa, double y_ref) const;
  double imhof_cdf(double y) const;
  double saddle_log_cdf(double y) const;
};

// Repeated lower-tail queries P[sum_i w_i ChiSquare(1, nc_i) <= threshold]
// where the weights and the threshold stay fixed and only the
// noncentralities change from call to call.
//
// One inversion grid is sized up front to cover every query with
// sum_i w_i nc_i <= nc_weight_budget; the per-node integrand then reduces to
// two dot products against precomputed tables.  Queries past the budget fall
// back to a one-off QuadFormCdf, and deep-tail queries go straight to the
// saddlepoint without touching the grid.  Instances are immutable after
// construction and safe to share across threads.
class NoncentralFamily {
 public:
  NoncentralFamily(std::vector<double> weights, double threshold,
                   double nc_weight_budget, double abs_tol = 1e-8);

  // log P[Q(nc) <= threshold]; nc aligned index-by-index with the weights.
  double log_cdf(const std::vector<double>& nc) const;

  std::size_t grid_nodes() const { return u_.size(); }

 private:
  std::vector<double> w_;
  double y_ = 0.0;
  double budget_ = 0.0;
  double tol_ = 1e-8;
  double sum_w_ = 0.0;

  // Shared grid: abscissa, central phase minus the threshold ramp, and the
  // quadrature weight folded with the central amplitude.
  std::vector<double> u_, phase0_, qexp_;
  // Node-major per-term phase/amplitude factors when small enough to store.
  std::vector<double> gtab_, htab_;
  bool tabulated_ = false;
};

}  // namespace fbrd::quadform
