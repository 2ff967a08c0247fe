#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fbrd::num {

// Nodes/weights on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

// Cached Gauss-Legendre rule with npts nodes (Newton on the Legendre
// recurrence, machine accurate).
const GaussRule& gauss_legendre(int npts);

// Physicists' Gauss-Hermite rule: integrates f against exp(-x^2) on R.
// Nodes from the Golub-Welsch Jacobi matrix, weights via the Christoffel
// identity 1/sum_k p_k(x)^2 which stays representable out to the extreme
// nodes (weights down to ~1e-174 at npts = 200).
struct HermiteRule {
  std::vector<double> x;
  std::vector<double> w;
};
const HermiteRule& gauss_hermite(int npts);

struct QuadOptions {
  double abs_tol = 1e-10;
  int max_depth = 48;
  std::size_t max_evals = 4'000'000;
};

// Adaptive Gauss-Legendre on [lo, hi]. `splits` lists interior points where
// the integrand has kinks; each smooth piece is refined independently until
// the local error estimate meets its share of abs_tol. Throws
// ComputationError when the budget or depth cap is exhausted.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadOptions& opt = {},
                 const std::vector<double>& splits = {});

}  // namespace fbrd::num
