#include "fbrd/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "fbrd/errors.hpp"

namespace fbrd::num {

namespace {

GaussRule build_legendre(int n) {
  GaussRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi-style initial guess, then Newton on P_n.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    rule.x[i] = -z;
    rule.x[n - 1 - i] = z;
    rule.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.w[n - 1 - i] = rule.w[i];
  }
  return rule;
}

HermiteRule build_hermite(int n) {
  // Jacobi matrix for the orthonormal polynomials of weight exp(-x^2):
  // zero diagonal, off-diagonal beta_k = sqrt(k/2).
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    jac(k, k - 1) = b;
    jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw ComputationError("gauss_hermite: Jacobi eigensolve failed");
  }

  HermiteRule rule;
  rule.x.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(rule.x.begin(), rule.x.end());
  rule.w.resize(n);

  // One Newton polish per node using the orthonormal recurrence
  //   p_{k+1}(x) = x sqrt(2/(k+1)) p_k(x) - sqrt(k/(k+1)) p_{k-1}(x),
  // then Christoffel weights w_i = 1 / sum_{k<n} p_k(x_i)^2.
  const double p0c = std::pow(M_PI, -0.25);
  for (int i = 0; i < n; ++i) {
    double x = rule.x[i];
    for (int it = 0; it < 3; ++it) {
      double pkm1 = 0.0, pk = p0c;
      for (int k = 0; k < n; ++k) {
        const double pkp1 = x * std::sqrt(2.0 / (k + 1.0)) * pk -
                            std::sqrt(k / (k + 1.0)) * pkm1;
        pkm1 = pk;
        pk = pkp1;
      }
      // pk = p_n(x); derivative via p_n'(x) = sqrt(2n) p_{n-1}(x).
      const double deriv = std::sqrt(2.0 * n) * pkm1;
      if (deriv == 0.0) break;
      const double dx = pk / deriv;
      x -= dx;
      if (std::fabs(dx) < 1e-16 * (1.0 + std::fabs(x))) break;
    }
    rule.x[i] = x;
    double sum = 0.0;
    double pkm1 = 0.0, pk = p0c;
    for (int k = 0; k < n; ++k) {
      sum += pk * pk;
      const double pkp1 = x * std::sqrt(2.0 / (k + 1.0)) * pk -
                          std::sqrt(k / (k + 1.0)) * pkm1;
      pkm1 = pk;
      pk = pkp1;
    }
    rule.w[i] = 1.0 / sum;
  }
  return rule;
}

template <class Builder, class RuleT>
const RuleT& cached_rule(int n, std::map<int, RuleT>& cache, std::mutex& mtx,
                         Builder&& build) {
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

struct AdaptiveState {
  const std::function<double(double)>* f;
  const GaussRule* rule;
  std::size_t evals = 0;
  std::size_t max_evals = 0;
};

double fixed_panel(AdaptiveState& st, double lo, double hi) {
  st.evals += st.rule->x.size();
  if (st.evals > st.max_evals) {
    throw ComputationError("integrate: evaluation budget exhausted");
  }
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  double acc = 0.0;
  for (std::size_t k = 0; k < st.rule->x.size(); ++k) {
    acc += st.rule->w[k] * (*st.f)(c + h * st.rule->x[k]);
  }
  return acc * h;
}

double adaptive(AdaptiveState& st, double lo, double hi, double whole,
                double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left = fixed_panel(st, lo, mid);
  const double right = fixed_panel(st, mid, hi);
  const double err = std::fabs(left + right - whole);
  if (err <= std::max(tol, 1e-15 * std::fabs(left + right))) {
    return left + right;
  }
  if (depth <= 0) {
    throw ComputationError("integrate: max recursion depth reached");
  }
  return adaptive(st, lo, mid, left, 0.5 * tol, depth - 1) +
         adaptive(st, mid, hi, right, 0.5 * tol, depth - 1);
}

}  // namespace

const GaussRule& gauss_legendre(int npts) {
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  if (npts < 2) throw DomainError("gauss_legendre: need at least 2 points");
  return cached_rule(npts, cache, mtx, build_legendre);
}

const HermiteRule& gauss_hermite(int npts) {
  static std::map<int, HermiteRule> cache;
  static std::mutex mtx;
  if (npts < 2) throw DomainError("gauss_hermite: need at least 2 points");
  return cached_rule(npts, cache, mtx, build_hermite);
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadOptions& opt, const std::vector<double>& splits) {
  if (!(lo <= hi)) throw DomainError("integrate: lo must not exceed hi");
  if (lo == hi) return 0.0;

  std::vector<double> pts;
  pts.push_back(lo);
  for (double s : splits) {
    if (s > lo && s < hi) pts.push_back(s);
  }
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  AdaptiveState st;
  st.f = &f;
  st.rule = &gauss_legendre(15);
  st.max_evals = opt.max_evals;

  const double tol_piece = opt.abs_tol / static_cast<double>(pts.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double whole = fixed_panel(st, pts[i], pts[i + 1]);
    total += adaptive(st, pts[i], pts[i + 1], whole, tol_piece, opt.max_depth);
  }
  return total;
}

}  // namespace fbrd::num
