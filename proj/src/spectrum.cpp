#include "fbrd/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fbrd/errors.hpp"
#include "fbrd/quadrature.hpp"

namespace fbrd::spectrum {

namespace {

void check_blocklength(std::size_t n, const SpectrumOptions& options) {
  if (n < 1) throw DomainError("blocklength must be at least 1");
  if (n > options.max_n) {
    throw DomainError("blocklength " + std::to_string(n) +
                      " exceeds the configured cap of " +
                      std::to_string(options.max_n));
  }
}

// Symmetric tridiagonal eigenvalues by Sturm-count bisection. diag has n
// entries, off has n-1. Returns all eigenvalues ascending.
std::vector<double> tridiag_eigenvalues(const std::vector<double>& diag,
                                        const std::vector<double>& off) {
  const std::size_t n = diag.size();
  std::vector<double> off2(off.size());
  for (std::size_t i = 0; i < off.size(); ++i) off2[i] = off[i] * off[i];

  double lo = diag[0], hi = diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::fabs(off[i - 1]) : 0.0) +
                     (i + 1 < n ? std::fabs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  const double span = hi - lo;
  lo -= 1e-12 * (1.0 + std::fabs(lo));
  hi += 1e-12 * (1.0 + std::fabs(hi));

  // Number of eigenvalues strictly below x, via the LDL^T sign count.
  auto count_below = [&](double x) {
    std::size_t count = 0;
    double q = diag[0] - x;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
      if (q == 0.0) q = 1e-300;
      q = diag[i] - x - off2[i - 1] / q;
      if (q < 0.0) ++count;
    }
    return count;
  };

  std::vector<double> eig(n);
  for (std::size_t k = 0; k < n; ++k) {
    double a = lo, b = hi;
    for (int it = 0; it < 128; ++it) {
      const double mid = 0.5 * (a + b);
      if (count_below(mid) > k) {
        b = mid;
      } else {
        a = mid;
      }
      if (b - a <= 1e-15 * span) break;
    }
    eig[k] = 0.5 * (a + b);
  }
  return eig;
}

// Tridiagonal precision matrix of the Gauss-Markov chain, scaled by sigma^2
// (i.e. sigma^2 * Sigma^{-1}). Covariance eigenvalues are sigma^2 / mu for
// each eigenvalue mu of this matrix.
void precision_tridiag(double a, std::size_t n, CovarianceModel model,
                       std::vector<double>* diag, std::vector<double>* off) {
  diag->assign(n, 1.0 + a * a);
  off->assign(n >= 1 ? n - 1 : 0, -a);
  diag->back() = 1.0;
  if (model == CovarianceModel::stationary) {
    diag->front() = (n == 1) ? (1.0 - a * a) : 1.0;
  }
}

std::vector<double> markov_eigs_dense(const SourceSpec& source, std::size_t n,
                                      CovarianceModel model) {
  const Eigen::MatrixXd cov = covariance_matrix(source, n, model);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw ComputationError("eigen_spectrum: dense eigensolver failed");
  }
  return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

std::vector<double> markov_eigs_tridiag(const SourceSpec& source,
                                        std::size_t n,
                                        CovarianceModel model) {
  std::vector<double> diag, off;
  precision_tridiag(source.a, n, model, &diag, &off);
  std::vector<double> mu = tridiag_eigenvalues(diag, off);
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = source.sigma2 / mu[i];
  return eig;
}

}  // namespace

SourceSpec SourceSpec::gauss_markov(double a, double sigma2) {
  SourceSpec s;
  s.kind = Kind::gauss_markov;
  s.a = a;
  s.sigma2 = sigma2;
  s.validate();
  return s;
}

SourceSpec SourceSpec::explicit_list(std::vector<double> variances) {
  SourceSpec s;
  s.kind = Kind::explicit_variances;
  s.variances = std::move(variances);
  s.validate();
  return s;
}

void SourceSpec::validate() const {
  if (kind == Kind::gauss_markov) {
    if (!(a >= 0.0 && a < 1.0)) {
      throw DomainError("source.a must lie in [0,1)");
    }
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
      throw DomainError("source.sigma2 must be positive and finite");
    }
  } else {
    if (variances.empty()) {
      throw DomainError("source.variances must be non-empty");
    }
    for (double v : variances) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError("source.variances entries must be positive finite");
      }
    }
  }
}

double EigenSpectrum::average_variance() const {
  return std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0) /
         static_cast<double>(n);
}

Eigen::MatrixXd covariance_matrix(const SourceSpec& source, std::size_t n,
                                  CovarianceModel model) {
  source.validate();
  if (n < 1) throw DomainError("covariance_matrix: n must be at least 1");

  if (!source.is_markov()) {
    if (source.variances.size() != n) {
      throw DomainError(
          "covariance_matrix: explicit source has " +
          std::to_string(source.variances.size()) + " variances but n = " +
          std::to_string(n));
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = source.variances[i];
    return m;
  }

  const double a = source.a;
  const double s2 = source.sigma2;
  Eigen::MatrixXd m(n, n);
  if (a == 0.0) {
    m = s2 * Eigen::MatrixXd::Identity(n, n);
    return m;
  }
  const double one_minus_a2 = 1.0 - a * a;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v;
      if (model == CovarianceModel::zero_init) {
        // X_k = sum_{m<k} a^{k-1-m} Z_m with X_0 = 0 gives
        // E[X_i X_j] = sigma^2 a^{j-i} (1 - a^{2i}) / (1 - a^2), 1-based i<=j.
        v = s2 * std::pow(a, static_cast<double>(j - i)) *
            (1.0 - std::pow(a, 2.0 * static_cast<double>(i + 1))) /
            one_minus_a2;
      } else {
        v = s2 * std::pow(a, static_cast<double>(j - i)) / one_minus_a2;
      }
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

EigenSpectrum eigen_spectrum(const SourceSpec& source, std::size_t n,
                             const SpectrumOptions& options) {
  source.validate();
  check_blocklength(n, options);

  std::vector<double> eig;
  if (!source.is_markov()) {
    if (source.variances.size() != n) {
      throw DomainError("eigen_spectrum: explicit source variance count "
                        "must equal n");
    }
    eig = source.variances;  // diagonal covariance: eigenvalues are exact
  } else if (source.a == 0.0) {
    eig.assign(n, source.sigma2);  // identity scaled: trivially diagonal
  } else if (options.method == EigenMethod::dense) {
    eig = markov_eigs_dense(source, n, options.model);
  } else {
    eig = markov_eigs_tridiag(source, n, options.model);
  }

  std::sort(eig.begin(), eig.end(), std::greater<double>());
  if (!(eig.front() > 0.0) || eig.back() < 1e-12 * eig.front()) {
    throw ComputationError(
        "eigen_spectrum: spectrum numerically singular (min/max ratio below "
        "1e-12)");
  }

  EigenSpectrum out;
  out.n = n;
  out.eigenvalues = std::move(eig);
  out.source = source;
  out.model = options.model;
  return out;
}

double psd(const SpectralDensity& density, double omega) {
  if (std::fabs(omega) > M_PI + 1e-12) {
    throw DomainError("psd: omega must lie in [-pi, pi]");
  }
  const double a = density.a;
  return density.sigma2 / (1.0 + a * a - 2.0 * a * std::cos(omega));
}

double crossing_angle(const SpectralDensity& density, double theta) {
  const double a = density.a;
  if (a == 0.0 || !(theta > 0.0)) return -1.0;
  const double c = (1.0 + a * a - density.sigma2 / theta) / (2.0 * a);
  if (c <= -1.0 || c >= 1.0) return -1.0;
  return std::acos(c);
}

SzegoGap szego_gap(const SourceSpec& source, std::size_t n,
                   const BoundedLipschitzFn& fn,
                   const std::vector<double>& omega_splits,
                   const SpectrumOptions& options) {
  if (!source.is_markov()) {
    throw DomainError("szego_gap: requires a gauss_markov source");
  }
  const EigenSpectrum spec = eigen_spectrum(source, n, options);

  double avg = 0.0;
  for (double s : spec.eigenvalues) avg += fn.f(s);
  avg /= static_cast<double>(n);

  const SpectralDensity density{source.a, source.sigma2};
  const double integral =
      num::integrate([&](double w) { return fn.f(psd(density, w)); }, 0.0,
                     M_PI, {}, omega_splits) /
      M_PI;  // symmetry: (1/2pi) int_{-pi}^{pi} = (1/pi) int_0^pi

  const double a = source.a;
  const double denom = (1.0 - a) * (1.0 - a) * (1.0 - a) * (1.0 - a);
  const double cl =
      std::max(fn.sup_norm + 2.0 * a * fn.lipschitz * M_PI * source.sigma2 /
                                 denom,
               2.0 * fn.sup_norm);

  SzegoGap out;
  out.eig_avg = avg;
  out.integral = integral;
  out.gap = std::fabs(avg - integral);
  out.bound = cl / static_cast<double>(n);
  return out;
}

}  // namespace fbrd::spectrum
