#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace fbrd::spectrum {

// Covariance model for the Gauss-Markov chain X_{i+1} = a X_i + Z_i.
// zero_init starts the recursion at X_0 = 0 (the default); stationary uses
// the wide-sense stationary Toeplitz covariance sigma^2 a^|i-j| / (1 - a^2).
enum class CovarianceModel { zero_init, stationary };

enum class EigenMethod { dense, tridiagonal };

struct SourceSpec {
  enum class Kind { gauss_markov, explicit_variances };
  Kind kind = Kind::gauss_markov;
  double a = 0.0;
  double sigma2 = 1.0;
  std::vector<double> variances;  // explicit_variances only

  static SourceSpec gauss_markov(double a, double sigma2);
  static SourceSpec explicit_list(std::vector<double> variances);
  void validate() const;  // throws DomainError
  bool is_markov() const { return kind == Kind::gauss_markov; }
};

struct SpectrumOptions {
  CovarianceModel model = CovarianceModel::zero_init;
  EigenMethod method = EigenMethod::dense;
  std::size_t max_n = 4096;
};

struct EigenSpectrum {
  std::size_t n = 0;
  std::vector<double> eigenvalues;  // descending, variance units
  SourceSpec source;
  CovarianceModel model = CovarianceModel::zero_init;

  double max_eigenvalue() const { return eigenvalues.front(); }
  double min_eigenvalue() const { return eigenvalues.back(); }
  double average_variance() const;
};

struct SpectralDensity {
  double a = 0.0;
  double sigma2 = 1.0;

  double theta_min() const { return sigma2 / ((1.0 + a) * (1.0 + a)); }
  double theta_max() const { return sigma2 / ((1.0 - a) * (1.0 - a)); }
};

// Covariance of (X_1, ..., X_n). For explicit sources n must equal the
// variance count and the result is diagonal.
Eigen::MatrixXd covariance_matrix(
    const SourceSpec& source, std::size_t n,
    CovarianceModel model = CovarianceModel::zero_init);

EigenSpectrum eigen_spectrum(const SourceSpec& source, std::size_t n,
                             const SpectrumOptions& options = {});

// S(omega) = sigma^2 / (1 + a^2 - 2 a cos omega), |omega| <= pi.
double psd(const SpectralDensity& density, double omega);

// Angle where S(omega) = theta, or a negative value when the level never
// crosses the spectrum on (0, pi).
double crossing_angle(const SpectralDensity& density, double theta);

// Test function for the averaged-spectrum bound: carries the analytic
// constants the bound needs.
struct BoundedLipschitzFn {
  std::function<double(double)> f;
  double sup_norm = 0.0;
  double lipschitz = 0.0;
};

struct SzegoGap {
  double gap = 0.0;        // |eigenvalue average - spectral integral|
  double bound = 0.0;      // C_L / n
  double eig_avg = 0.0;    // (1/n) sum F(sigma_i^2)
  double integral = 0.0;   // (1/2pi) int F(S(omega)) domega
};

// Gap between the eigenvalue average of F and its spectral integral, plus
// the admissible C_L/n bound. omega_splits lists known kink angles of
// F(S(omega)) so the quadrature can split there.
SzegoGap szego_gap(const SourceSpec& source, std::size_t n,
                   const BoundedLipschitzFn& fn,
                   const std::vector<double>& omega_splits = {},
                   const SpectrumOptions& options = {});

}  // namespace fbrd::spectrum
