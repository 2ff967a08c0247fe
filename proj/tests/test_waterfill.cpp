#include <initializer_list>
#include <cmath>
#include <optional>
#include <vector>

#include "doctest.h"
#include "fbrd/errors.hpp"
#include "fbrd/quadrature.hpp"
#include "fbrd/spectrum.hpp"
#include "fbrd/waterfill.hpp"

using namespace fbrd;
using spectrum::SourceSpec;

namespace {

spectrum::EigenSpectrum explicit_spec(std::vector<double> vars) {
  const std::size_t n = vars.size();
  return spectrum::eigen_spectrum(SourceSpec::explicit_list(std::move(vars)), n);
}

}  // namespace

TEST_CASE("three letter solution by hand") {
  const auto spec = explicit_spec({4.0, 1.0, 1.0});
  const auto sol = waterfill::solve_water_level(spec, 1.0);
  CHECK(sol.theta == 1.0);  // d at the smallest eigenvalue: exact level
  CHECK(sol.active_count == 1);
  CHECK(sol.per_index[0].nu == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(sol.per_index[0].d == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sol.per_index[1].nu == 0.0);
  CHECK(sol.per_index[1].d == doctest::Approx(1.0).epsilon(1e-14));

  const auto pt = waterfill::rate_dispersion(spec, sol);
  CHECK(pt.rate_nats == doctest::Approx(0.23104906018664844).epsilon(1e-14));
  CHECK(pt.dispersion_nats2 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pt.lambda_star == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pt.rate_bits() ==
        doctest::Approx(pt.rate_nats / 0.6931471805599453).epsilon(1e-15));
}

TEST_CASE("flat spectrum snaps the level to d exactly") {
  const auto spec = explicit_spec({1.0, 1.0, 1.0, 1.0});
  const auto sol = waterfill::solve_water_level(spec, 0.25);
  CHECK(sol.theta == 0.25);
  CHECK(sol.active_count == 4);
  for (const auto& p : sol.per_index) {
    CHECK(p.nu == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p.d == 0.25);
  }
  const auto pt = waterfill::rate_dispersion(spec, sol);
  CHECK(pt.rate_nats == doctest::Approx(0.6931471805599453).epsilon(1e-14));
  CHECK(pt.dispersion_nats2 == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("budget equation against a grid scan") {
  const auto spec =
      spectrum::eigen_spectrum(SourceSpec::gauss_markov(0.5, 1.0), 32);
  for (double d : {0.3, 0.5, 0.8}) {
    const auto sol = waterfill::solve_water_level(spec, d);

    // The level must satisfy the budget identity ...
    double budget = 0.0;
    for (const auto& p : sol.per_index) budget += p.d;
    budget /= static_cast<double>(spec.n);
    CHECK(budget == doctest::Approx(d).epsilon(1e-11));

    // ... and agree with an independent bisection on the same map.
    double lo = 0.0, hi = spec.max_eigenvalue();
    for (int it = 0; it < 120; ++it) {
      const double mid = 0.5 * (lo + hi);
      double b = 0.0;
      for (double ev : spec.eigenvalues) b += std::min(mid, ev);
      (b / static_cast<double>(spec.n) < d ? lo : hi) = mid;
    }
    CHECK(sol.theta == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
  }
}

TEST_CASE("infeasible distortion targets are rejected") {
  const auto spec = explicit_spec({2.0, 1.0});
  CHECK_THROWS_AS(waterfill::solve_water_level(spec, 1.5), DomainError);
  CHECK_THROWS_AS(waterfill::solve_water_level(spec, 0.0), DomainError);
  CHECK_THROWS_AS(waterfill::solve_water_level(spec, -0.1), DomainError);
  CHECK_NOTHROW(waterfill::solve_water_level(spec, 1.4999));
}

TEST_CASE("rate decreases convexly and the level increases in d") {
  const auto spec =
      spectrum::eigen_spectrum(SourceSpec::gauss_markov(0.5, 1.0), 16);
  const double dmax = spec.average_variance();
  std::vector<double> ds, rates, thetas, disps;
  for (int i = 1; i <= 50; ++i) {
    const double d = dmax * i / 51.0;
    const auto sol = waterfill::solve_water_level(spec, d);
    const auto pt = waterfill::rate_dispersion(spec, sol);
    ds.push_back(d);
    rates.push_back(pt.rate_nats);
    thetas.push_back(sol.theta);
    disps.push_back(pt.dispersion_nats2);
  }
  for (std::size_t i = 1; i < ds.size(); ++i) {
    CHECK(thetas[i] > thetas[i - 1]);
    CHECK(rates[i] < rates[i - 1]);
    CHECK(disps[i] > 0.0);
    CHECK(disps[i] <= 0.5 + 1e-12);
  }
  // Convexity of R(d): second differences on the uniform grid.
  for (std::size_t i = 1; i + 1 < ds.size(); ++i)
    CHECK(rates[i + 1] - 2.0 * rates[i] + rates[i - 1] >= -1e-9);
}

TEST_CASE("iid blocks reproduce the single letter point") {
  const auto one = explicit_spec({2.0});
  const auto six = explicit_spec(std::vector<double>(6, 2.0));
  const auto p1 =
      waterfill::rate_dispersion(one, waterfill::solve_water_level(one, 0.7));
  const auto p6 =
      waterfill::rate_dispersion(six, waterfill::solve_water_level(six, 0.7));
  CHECK(p6.rate_nats == doctest::Approx(p1.rate_nats).epsilon(1e-13));
  CHECK(p6.dispersion_nats2 ==
        doctest::Approx(p1.dispersion_nats2).epsilon(1e-13));
  CHECK(p1.rate_nats ==
        doctest::Approx(0.5 * std::log(2.0 / 0.7)).epsilon(1e-14));
}

TEST_CASE("limiting point below the spectral floor is exact") {
  const auto lp = waterfill::limiting_point(SourceSpec::gauss_markov(0.5, 1.0),
                                            0.4);
  CHECK(lp.theta_star == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(lp.rate_limit ==
        doctest::Approx(0.45814536593707753).epsilon(1e-10));
  CHECK(lp.dispersion_limit == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(lp.d_max == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("limiting point with a clipped band matches a fine Riemann sum") {
  const auto src = SourceSpec::gauss_markov(0.5, 1.0);
  const spectrum::SpectralDensity den{0.5, 1.0};
  const double d = 0.6;  // above theta_min = 4/9: the clip is active
  const auto lp = waterfill::limiting_point(src, d);

  auto band = [&](double theta, auto&& f) {
    // Simpson on [0, pi] split at the crossing angle.
    const double kink = spectrum::crossing_angle(den, theta);
    double total = 0.0;
    for (const auto& seg : {std::pair{0.0, kink}, std::pair{kink, M_PI}}) {
      const int m = 200000;
      const double h = (seg.second - seg.first) / m;
      double s = f(seg.first) + f(seg.second);
      for (int i = 1; i < m; ++i)
        s += f(seg.first + h * i) * (i % 2 ? 4.0 : 2.0);
      total += s * h / 3.0;
    }
    return total / M_PI;
  };

  const double budget = band(lp.theta_star, [&](double w) {
    return std::min(lp.theta_star, spectrum::psd(den, w));
  });
  CHECK(budget == doctest::Approx(d).epsilon(1e-9));

  const double rate = band(lp.theta_star, [&](double w) {
    return std::max(0.0,
                    0.5 * std::log(spectrum::psd(den, w) / lp.theta_star));
  });
  CHECK(lp.rate_limit == doctest::Approx(rate).epsilon(1e-7));

  const double disp = band(lp.theta_star, [&](double w) {
    const double r = spectrum::psd(den, w) / lp.theta_star;
    return 0.5 * std::min(1.0, r * r);
  });
  CHECK(lp.dispersion_limit == doctest::Approx(disp).epsilon(1e-7));

  CHECK_THROWS_AS(waterfill::limiting_point(src, 4.0 / 3.0), DomainError);
}

TEST_CASE("memoryless concentration gaps vanish identically") {
  const auto rep = waterfill::concentration_report(
      SourceSpec::gauss_markov(0.0, 1.0), 0.25, {4, 8, 16, 32});
  for (const auto& row : rep.rows) {
    CHECK(row.theta_n == 0.25);
    CHECK(row.gap_theta == 0.0);
    // The limit side comes from quadrature, so these are zero only up to
    // rounding of the integral.
    CHECK(row.gap_rate <= 1e-13);
    CHECK(row.gap_dispersion <= 1e-13);
  }
  CHECK(!rep.slope_theta.has_value());
  CHECK(!rep.slope_rate.has_value());
  CHECK(!rep.slope_dispersion.has_value());
  CHECK(rep.limit.rate_limit ==
        doctest::Approx(0.6931471805599453).epsilon(1e-10));
}

TEST_CASE("concentration toward the spectral limit when the clip is active") {
  const auto rep = waterfill::concentration_report(
      SourceSpec::gauss_markov(0.5, 1.0), 0.6, {16, 32, 64, 128, 256});
  REQUIRE(rep.rows.size() == 5);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].gap_theta < rep.rows[i - 1].gap_theta);
  }
  REQUIRE(rep.slope_theta.has_value());
  CHECK(*rep.slope_theta < -0.8);
  CHECK(*rep.slope_theta > -1.3);
}

TEST_CASE("log log slope helper") {
  std::vector<double> x{4, 8, 16, 32, 64};
  std::vector<double> y;
  for (double v : x) y.push_back(3.7 * std::pow(v, -1.2));
  const auto s = waterfill::loglog_slope(x, y);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(-1.2).epsilon(1e-12));

  // Points at or below the floor are discarded; too few remain -> nullopt.
  CHECK(!waterfill::loglog_slope(x, {0.0, 0.0, 0.0, 1e-15, 1.0}).has_value());
}
