#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <cmath>
#include <numbers>

#include "hlab/bessel.hpp"
#include "hlab/error.hpp"

using namespace hlab;

namespace {
constexpr double kPi = std::numbers::pi;

// Ascending series Σ (−1)^m (x/2)^{2m+α} / (m! Γ(m+α+1)) in long double.
double series_j(double alpha, double x) {
  long double term = std::exp(static_cast<long double>(alpha) * std::log(x / 2.0L) - std::lgamma(alpha + 1.0L));
  long double sum = term;
  const long double q = -(x / 2.0L) * (x / 2.0L);
  for (int m = 1; m < 200; ++m) {
    term *= q / (m * (m + alpha));
    sum += term;
    if (std::abs(term) < 1e-22L * std::abs(sum)) break;
  }
  return static_cast<double>(sum);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
}  // namespace

TEST(Bessel, AgreesWithBoostAcrossRegimes) {
  for (double alpha : {0.0, 0.5, 1.0, 2.5, 7.0, 20.0, 61.5, 200.0}) {
    for (double x : {0.01, 0.5, 1.0, 3.7, 10.0, 45.0, 180.0, 900.0, 2500.0}) {
      const BesselJY v = bessel_jy(alpha, x);
      const double j = boost::math::cyl_bessel_j(alpha, x);
      double y = INFINITY;
      try {
        y = boost::math::cyl_neumann(alpha, x);
      } catch (const std::overflow_error&) {
      }
      // Absolute scale near zeros of the oscillatory region.
      const double scale = x > alpha ? std::sqrt(2.0 / (kPi * x)) : 0.0;
      EXPECT_LE(std::abs(v.j - j), 1e-10 * std::max(std::abs(j), scale)) << alpha << " " << x;
      if (std::isfinite(y) && std::abs(y) < 1e300) {
        EXPECT_LE(std::abs(v.y - y), 1e-10 * std::max(std::abs(y), scale)) << alpha << " " << x;
      }
      const double jp = boost::math::cyl_bessel_j_prime(alpha, x);
      EXPECT_LE(std::abs(v.jp - jp), 1e-9 * std::max({std::abs(jp), scale, 1e-300})) << alpha << " " << x;
    }
  }
}

TEST(Bessel, MatchesAscendingSeries) {
  for (double alpha : {0.0, 0.25, 3.0, 12.5, 40.0}) {
    for (double x : {0.1, 1.0, 4.0, 9.0}) {
      EXPECT_LE(rel(bessel_j(alpha, x), series_j(alpha, x)), 1e-11) << alpha << " " << x;
    }
  }
}

TEST(Bessel, HalfOrderClosedForm) {
  for (double x : {1e-3, 0.3, 1.0, 7.5, 33.0, 250.0, 1500.0, 9000.0}) {
    const double exact = std::sqrt(2.0 / (kPi * x)) * std::sin(x);
    EXPECT_LE(std::abs(bessel_j(0.5, x) - exact), 1e-10 * std::sqrt(2.0 / (kPi * x))) << x;
    const double y_exact = -std::sqrt(2.0 / (kPi * x)) * std::cos(x);
    EXPECT_LE(std::abs(bessel_y(0.5, x) - y_exact), 1e-10 * std::sqrt(2.0 / (kPi * x))) << x;
  }
}

TEST(Bessel, WronskianIdentity) {
  for (double alpha : {0.0, 1.3, 9.0, 77.0}) {
    for (double x : {0.7, 5.0, 60.0, 400.0}) {
      const BesselJY v = bessel_jy(alpha, x);
      const double w = v.j * v.yp - v.jp * v.y;
      EXPECT_NEAR(w * kPi * x / 2.0, 1.0, 1e-9) << alpha << " " << x;
    }
  }
}

TEST(Bessel, FirstZeros) {
  EXPECT_NEAR(bessel_j_first_zero(0.0), 2.404825557695773, 1e-12);
  EXPECT_NEAR(bessel_j_first_zero(1.0), 3.831705970207512, 1e-12);
  EXPECT_NEAR(bessel_j_first_zero(0.5), kPi, 1e-12);
}

TEST(Bessel, LogMagnitudeUnderUnderflow) {
  // J_400(1) = (1/2)^400 / 400! · Σ (−1/4)^m / (m! (401)_m), far below the double range.
  long double tail = 1.0L, term = 1.0L;
  for (int m = 1; m < 20; ++m) {
    term *= -0.25L / (m * (400.0L + m));
    tail += term;
  }
  const double expected = 400 * std::log(0.5) - std::lgamma(401.0) + static_cast<double>(std::log(tail));
  EXPECT_NEAR(log_abs_bessel_j(400.0, 1.0) / expected, 1.0, 1e-10);
  EXPECT_NEAR(log_abs_bessel_j(20.0, 3.0), std::log(std::abs(boost::math::cyl_bessel_j(20.0, 3.0))), 1e-10);
}

TEST(Bessel, LargeOrderRatioAsymptotics) {
  // J_α(x)/J_α(x/2) → 2^α as α → ∞ at fixed x.
  for (double alpha : {50.0, 100.0, 200.0}) {
    const double log_ratio = log_abs_bessel_j(alpha, 2.0) - log_abs_bessel_j(alpha, 1.0);
    EXPECT_NEAR(log_ratio / (alpha * std::log(2.0)), 1.0, 2.0 / alpha);
  }
}

TEST(Bessel, RangeGuard) {
  try {
    bessel_j(600.0, 1.0);
    FAIL() << "expected RangeGuard";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RangeGuard);
  }
  EXPECT_THROW(bessel_j(1.0, 2e4), Error);
  EXPECT_THROW(bessel_j(-1.0, 1.0), Error);
}

TEST(Bessel, InequalityScan) {
  const BesselInequalityReport r =
      check_bessel_inequalities({5, 10, 20, 50}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  EXPECT_EQ(r.violations, 0);
  EXPECT_EQ(r.monotonicity_violations, 0);
  EXPECT_GT(r.evaluations, 0);
  EXPECT_GE(r.min_ratio_lower, 0.0);
  EXPECT_GE(r.min_ratio_upper, 0.0);
  EXPECT_GE(r.min_logderiv_lower, 0.0);
  EXPECT_GE(r.min_logderiv_upper, 0.0);
  EXPECT_GE(r.min_order_ratio, 0.0);
}

TEST(Bessel, GaussLegendreExactness) {
  std::vector<double> x, w;
  gauss_legendre(8, 0.0, 2.0, x, w);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 15);
  EXPECT_NEAR(s, std::pow(2.0, 16) / 16.0, 1e-10);
}

TEST(Bessel, SeriesIdentityForModeNorm) {
  for (int n : {2, 3}) {
    for (int ell : {0, 3, 12, 20}) {
      for (double k : {1.0, 2.0, 5.0}) {
        const double quad = radial_l2_squared(n, ell, k, 0.5);
        EXPECT_LE(rel(radial_l2_series(n, ell, k), quad), 1e-8) << n << " " << ell << " " << k;
      }
    }
  }
}

TEST(Bessel, RadialModeDerivative) {
  for (int ell : {0, 2, 9}) {
    for (double r : {0.3, 1.7, 4.0}) {
      const double h = 1e-5;
      const double fd = (radial_mode(2, ell, r + h) - radial_mode(2, ell, r - h)) / (2 * h);
      EXPECT_NEAR(radial_mode_prime(2, ell, r), fd, 1e-8);
    }
  }
}

TEST(Bessel, OptimalityGrowth) {
  for (int ell : {12, 16, 20}) {
    const OptimalityBound a = optimality_lower_bound(2.0, ell);
    const OptimalityBound b = optimality_lower_bound(2.0, 2 * ell);
    EXPECT_NEAR(a.epsilon, 1.0 / (32.0 * ell), 1e-15);
    EXPECT_GT(a.min_boundary_norm, 0.0);
    EXPECT_GE(b.min_boundary_norm / a.min_boundary_norm, std::pow(2.0, ell));
    EXPECT_EQ(a.asymptotic_regime, ell >= 16);
    EXPECT_NEAR(a.alpha_ell * a.g_h1, 1.0, 1e-12);
  }
  EXPECT_TRUE(optimality_lower_bound(2.0, 40).asymptotic_regime);
  EXPECT_THROW(optimality_lower_bound(5.0, 2), Error);
}
