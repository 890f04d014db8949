#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "hlab/error.hpp"
#include "hlab/spectral.hpp"

using namespace hlab;

namespace {
constexpr double kPi = std::numbers::pi;

// First zero of J₀ by bisection on [2, 3].
double first_bessel_zero() {
  double lo = 2.0, hi = 3.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (boost::math::cyl_bessel_j(0, mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Grid square_grid(int n) {
  return build_grid(DomainSpec::rectangle(Box{{0, 0, 0}, {kPi, kPi, 0}}), kPi / n);
}
}  // namespace

TEST(Spectral, SquareEigenvalues) {
  const Grid g = square_grid(32);
  const SpectrumReport r = compute_sigma(g, Medium::constant(g, 1.0, 0.0, 1.5), 4);
  ASSERT_GE(r.eigenvalues.size(), 4u);
  const double expected[] = {2.0, 5.0, 5.0, 8.0};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.eigenvalues[i] / expected[i], 1.0, 1e-2) << i;
  for (double res : r.residuals) EXPECT_LE(res, 1e-9);
}

TEST(Spectral, DiskGroundState) {
  const double j01 = first_bessel_zero();
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 32);
  const SpectrumReport r = compute_sigma(g, Medium::constant(g, 1.0, 0.0, 1.5), 1);
  EXPECT_NEAR(r.eigenvalues[0] / (j01 * j01), 1.0, 5e-3);
}

TEST(Spectral, PotentialShiftAndWeightScaling) {
  const Grid g = square_grid(16);
  const SpectrumReport base = compute_sigma(g, Medium::constant(g, 1.0, 0.0, 2.5), 6);
  const SpectrumReport shifted = compute_sigma(g, Medium::constant(g, 1.0, 0.75, 2.5), 6);
  const SpectrumReport scaled = compute_sigma(g, Medium::constant(g, 2.0, 0.0, 2.5), 6);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(shifted.eigenvalues[i], base.eigenvalues[i] - 0.75, 1e-8);
    EXPECT_NEAR(scaled.eigenvalues[i], base.eigenvalues[i] / 2.0, 1e-8);
  }
}

TEST(Spectral, InertiaMatchesListing) {
  const Grid g = build_grid(DomainSpec::annulus(0.5, 2.0), 0.1);
  const Medium m = Medium::from_functions(
      g, [](const Point& p) { return 1.0 + 0.25 * (p[0] * p[0] + p[1] * p[1]); },
      [](const Point&) { return 0.0; }, 2.5, true);
  const SpectrumReport r = compute_sigma_below(g, m, 60.0);
  EXPECT_EQ(count_below(g, m, 60.0), static_cast<int>(r.eigenvalues.size()));
  EXPECT_GE(r.covered_up_to, 60.0);
  for (std::size_t i = 1; i < r.eigenvalues.size(); ++i) EXPECT_LE(r.eigenvalues[i - 1], r.eigenvalues[i]);
}

TEST(Spectral, AdmissibilityCases) {
  const Grid g = square_grid(16);
  const SpectrumReport r = compute_sigma_below(g, Medium::constant(g, 1.0, 0.0, 1.5), 30.0);
  // k² = 2 sits on the first eigenvalue.
  EXPECT_FALSE(check_a1(std::sqrt(r.eigenvalues[0]), r, 0.01).admissible);
  // Midway between λ₁ and λ₂.
  const double mid = 0.5 * (r.eigenvalues[0] + r.eigenvalues[1]);
  const A1Margin ok = check_a1(std::sqrt(mid), r, 0.01);
  EXPECT_TRUE(ok.admissible);
  EXPECT_NEAR(ok.dist, 0.5 * (r.eigenvalues[1] - r.eigenvalues[0]), 1e-12);
  EXPECT_NEAR(ok.threshold, 0.01, 1e-15);
  // Coverage must reach 2k².
  try {
    check_a1(5.0, r, 0.01);
    FAIL() << "expected SpectrumTooShort";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpectrumTooShort);
  }
}

TEST(Spectral, FindAdmissibleK) {
  const Grid g = square_grid(16);
  const SpectrumReport r = compute_sigma_below(g, Medium::constant(g, 1.0, 0.0, 1.5), 60.0);
  for (double target : {1.2, std::sqrt(r.eigenvalues[1]), 2.6, 3.9}) {
    const double k = find_admissible_k(r, target, 0.01);
    const A1Margin m = check_a1(k, r, 0.01);
    EXPECT_TRUE(m.admissible) << target;
    EXPECT_GE(m.margin(), check_a1(target, r, 0.01).margin() - 1e-12);
  }
}

TEST(Spectral, AdmissibleFractionOfRandomK) {
  // Generic k are admissible with the small a1 constant.
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 16);
  const SpectrumReport r = compute_sigma_below(g, Medium::constant(g, 1.0, 0.0, 1.5), 200.0);
  int admissible = 0, total = 0;
  for (double k = 1.0; k * k * 2 < r.covered_up_to; k += 0.0173) {
    admissible += check_a1(k, r, 0.01).admissible;
    ++total;
  }
  ASSERT_GT(total, 100);
  EXPECT_GE(static_cast<double>(admissible) / total, 0.9);
}

TEST(Spectral, WeylExponentIn2D) {
  const Grid g = square_grid(32);
  const SpectrumReport r = compute_sigma_below(g, Medium::constant(g, 1.0, 0.0, 1.5), 150.0);
  EXPECT_NEAR(weyl_exponent(r), 1.0, 0.15);
}

TEST(Spectral, RichardsonErrorIsSmallAndPositive) {
  const Grid fine = square_grid(32), coarse = square_grid(16);
  SpectrumReport f = compute_sigma(fine, Medium::constant(fine, 1.0, 0.0, 1.5), 4);
  const SpectrumReport c = compute_sigma(coarse, Medium::constant(coarse, 1.0, 0.0, 1.5), 4);
  const double e = discretization_error(f, c, 9.0);
  EXPECT_GT(e, 0.0);
  // |λ_h − 8| against the Richardson estimate.
  EXPECT_NEAR(std::abs(f.eigenvalues[3] - 8.0) / e, 1.0, 0.2);
}
