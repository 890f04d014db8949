#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hlab/error.hpp"
#include "hlab/geometry.hpp"

using namespace hlab;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Geometry, DiskSpacingRule) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 0.1);
  EXPECT_EQ(g.topology, Topology::Polar);
  EXPECT_EQ(g.ntheta, 63);
  // Ten cell-centred rings plus the boundary circle.
  EXPECT_EQ(g.nrings, 11);
  EXPECT_DOUBLE_EQ(g.ring_radius.back(), 1.0);
}

TEST(Geometry, AnnulusFullGammaIsOuterCircle) {
  const Grid g = build_grid(DomainSpec::annulus(0.5, 2.0), 0.05);
  std::size_t outer = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.radius(static_cast<int>(i)) - 2.0) < 1e-12) ++outer;
  }
  ASSERT_EQ(g.gamma_index.size(), outer);
  for (int i : g.gamma_index) EXPECT_NEAR(g.radius(i), 2.0, 1e-12);
}

TEST(Geometry, SquareInteriorCount) {
  const Grid g = build_grid(DomainSpec::rectangle(Box{{0, 0, 0}, {kPi, kPi, 0}}), kPi / 64);
  EXPECT_EQ(g.interior_index.size(), 63u * 63u);
}

TEST(Geometry, HalfCircleGamma) {
  const Grid g = build_grid(DomainSpec::disk(1.0).with_gamma(GammaSpec::arc(0.0, kPi)), 1.0 / 32);
  const double fraction = static_cast<double>(g.gamma_index.size()) / g.ntheta;
  EXPECT_NEAR(fraction, 0.5, 1.5 / g.ntheta);
}

TEST(Geometry, FullGammaMarksEveryOuterNode) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 16);
  EXPECT_EQ(g.gamma_index.size(), static_cast<std::size_t>(g.ntheta));
}

TEST(Geometry, CircleChartMeasure) {
  for (double h : {0.1, 0.05, 0.025}) {
    const Grid g = build_grid(DomainSpec::disk(1.0), h);
    const double err = std::abs(boundary_chart(g, GammaSpec::full()).measure() - 2 * kPi);
    EXPECT_LT(err, 2.0 * h * h);
  }
}

TEST(Geometry, MaskPartition) {
  for (const auto& spec : {DomainSpec::disk(1.0), DomainSpec::annulus(0.5, 2.0),
                           DomainSpec::rectangle(Box{{0, 0, 0}, {1, 2, 0}}),
                           DomainSpec::masked_union({Box{{0, 0, 0}, {1, 1, 0}}, Box{{1, 0, 0}, {2, 0.5, 0}}})}) {
    const Grid g = build_grid(spec, 0.05);
    EXPECT_EQ(g.interior_index.size() + g.boundary_index.size(), g.size());
  }
}

TEST(Geometry, CubeFaceGamma) {
  const Grid g = build_grid(
      DomainSpec::rectangle(Box{{0, 0, 0}, {1, 1, 1}}, 3).with_gamma(GammaSpec::face("z1")), 1.0 / 16);
  EXPECT_EQ(g.size(), 17u * 17u * 17u);
  // Open face: edges of the cube are excluded.
  EXPECT_EQ(g.gamma_index.size(), 15u * 15u);
  for (int i : g.gamma_index) EXPECT_NEAR(g.nodes[i][2], 1.0, 1e-12);
}

TEST(Geometry, QuadratureWeightsSumToArea) {
  const Grid disk = build_grid(DomainSpec::disk(1.0), 1.0 / 32);
  double area = 0.0;
  for (double w : disk.quad_weights) area += w;
  EXPECT_NEAR(area, kPi, 1e-2);
  const Grid rect = build_grid(DomainSpec::rectangle(Box{{0, 0, 0}, {1, 2, 0}}), 0.05);
  area = 0.0;
  for (double w : rect.quad_weights) area += w;
  EXPECT_NEAR(area, 2.0, 1e-12);
}

TEST(Geometry, Masks) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 16);
  const Mask a = ball_mask(g, {}, 0.5), b = radial_mask(g, 0.25, 1.0);
  const Mask both = mask_and(a, b), either = mask_or(a, b);
  EXPECT_EQ(mask_count(both) + mask_count(either), mask_count(a) + mask_count(b));
  EXPECT_EQ(mask_count(mask_not(a)), g.size() - mask_count(a));
  for (int i : mask_indices(a)) EXPECT_LE(g.radius(i), 0.5 + 1e-12);
}

TEST(Geometry, InvalidSpecsRejected) {
  EXPECT_THROW(DomainSpec::annulus(2.0, 1.0).validate(), Error);
  EXPECT_THROW(DomainSpec::disk(1.0).with_gamma(GammaSpec::face("x0")).validate(), Error);
  EXPECT_THROW(DomainSpec::rectangle(Box{{0, 0, 0}, {1, 1, 0}}).with_gamma(GammaSpec::arc(0, 1)).validate(),
               Error);
}
