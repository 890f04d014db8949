#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "hlab/error.hpp"
#include "hlab/ucp.hpp"

using namespace hlab;

namespace {
constexpr double kPi = std::numbers::pi;

double radial_l2(double k, double rho) {
  auto f = [&](double r) { return 2 * kPi * r * std::pow(boost::math::cyl_bessel_j(0, k * r), 2); };
  return std::sqrt(boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, rho));
}

std::vector<BallTriple> random_triples(const Grid& g, double k, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0, 2 * kPi), spread(0.0, 0.3);
  std::vector<BallTriple> out;
  for (int i = 0; i < count; ++i) {
    const Point c{spread(rng) * std::cos(angle(rng)), spread(rng) * std::sin(angle(rng)), 0};
    const GridField u = sample_mode(g, k, i % 5, c, angle(rng));
    const double r = 0.25 + 0.1 * (i % 3);
    out.push_back(three_ball_ratio(u, {}, r, k));
  }
  return out;
}

ThreeBallsFit manual_fit(double k, bool boundary) {
  ThreeBallsFit f;
  f.alpha = 0.5;
  f.boundary = boundary;
  f.log_c[k] = 1.0;
  return f;
}
}  // namespace

TEST(Ucp, BallNormsMatchRadialQuadrature) {
  const double k = 4.0;
  const Grid g = build_grid(DomainSpec::disk(2.0), 1.0 / 32);
  const GridField u = sample_mode(g, k, 0, {}, 0.0);
  const BallTriple t = three_ball_ratio(u, {}, 0.4, k);
  // Node balls cover whole cells; compare at the radius of equal area.
  auto effective = [&](double rho) {
    double area = 0.0;
    for (int i : mask_indices(ball_mask(g, {}, rho))) area += g.quad_weights[i];
    return std::sqrt(area / kPi);
  };
  EXPECT_NEAR(t.inner / radial_l2(k, effective(0.2)), 1.0, 5e-3);
  EXPECT_NEAR(t.middle / radial_l2(k, effective(0.4)), 1.0, 5e-3);
  EXPECT_NEAR(t.outer / radial_l2(k, effective(0.8)), 1.0, 5e-3);
}

TEST(Ucp, MarginIsScaleInvariant) {
  const Grid g = build_grid(DomainSpec::disk(2.0), 1.0 / 32);
  const auto train = random_triples(g, 3.0, 20, 1);
  const ThreeBallsFit fit = estimate_exponent(train);
  EXPECT_GT(fit.alpha, 0.0);
  EXPECT_LT(fit.alpha, 1.0);
  for (const auto& t : train) EXPECT_GE(fit.margin(t), -1e-12);
  const GridField u = sample_mode(g, 3.0, 2, {0.1, -0.2, 0}, 0.3);
  const BallTriple a = three_ball_ratio(u, {}, 0.3, 3.0);
  const BallTriple b = three_ball_ratio(1e6 * u, {}, 0.3, 3.0);
  EXPECT_NEAR(fit.margin(a), fit.margin(b), 1e-10);
}

TEST(Ucp, DegenerateSampleSets) {
  const Grid g = build_grid(DomainSpec::disk(2.0), 1.0 / 32);
  auto few = random_triples(g, 3.0, 5, 2);
  EXPECT_THROW(estimate_exponent(few), Error);
  auto same = std::vector<BallTriple>(12, few.front());
  try {
    estimate_exponent(same);
    FAIL() << "expected DegenerateSamples";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSamples);
  }
  const GridField zero = GridField::zeros(g);
  auto zeros = random_triples(g, 3.0, 12, 3);
  zeros[4] = three_ball_ratio(zero, {}, 0.3, 3.0);
  EXPECT_THROW(estimate_exponent(zeros), Error);
}

TEST(Ucp, GeometryGuards) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 32);
  const GridField u = sample_mode(g, 2.0, 1, {}, 0.0);
  // B_{4r} leaves the disk.
  EXPECT_THROW(three_ball_ratio(u, {0.5, 0, 0}, 0.25, 2.0), Error);
  // r below eight cells.
  EXPECT_THROW(three_ball_ratio(u, {}, 0.1, 2.0), Error);
  // Boundary centre off the boundary.
  EXPECT_THROW(boundary_ball_ratio(u, GammaSpec::full(), {0.9, 0, 0}, 0.25, 2.0, 0.1), Error);
}

TEST(Ucp, ChainDepthGrowsLogarithmically) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 64);
  const GridField u = sample_mode(g, 4.0, 0, {}, 0.0);
  ChainParams p;
  p.interior = manual_fit(4.0, false);
  p.boundary = manual_fit(4.0, true);
  p.start = {1.0, 0.0, 0.0};
  p.k = 4.0;
  std::vector<double> depth;
  for (double eps : {0.2, 0.1, 0.05}) {
    const ChainResult r = chain_propagate(u, 0.05, 1.0, eps, p);
    depth.push_back(r.n_balls);
    EXPECT_LE(r.measured_interior, r.measured);
    EXPECT_GT(r.layer_measure, 0.0);
  }
  EXPECT_LT(depth[0], depth[1]);
  EXPECT_LT(depth[1], depth[2]);
  // Equal steps in log ε give roughly equal increments in depth.
  const double d1 = depth[1] - depth[0], d2 = depth[2] - depth[1];
  EXPECT_LT(std::abs(d1 - d2), 0.5 * std::max(d1, d2));
}

TEST(Ucp, ChainBoundMonotoneInEta) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 32);
  const GridField u = GridField::zeros(g);
  ChainParams p;
  p.interior = manual_fit(2.0, false);
  p.boundary = manual_fit(2.0, true);
  p.start = {1.0, 0.0, 0.0};
  p.k = 2.0;
  const ChainResult small = chain_propagate(u, 1e-4, 1.0, 0.1, p);
  const ChainResult large = chain_propagate(u, 1e-2, 1.0, 0.1, p);
  EXPECT_EQ(small.measured, 0.0);
  EXPECT_LT(small.bound_interior, large.bound_interior);
  EXPECT_EQ(small.n_balls, large.n_balls);
}

TEST(Ucp, CauchyDataOfModeSolution) {
  const Grid g = build_grid(DomainSpec::disk(1.0).with_gamma(GammaSpec::arc(-0.5, 0.5)), 1.0 / 32);
  const DirichletSolver solver(assemble(g, Medium::constant(g, 1.0, 0.0, 2.0), 3.0));
  const TraceSpacePtr space = make_trace_space(g, g.spec.gamma);
  const GridField u = mode_solution(solver, 2, {}, 0.0);
  const double eta = cauchy_data_size(solver.op(), u, space);
  EXPECT_GT(eta, 0.0);
  EXPECT_NEAR(cauchy_data_size(solver.op(), -3.0 * u, space), 3.0 * eta, 1e-10 * eta);
  // The solved mode agrees with the sampled global mode.
  const GridField exact = sample_mode(g, 3.0, 2, {}, 0.0);
  EXPECT_LT(norm(u - exact, NormKind::L2), 1e-2 * norm(exact, NormKind::L2));
}

TEST(Ucp, CaccioppoliRatioBounded) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 32);
  for (double k : {2.0, 4.0, 8.0}) {
    const GridField u = sample_mode(g, k, 1, {}, 0.4);
    const double ratio = caccioppoli_ratio(u, k, 0.2);
    EXPECT_GT(ratio, 0.1);
    EXPECT_LT(ratio, 10.0);
  }
}
