#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hlab/carleman.hpp"
#include "hlab/error.hpp"

using namespace hlab;

namespace {
Medium monotone_medium(const Grid& g) {
  return Medium::from_functions(
      g, [](const Point& p) { return 1.0 + 0.1 * (p[0] * p[0] + p[1] * p[1]); },
      [](const Point&) { return 0.0; }, 2.0, true);
}
}  // namespace

TEST(Carleman, LogWeight) {
  EXPECT_DOUBLE_EQ(static_cast<double>(carleman_log_weight({1.5, 0, 0}, 40.0)), 40.0 * std::log(1.5));
  // Far beyond double range as a weight, finite as a logarithm.
  EXPECT_TRUE(std::isfinite(static_cast<double>(carleman_log_weight({2.0, 0, 0}, 5000.0))));
}

TEST(Carleman, ZeroFieldHasZeroRatio) {
  const Grid g = build_grid(DomainSpec::annulus(1.0, 2.0), 0.05);
  const CarlemanSample s = carleman_check(GridField::zeros(g), monotone_medium(g), 2.0, 20.0);
  EXPECT_EQ(s.lhs(), 0.0);
  EXPECT_EQ(s.rhs(), 0.0);
  EXPECT_EQ(s.ratio(), 0.0);
}

TEST(Carleman, CommutatorOfConstantMedium) {
  // q = 1: min 2(1+τ)k²|x|²·2 sits on |x| = 1.
  const Grid g = build_grid(DomainSpec::annulus(1.0, 2.0), 0.05);
  const Medium m = Medium::constant(g, 1.0, 0.0, 2.0);
  EXPECT_NEAR(commutator_positivity(m, 3.0, 10.0), 4.0 * 11.0 * 9.0, 1e-9);
}

TEST(Carleman, RatioUniformInTau) {
  const Grid g = build_grid(DomainSpec::annulus(1.0, 2.0), 0.025);
  const Medium m = monotone_medium(g);
  const double k = 4.0;
  std::vector<double> max_ratio;
  for (double tau : {10.0, 20.0, 40.0, 80.0}) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const CarlemanSample s = carleman_check(random_carleman_sample(g, k, seed, seed % 2), m, k, tau);
      ASSERT_GT(s.rhs(), 0.0);
      worst = std::max(worst, s.ratio());
    }
    max_ratio.push_back(worst);
  }
  for (std::size_t i = 1; i < max_ratio.size(); ++i) {
    const double change = max_ratio[i] / max_ratio[i - 1];
    EXPECT_LE(std::max(change, 1.0 / change), 2.0);
  }
}

TEST(Carleman, DivergenceSplitIsBounded) {
  const Grid g = build_grid(DomainSpec::annulus(1.0, 2.0), 0.025);
  const Medium m = monotone_medium(g);
  CarlemanOptions opt;
  opt.mode = SplitMode::Divergence;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const GridField u = random_carleman_sample(g, 4.0, seed, 0);
    const CarlemanSample s = carleman_check(u, m, 4.0, 20.0, opt);
    EXPECT_GT(s.rhs_terms[1], 0.0);
    EXPECT_TRUE(std::isfinite(s.ratio()));
    EXPECT_GT(s.ratio(), 0.0);
  }
}

TEST(Carleman, Preconditions) {
  const Grid annulus = build_grid(DomainSpec::annulus(1.0, 2.0), 0.05);
  const GridField u = random_carleman_sample(annulus, 2.0, 1, 0);
  Medium flat = monotone_medium(annulus);
  flat.monotone = false;
  try {
    carleman_check(u, flat, 2.0, 20.0);
    FAIL() << "expected HypothesisViolated";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HypothesisViolated);
  }
  EXPECT_THROW(carleman_check(u, monotone_medium(annulus), 2.0, 5.0), Error);
  const GridField edge = GridField::sample(annulus, [](const Point&) { return 1.0; });
  try {
    carleman_check(edge, monotone_medium(annulus), 2.0, 20.0);
    FAIL() << "expected SupportViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SupportViolation);
  }
  const Grid disk = build_grid(DomainSpec::disk(2.0), 0.05);
  EXPECT_THROW(random_carleman_sample(disk, 2.0, 1, 0), Error);
}

TEST(Carleman, ImprovedUcpProbeHypothesis) {
  const Grid g = build_grid(DomainSpec::annulus(1.0, 2.0), 0.025);
  const DirichletSolver solver(assemble(g, Medium::constant(g, 1.0, 0.0, 2.0), 2.0));
  const TraceSpacePtr outer = make_trace_space(g, GammaSpec::full());
  const ImprovedUcpRecord r = improved_ucp_probe(solver, outer, 12, 0.2);
  EXPECT_LE(8.0 * r.eta, r.M);
  EXPECT_LE(r.lhs, r.full);
  EXPECT_GT(r.rhs_log, 0.0);
  EXPECT_THROW(improved_ucp_probe(solver, outer, 12, 1.5), Error);
}
