#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hlab/calderon.hpp"
#include "hlab/error.hpp"

using namespace hlab;

namespace {

const Box kCube{{0, 0, 0}, {1, 1, 1}};
const Point kCentre{0.5, 0.5, 0.5};

double bump(const Point& x) {
  const double r = std::hypot(x[0] - kCentre[0], x[1] - kCentre[1], x[2] - kCentre[2]) / 0.25;
  return r < 1.0 ? std::pow(1.0 - r * r, 3) : 0.0;
}

struct Cube {
  Grid grid;
  TraceSpacePtr space;
  Mask omega_prime;

  explicit Cube(double h)
      : grid(build_grid(DomainSpec::rectangle(kCube, 3).with_gamma(GammaSpec::face("z1")), h)),
        space(make_trace_space(grid, grid.spec.gamma)),
        omega_prime(ball_mask(grid, kCentre, 0.3)) {}

  Medium medium(double dq, double dv) const {
    return Medium::from_functions(
        grid, [=](const Point& x) { return 1.0 + dq * bump(x); }, [=](const Point& x) { return dv * bump(x); },
        2.0, false);
  }
};

Eigen::VectorXd gaussian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> n01;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = n01(rng);
  return v;
}

}  // namespace

TEST(Calderon, DtnIsSymmetric) {
  const Cube c(1.0 / 8);
  const DtnMatrix L = dtn_map(c.grid, c.medium(0.3, 1.0), 2.0, c.space);
  EXPECT_EQ(L.L.rows(), static_cast<Eigen::Index>(c.space->gamma_size()));
  EXPECT_LT(L.symmetry_defect(), 1e-10);
  std::mt19937_64 rng(1);
  const Eigen::VectorXd a = gaussian(rng, L.L.rows()), b = gaussian(rng, L.L.rows());
  EXPECT_NEAR(L.pairing(a, b), L.pairing(b, a), 1e-10 * std::abs(L.pairing(a, b)));
}

TEST(Calderon, DistanceIsAMetric) {
  const Cube c(1.0 / 8);
  const double k = 2.0;
  const DtnMatrix L0 = dtn_map(c.grid, c.medium(0.0, 0.0), k, c.space);
  const DtnMatrix L0b = dtn_map(c.grid, c.medium(0.0, 0.0), k, c.space);
  const DtnMatrix L1 = dtn_map(c.grid, c.medium(0.5, 0.0), k, c.space);
  const DtnMatrix L2 = dtn_map(c.grid, c.medium(0.0, 3.0), k, c.space);
  EXPECT_LE(dtn_distance(L0, L0b), 1e-10);
  const double d01 = dtn_distance(L0, L1), d10 = dtn_distance(L1, L0);
  EXPECT_GT(d01, 0.0);
  EXPECT_NEAR(d01, d10, 1e-12 * d01);
  EXPECT_LE(dtn_distance(L1, L2), d01 + dtn_distance(L0, L2) + 1e-12);
}

TEST(Calderon, DistanceIsLinearForSmallPerturbations) {
  const Cube c(1.0 / 8);
  const double k = 2.0;
  const DtnMatrix L0 = dtn_map(c.grid, c.medium(0.0, 0.0), k, c.space);
  const double d1 = dtn_distance(L0, dtn_map(c.grid, c.medium(0.01, 0.0), k, c.space));
  const double d2 = dtn_distance(L0, dtn_map(c.grid, c.medium(0.02, 0.0), k, c.space));
  EXPECT_NEAR(d2 / d1, 2.0, 0.02);
}

TEST(Calderon, AlessandriniIdentity) {
  const Cube c(1.0 / 8);
  const double k = 2.0;
  const Medium m1 = c.medium(0.0, 0.0), m2 = c.medium(0.4, 2.0);
  const DirichletSolver s1(assemble(c.grid, m1, k)), s2(assemble(c.grid, m2, k));
  const DtnMatrix L1 = dtn_map(c.grid, m1, k, c.space), L2 = dtn_map(c.grid, m2, k, c.space);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd g1 = gaussian(rng, L1.L.rows()), g2 = gaussian(rng, L1.L.rows());
    const AlessandriniRecord r = alessandrini_check(s1, L1, s2, L2, g1, g2);
    EXPECT_GT(r.magnitude, 0.0);
    EXPECT_LE(r.relative(), 1e-6);
  }
}

TEST(Calderon, DistanceStableUnderRefinement) {
  double d[2];
  int i = 0;
  for (double h : {1.0 / 8, 1.0 / 12}) {
    const Cube c(h);
    const DtnMatrix L0 = dtn_map(c.grid, c.medium(0.0, 0.0), 2.0, c.space);
    d[i++] = dtn_distance(L0, dtn_map(c.grid, c.medium(0.5, 0.0), 2.0, c.space));
  }
  EXPECT_NEAR(d[1] / d[0], 1.0, 0.1);
}

TEST(Calderon, StabilityRecordsAndUniformConstant) {
  const Cube c(1.0 / 8);
  std::vector<StabilityRecord> records;
  for (double k : {1.0, 2.0}) {
    const Medium m0 = c.medium(0.0, 0.0);
    const DtnMatrix L0 = dtn_map(c.grid, m0, k, c.space);
    for (double a : {0.1, 0.4}) {
      const Medium m1 = c.medium(a, 0.0);
      const StabilityRecord r = stability_check(L0, m0, dtn_map(c.grid, m1, k, c.space), m1, c.omega_prime, kCube, a);
      EXPECT_GT(r.lhs, 0.0);
      EXPECT_LE(r.lhs, stability_rhs(r.minimal_constant * (1 + 1e-9), k, r.delta) * (1 + 1e-12));
      records.push_back(r);
    }
  }
  const UniformConstant u = uniform_constant(records);
  EXPECT_TRUE(u.holds);
  EXPECT_GE(u.C, 1.0);
  for (const auto& r : records) EXPECT_GE(u.C, r.minimal_constant);
}

TEST(Calderon, StabilityRhsForm) {
  // |log δ| → ∞ removes the logarithmic term at δ = 0.
  EXPECT_EQ(stability_rhs(2.0, 3.0, 0.0), 0.0);
  const double d = 1e-3;
  const double expected = 1.5 * (std::exp(1.5 * std::pow(1.2, 6)) * d + std::pow(1.2 + std::pow(-std::log(d), 1.0 / 6), -2.0 / 3));
  EXPECT_NEAR(stability_rhs(1.5, 1.2, d), expected, 1e-12 * expected);
  EXPECT_LT(stability_rhs(1.0, 2.0, d), stability_rhs(1.1, 2.0, d));
}

TEST(Calderon, ContractViolations) {
  const Cube c(1.0 / 8);
  const Medium m0 = c.medium(0.0, 0.0);
  const DtnMatrix L1 = dtn_map(c.grid, m0, 1.0, c.space), L2 = dtn_map(c.grid, m0, 2.0, c.space);
  try {
    dtn_distance(L1, L2);
    FAIL() << "expected ContextMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ContextMismatch);
  }
  // A perturbation reaching outside Ω′.
  const Medium wide = Medium::from_functions(
      c.grid, [](const Point& x) { return 1.0 + 0.1 * x[0]; }, [](const Point&) { return 0.0; }, 2.0, false);
  try {
    stability_check(L1, m0, dtn_map(c.grid, wide, 1.0, c.space), wide, c.omega_prime, kCube);
    FAIL() << "expected AgreementViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AgreementViolation);
  }
  const Grid square = build_grid(DomainSpec::rectangle(Box{{0, 0, 0}, {1, 1, 0}}), 1.0 / 8);
  EXPECT_THROW(dtn_map(square, Medium::constant(square, 1.0, 0.0, 2.0), 1.0, make_trace_space(square, GammaSpec::full())),
               Error);
}
