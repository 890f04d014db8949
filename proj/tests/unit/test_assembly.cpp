#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "hlab/assembly.hpp"
#include "hlab/error.hpp"
#include "hlab/spectral.hpp"

using namespace hlab;

namespace {
constexpr double kPi = std::numbers::pi;

double bessel_j0(double x) { return boost::math::cyl_bessel_j(0, x); }

Eigen::VectorXd sample(const Grid& g, const std::function<double(const Point&)>& f) {
  return GridField::sample(g, f).values;
}

// Max nodal error of the disk solve for u = J₀(k r).
double bessel_solve_error(double h, double k) {
  const Grid g = build_grid(DomainSpec::disk(1.0), h);
  const DirichletSolver solver(assemble(g, Medium::constant(g, 1.0, 0.0, 1.5), k));
  const Eigen::VectorXd exact = sample(g, [&](const Point& p) { return bessel_j0(k * std::hypot(p[0], p[1])); });
  const Eigen::VectorXd u = solver.solve(Eigen::VectorXd::Zero(g.size()), exact);
  return (u - exact).lpNorm<Eigen::Infinity>();
}
}  // namespace

TEST(Assembly, FiniteDifferenceConsistency) {
  // u = sin x sin 2y: (Δ + 1)u = −4u.
  double prev = 0.0;
  for (int n : {32, 64}) {
    const Grid g = build_grid(DomainSpec::rectangle(Box{{0, 0, 0}, {kPi, kPi, 0}}), kPi / n);
    const DiscreteOperator op = assemble(g, Medium::constant(g, 1.0, 0.0, 1.5), 1.0);
    const Eigen::VectorXd u = sample(g, [](const Point& p) { return std::sin(p[0]) * std::sin(2 * p[1]); });
    const Eigen::VectorXd r = op.apply(u);
    double err = 0.0;
    for (int i : g.interior_index) err = std::max(err, std::abs(r[i] / op.weights()[i] + 4 * u[i]));
    EXPECT_LT(err, 20.0 / (n * n));
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.5);
    prev = err;
  }
}

TEST(Assembly, PotentialShiftsDiagonal) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 16);
  const DiscreteOperator a = assemble(g, Medium::constant(g, 1.0, 0.0, 2.0), 2.0);
  const DiscreteOperator b = assemble(g, Medium::constant(g, 1.0, 0.7, 2.0), 2.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  Eigen::VectorXd u(g.size());
  for (auto& x : u) x = n01(rng);
  const Eigen::VectorXd diff = b.apply(u) - a.apply(u);
  const Eigen::VectorXd expected = 0.7 * a.weights().cwiseProduct(u);
  EXPECT_LT((diff - expected).norm(), 1e-12 * expected.norm());
}

TEST(Assembly, LaplacianIsSymmetricAndAnnihilatesConstants) {
  const Grid g = build_grid(DomainSpec::annulus(0.5, 2.0), 0.1);
  const SparseMatrix D = graph_laplacian(g);
  EXPECT_LT((SparseMatrix(D.transpose()) - D).norm(), 1e-14 * D.norm());
  EXPECT_LT((D * Eigen::VectorXd::Ones(g.size())).norm(), 1e-12 * D.norm());
}

TEST(Assembly, ZeroDataGivesZero) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 16);
  const DirichletSolver solver(assemble(g, Medium::constant(g, 1.0, 0.0, 2.0), 3.0));
  const Eigen::VectorXd u = solver.solve(Eigen::VectorXd::Zero(g.size()), Eigen::VectorXd::Zero(g.size()));
  EXPECT_EQ(u.norm(), 0.0);
}

TEST(Assembly, BesselManufacturedSecondOrder) {
  const double coarse = bessel_solve_error(1.0 / 16, 3.0);
  const double fine = bessel_solve_error(1.0 / 32, 3.0);
  EXPECT_LT(fine, 5e-3);
  EXPECT_GT(coarse / fine, 3.5);
  EXPECT_LT(coarse / fine, 4.5);
}

TEST(Assembly, SolveIsLinear) {
  const Grid g = build_grid(DomainSpec::annulus(1.0, 2.0), 0.05);
  const DirichletSolver solver(assemble(g, Medium::constant(g, 1.2, 0.3, 2.0), 4.0));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  auto random = [&] {
    Eigen::VectorXd v(g.size());
    for (auto& x : v) x = n01(rng);
    return v;
  };
  const Eigen::VectorXd f1 = random(), f2 = random(), g1 = random(), g2 = random();
  const Eigen::VectorXd sum = solver.solve(f1 + 2 * f2, g1 + 2 * g2);
  const Eigen::VectorXd parts = solver.solve(f1, g1) + 2 * solver.solve(f2, g2);
  EXPECT_LT((sum - parts).norm(), 1e-10 * sum.norm());
  EXPECT_LT(solver.op().relative_residual(sum, f1 + 2 * f2), 1e-10);
}

TEST(Assembly, NeumannFluxOfBesselMode) {
  // ∫_{∂B_1} ∂_r J₀(k r) = −2π k J₁(k).
  const double k = 3.0;
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 64);
  const DirichletSolver solver(assemble(g, Medium::constant(g, 1.0, 0.0, 1.5), k));
  const TraceSpacePtr space = make_trace_space(g, GammaSpec::full());
  const Eigen::VectorXd data = sample(g, [&](const Point& p) { return bessel_j0(k * std::hypot(p[0], p[1])); });
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.size());
  const Eigen::VectorXd u = solver.solve(zero, data);
  const BoundaryFunctional flux = weak_neumann_trace(solver.op(), u, zero, space);
  const double expected = -2 * kPi * k * boost::math::cyl_bessel_j(1, k);
  EXPECT_NEAR(flux.nodal.sum() / expected, 1.0, 1e-2);
}

TEST(Assembly, GreenIdentityIsExact) {
  // ⟨ℓ(u_a), u_b⟩ = ⟨ℓ(u_b), u_a⟩ for two homogeneous solutions.
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 16);
  const DirichletSolver solver(assemble(g, Medium::constant(g, 1.0, 0.4, 2.0), 2.5));
  const TraceSpacePtr space = make_trace_space(g, GammaSpec::full());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.size());
  const Eigen::VectorXd a = sample(g, [](const Point& p) { return std::cos(p[0] + 2 * p[1]); });
  const Eigen::VectorXd b = sample(g, [](const Point& p) { return 1.0 + p[1] + p[0] * p[1] * p[1]; });
  const Eigen::VectorXd ua = solver.solve(zero, a), ub = solver.solve(zero, b);
  const Eigen::VectorXd la = weak_neumann_trace(solver.op(), ua, zero, space).nodal;
  const Eigen::VectorXd lb = weak_neumann_trace(solver.op(), ub, zero, space).nodal;
  const double lhs = la.dot(space->from_grid(ub)), rhs = lb.dot(space->from_grid(ua));
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

TEST(Assembly, NearResonanceRejected) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 16);
  const Medium m = Medium::constant(g, 1.0, 0.0, 1.5);
  const SpectrumReport report = compute_sigma(g, m, 4);
  const ResonanceGuard guard = make_guard(report);
  const double k_res = std::sqrt(report.eigenvalues[0]);
  EXPECT_FALSE(guard.admits(k_res));
  try {
    DirichletSolver(assemble(g, m, k_res), &guard);
    FAIL() << "expected NearResonance";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NearResonance);
  }
  const double k_ok = find_admissible_k(report, k_res, 0.01);
  EXPECT_NO_THROW(DirichletSolver(assemble(g, m, k_ok), &guard));
}

TEST(Assembly, UnderResolvedAndInvalidMedium) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 0.1);
  try {
    assemble(g, Medium::constant(g, 1.0, 0.0, 1.5), 20.0);
    FAIL() << "expected UnderResolved";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnderResolved);
  }
  EXPECT_THROW(Medium::constant(g, 3.0, 0.0, 2.0).validate(), Error);
  Medium m = Medium::constant(g, 1.0, 0.0, 2.0);
  m.V.values[0] = std::nan("");
  EXPECT_THROW(m.validate(), Error);
}
