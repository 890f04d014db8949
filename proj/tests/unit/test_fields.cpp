#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "hlab/error.hpp"
#include "hlab/fields.hpp"

using namespace hlab;

namespace {
constexpr double kPi = std::numbers::pi;

double radius_of(const Point& x) { return std::hypot(x[0], x[1]); }
}  // namespace

TEST(Fields, ConstantL2OnDisk) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 32);
  const GridField one = GridField::sample(g, [](const Point&) { return 1.0; });
  EXPECT_NEAR(norm(one, NormKind::L2), std::sqrt(kPi), 5e-3);
  EXPECT_NEAR(norm(one, NormKind::H1Semi), 0.0, 1e-12);
}

TEST(Fields, LinearFunctionH1) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 32);
  const GridField x = GridField::sample(g, [](const Point& p) { return p[0]; });
  EXPECT_NEAR(norm(x, NormKind::H1Semi), std::sqrt(kPi), 1e-2);
  EXPECT_NEAR(norm(x, NormKind::H1), std::sqrt(kPi + kPi / 4), 1e-2);
}

TEST(Fields, BesselModeAgainstRadialQuadrature) {
  // ∫_{B_1} J₀(5r)² and ∫ |∇J₀(5r)|² by adaptive radial quadrature.
  const double k = 5.0;
  auto l2 = [&](double r) { return 2 * kPi * r * std::pow(boost::math::cyl_bessel_j(0, k * r), 2); };
  auto grad = [&](double r) { return 2 * kPi * r * std::pow(k * boost::math::cyl_bessel_j(1, k * r), 2); };
  using Q = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double l2_ref = std::sqrt(Q::integrate(l2, 0.0, 1.0));
  const double semi_ref = std::sqrt(Q::integrate(grad, 0.0, 1.0));
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 64);
  const GridField u = GridField::sample(g, [&](const Point& p) { return std::cyl_bessel_j(0.0, k * radius_of(p)); });
  EXPECT_NEAR(norm(u, NormKind::L2) / l2_ref, 1.0, 5e-3);
  EXPECT_NEAR(norm(u, NormKind::H1Semi) / semi_ref, 1.0, 1e-2);
}

TEST(Fields, NormAxioms) {
  const Grid g = build_grid(DomainSpec::annulus(0.5, 2.0), 0.05);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd a(g.size()), b(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) a[i] = n01(rng), b[i] = n01(rng);
    const GridField u(g, a), v(g, b);
    for (NormKind kind : {NormKind::L2, NormKind::H1, NormKind::H1Semi}) {
      EXPECT_LE(norm(u + v, kind), norm(u, kind) + norm(v, kind) + 1e-12);
      EXPECT_NEAR(norm(-2.5 * u, kind), 2.5 * norm(u, kind), 1e-10 * norm(u, kind));
    }
    EXPECT_LE(std::abs(inner(u, v, g.full_mask())), norm(u, NormKind::L2) * norm(v, NormKind::L2) + 1e-12);
  }
}

TEST(Fields, TraceNormsOnCircle) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 64);
  const TraceSpacePtr space = make_trace_space(g, GammaSpec::full());
  const auto& chart = space->chart();
  Eigen::VectorXd one = Eigen::VectorXd::Ones(chart.size());
  EXPECT_NEAR(space->norm(one, 0.5), std::sqrt(2 * kPi), 1e-10);
  for (int m : {1, 3, 6}) {
    Eigen::VectorXd t(chart.size());
    for (std::size_t i = 0; i < chart.size(); ++i) t[i] = std::cos(m * g.theta(chart.nodes[i]));
    const double ref = std::sqrt(kPi * std::sqrt(1.0 + m * m));
    EXPECT_NEAR(space->norm(t, 0.5) / ref, 1.0, 1e-2) << "m=" << m;
    EXPECT_NEAR(space->norm(t, 0.0) / std::sqrt(kPi), 1.0, 1e-6);
  }
}

TEST(Fields, RieszRepresentation) {
  const Grid g = build_grid(DomainSpec::disk(1.0).with_gamma(GammaSpec::arc(0.2, 2.5)), 1.0 / 16);
  const TraceSpacePtr space = make_trace_space(g, g.spec.gamma);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  Eigen::VectorXd l = Eigen::VectorXd::Zero(space->size());
  for (int i : space->chart().gamma_local) l[i] = n01(rng);
  const Eigen::VectorXd r = space->riesz(l);
  const Eigen::MatrixXd G = space->gram(0.5);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(space->size());
    for (int i : space->chart().gamma_local) phi[i] = n01(rng);
    const double lhs = l.dot(phi);
    const double rhs = r.dot(G * phi);
    EXPECT_NEAR(lhs, rhs, 1e-9 * (std::abs(lhs) + 1.0));
  }
  EXPECT_NEAR(space->dual_norm(l), space->norm(r, 0.5), 1e-9 * space->dual_norm(l));
  for (std::size_t i = 0; i < space->size(); ++i) {
    if (!space->chart().gamma[i]) EXPECT_EQ(r[i], 0.0);
  }
}

TEST(Fields, GaussianHMinusOne) {
  // F = exp(−|x|²/(2s²)): ‖F‖²_{H^{-1}} = π s⁴ e^{s²} E₁(s²).
  const double s = 0.1;
  const Box box{{-1, -1, 0}, {1, 1, 0}};
  const Grid g = build_grid(DomainSpec::rectangle(box), 1.0 / 64);
  const GridField f = GridField::sample(g, [&](const Point& p) {
    const double r2 = p[0] * p[0] + p[1] * p[1];
    return r2 < 0.81 ? std::exp(-r2 / (2 * s * s)) : 0.0;
  });
  const double ref = std::sqrt(kPi * std::pow(s, 4) * std::exp(s * s) * boost::math::expint(1, s * s));
  EXPECT_NEAR(hminus1_norm_fourier(f, box) / ref, 1.0, 1e-3);
}

TEST(Fields, HMinusOneProperties) {
  const Box box{{0, 0, 0}, {1, 1, 0}};
  const Grid g = build_grid(DomainSpec::rectangle(box), 1.0 / 32);
  auto bump = [&](double cx, double cy, double rad) {
    return GridField::sample(g, [=](const Point& p) {
      const double r = std::hypot(p[0] - cx, p[1] - cy) / rad;
      return r < 1 ? std::pow(1 - r * r, 3) : 0.0;
    });
  };
  const GridField a = bump(0.4, 0.5, 0.2), b = bump(0.6, 0.55, 0.25);
  const double na = hminus1_norm_fourier(a, box), nb = hminus1_norm_fourier(b, box);
  EXPECT_LE(hminus1_norm_fourier(a + b, box), na + nb + 1e-12);
  EXPECT_NEAR(hminus1_norm_fourier(3.0 * a, box), 3.0 * na, 1e-12 * na);
  EXPECT_LT(na, norm(a, NormKind::L2));
  EXPECT_THROW(hminus1_norm_fourier(GridField::sample(g, [](const Point&) { return 1.0; }), box), Error);
}
