#include "hlab/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

#include "hlab/bessel.hpp"
#include "hlab/error.hpp"
#include "hlab/stats.hpp"
#include "hlab/ucp.hpp"

namespace hlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

double planar_norm(const Point& x) { return std::hypot(x[0], x[1]); }

// sqrt(Σ w_i e^{2 log_weight_i} a_i²) by log-sum-exp over the nonzero terms.
double weighted_norm(const Grid& g, const std::vector<long double>& log_weight,
                     const Eigen::VectorXd& a) {
  long double top = -INFINITY;
  std::vector<long double> logs(g.size(), -INFINITY);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (a[i] == 0.0 || g.quad_weights[i] == 0.0) continue;
    logs[i] = 2.0L * (log_weight[i] + std::log(std::abs(static_cast<long double>(a[i])))) +
              std::log(static_cast<long double>(g.quad_weights[i]));
    top = std::max(top, logs[i]);
  }
  if (std::isinf(top)) return 0.0;
  long double s = 0.0L;
  for (long double l : logs) {
    if (!std::isinf(l)) s += std::exp(l - top);
  }
  return static_cast<double>(std::exp(0.5L * (top + std::log(s))));
}

// C^∞ step: 0 for s ≤ 0, 1 for s ≥ 1.
double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

double bump(double r, double a, double b) {
  if (r <= a || r >= b) return 0.0;
  const double s = (2.0 * r - a - b) / (b - a);
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

void require_annulus(const Grid& g) {
  require(g.topology == Topology::Polar && g.spec.kind == DomainSpec::Kind::Annulus,
          ErrorCode::GeometryViolation, "Carleman checks run on an annulus grid");
}

}  // namespace

long double carleman_log_weight(const Point& x, double tau) {
  const long double r = std::sqrt(static_cast<long double>(x[0]) * x[0] +
                                  static_cast<long double>(x[1]) * x[1] +
                                  static_cast<long double>(x[2]) * x[2]);
  return static_cast<long double>(tau) * std::log(r);
}

double CarlemanSample::ratio() const {
  const double r = rhs();
  if (r == 0.0) return lhs() == 0.0 ? 0.0 : INFINITY;
  return lhs() / r;
}

CarlemanSample carleman_check(const GridField& u, const Medium& medium, double k, double tau,
                              const CarlemanOptions& opt) {
  require(u.grid != nullptr && medium.q.grid == u.grid, ErrorCode::ContextMismatch,
          "field and medium must share a grid");
  const Grid& g = *u.grid;
  require_annulus(g);
  require(medium.monotone, ErrorCode::HypothesisViolated, "the Carleman check needs monotone q");
  require(tau >= opt.tau0, ErrorCode::InvalidArgument, "τ below τ₀");
  const std::size_t n = g.size();

  CarlemanSample s;
  s.tau = tau;
  s.k = k;
  s.mode = opt.mode;
  s.f = GridField::zeros(g);
  s.F[0] = GridField::zeros(g);
  s.F[1] = GridField::zeros(g);

  Mask support(n, 0);
  bool any = false;
  double rlo = INFINITY, rhi = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    if (u.values[i] != 0.0) {
      support[i] = 1;
      any = true;
      rlo = std::min(rlo, g.radius(static_cast<int>(i)));
      rhi = std::max(rhi, g.radius(static_cast<int>(i)));
    }
  }
  if (!any) return s;
  require(layer_gap(g, support, g.boundary_mask) >= 3, ErrorCode::SupportViolation,
          "u needs two zero layers next to the boundary");

  Medium bare = medium;
  bare.V = GridField::zeros(g);
  const DiscreteOperator op(g, bare, k);
  const Eigen::VectorXd w = op.weights();
  // (Δ_h + k²q)u = (−D u)/w + k²q u.
  const Eigen::VectorXd f0 = op.apply(u.values).cwiseQuotient(w);

  if (opt.mode == SplitMode::SourceOnly) {
    s.f.values = f0;
  } else {
    Medium laplace = Medium::constant(g, 1.0, 0.0, medium.kappa);
    const DirichletSolver poisson(DiscreteOperator(g, laplace, 0.0));
    const Eigen::VectorXd phi = poisson.solve(f0, Eigen::VectorXd::Zero(n));
    const double r0 = g.spec.r_inner, r1 = g.spec.r_outer;
    const double c0 = std::min(opt.collar, 0.5 * (rlo - r0));
    const double c1 = std::min(opt.collar, 0.5 * (r1 - rhi));
    Eigen::VectorXd psi(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = g.radius(static_cast<int>(i));
      const double chi = smooth_step((r - r0 - c0) / (rlo - r0 - c0)) *
                         smooth_step((r1 - c1 - r) / (r1 - c1 - rhi));
      psi[i] = chi * phi[i];
    }
    const GridField psi_field(g, psi);
    const Eigen::MatrixXd grad = nodal_gradient(psi_field, g.full_mask());
    s.F[0].values = grad.col(0);
    s.F[1].values = grad.col(1);
    // f = f0 − Δ_h ψ, Δ_h ψ = −Dψ/w.
    s.f.values = f0 + (op.laplacian() * psi).cwiseQuotient(w);
  }

  std::vector<long double> lw(n), lw1(n), lw2(n);
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = carleman_log_weight(g.nodes[i], tau);
    const long double lr = std::log(static_cast<long double>(planar_norm(g.nodes[i])));
    lw1[i] = lw[i] + lr;
    lw2[i] = lw[i] + 2.0L * lr;
  }
  const Eigen::MatrixXd grad_u = nodal_gradient(u, g.full_mask());
  const Eigen::VectorXd grad_abs = grad_u.rowwise().norm();
  const Eigen::VectorXd qu = medium.q.values.cwiseSqrt().cwiseProduct(u.values);

  s.lhs_terms[0] = tau * weighted_norm(g, lw, u.values);
  s.lhs_terms[1] = weighted_norm(g, lw1, grad_abs);
  s.lhs_terms[2] = std::sqrt(tau) * k * weighted_norm(g, lw1, qu);
  s.rhs_terms[0] = weighted_norm(g, lw2, s.f.values);
  s.rhs_terms[1] = std::max(tau, k) * (weighted_norm(g, lw1, s.F[0].values) +
                                       weighted_norm(g, lw1, s.F[1].values));
  return s;
}

double commutator_positivity(const Medium& medium, double k, double tau) {
  const Grid& g = *medium.q.grid;
  const Eigen::MatrixXd grad = nodal_gradient(medium.q, g.full_mask());
  double lo = INFINITY;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point& x = g.nodes[i];
    const double radial = x[0] * grad(i, 0) + x[1] * grad(i, 1);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    lo = std::min(lo, 2.0 * (1.0 + tau) * k * k * r2 * (2.0 * medium.q.values[i] + radial));
  }
  return lo;
}

GridField random_carleman_sample(const Grid& g, double k, std::uint64_t seed, int kind) {
  require_annulus(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  const double r0 = g.spec.r_inner, r1 = g.spec.r_outer;
  const double margin = std::max(0.05 * (r1 - r0), 4.0 * g.h);
  const double a = r0 + margin + 0.3 * (r1 - r0) * unit(rng);
  const double b = r1 - margin - 0.3 * (r1 - r0) * unit(rng);

  GridField u = GridField::zeros(g);
  if (kind == 0) {
    constexpr int kAngular = 8;
    constexpr int kRadial = 4;
    double ca[kAngular + 1], sa[kAngular + 1], cr[kRadial];
    for (int m = 0; m <= kAngular; ++m) {
      ca[m] = normal(rng) / (1.0 + m);
      sa[m] = normal(rng) / (1.0 + m);
    }
    for (double& c : cr) c = normal(rng);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = g.radius(static_cast<int>(i));
      const double env = bump(r, a, b);
      if (env == 0.0) continue;
      const double t = g.theta(static_cast<int>(i));
      double ang = 0.0, rad = 0.0;
      for (int m = 0; m <= kAngular; ++m) ang += ca[m] * std::cos(m * t) + sa[m] * std::sin(m * t);
      for (int j = 0; j < kRadial; ++j) rad += cr[j] * std::cos(j * kPi * (r - a) / (b - a));
      u.values[i] = env * ang * rad;
    }
  } else {
    const int ell = static_cast<int>(unit(rng) * (2.0 * k + 6.0));
    const double phase = 2.0 * kPi * unit(rng);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = g.radius(static_cast<int>(i));
      const double env = bump(r, a, b);
      if (env == 0.0) continue;
      u.values[i] = env * bessel_j(ell, k * r) * std::cos(ell * g.theta(static_cast<int>(i)) + phase);
    }
  }
  return u;
}

ImprovedUcpRecord improved_ucp_probe(const DirichletSolver& solver, const TraceSpacePtr& outer,
                                     int ell, double delta, double mu, double nu) {
  const Grid& g = solver.grid();
  require_annulus(g);
  require(delta > 0.0 && delta < g.spec.r_outer - g.spec.r_inner, ErrorCode::InvalidArgument,
          "δ must lie inside the annulus");
  const double k = solver.op().k();
  const double scale = std::abs(bessel_y(ell, k * g.spec.r_inner));
  Eigen::VectorXd data = Eigen::VectorXd::Zero(g.size());
  for (int i : g.boundary_index) {
    data[i] = bessel_y(ell, k * g.radius(i)) * std::cos(ell * g.theta(i)) / scale;
  }
  const GridField u(g, solver.solve(Eigen::VectorXd::Zero(g.size()), data));

  ImprovedUcpRecord rec;
  rec.ell = ell;
  rec.k = k;
  rec.delta = delta;
  rec.eta = cauchy_data_size(solver.op(), u, outer);
  rec.M = norm(u, NormKind::H1);
  rec.full = norm(u, NormKind::L2);
  rec.lhs = norm(u, NormKind::L2, radial_mask(g, g.spec.r_inner + delta, g.spec.r_outer));
  require(k * k * k * rec.eta <= rec.M, ErrorCode::HypothesisViolated, "k³η exceeds M");
  const double x = k * k * k * rec.eta;
  rec.rhs_log = x > 0.0 ? std::pow(std::abs(std::log(x / rec.M)), -mu) * rec.M : 0.0;
  rec.rhs_poly = std::pow(x, nu) * std::pow(rec.M, 1.0 - nu);
  return rec;
}

ImprovedUcpFit fit_improved_ucp(const std::vector<ImprovedUcpRecord>& records) {
  require(records.size() >= 3, ErrorCode::DegenerateSamples, "at least 3 records are needed");
  std::vector<double> ks;
  for (const auto& r : records) {
    require(r.lhs > 0.0 && r.eta > 0.0 && r.M > 0.0, ErrorCode::DegenerateSamples,
            "record with vanishing norms");
    if (std::find(ks.begin(), ks.end(), r.k) == ks.end()) ks.push_back(r.k);
  }
  std::sort(ks.begin(), ks.end());
  std::vector<std::vector<double>> rows;
  std::vector<double> y, x;
  for (const auto& r : records) {
    std::vector<double> row(1 + ks.size(), 0.0);
    x.push_back(std::log(r.k * r.k * r.k * r.eta / r.M));
    y.push_back(std::log(r.lhs / r.M));
    row[0] = x.back();
    row[1 + (std::find(ks.begin(), ks.end(), r.k) - ks.begin())] = 1.0;
    rows.push_back(std::move(row));
  }
  const std::vector<double> beta = least_squares(rows, y);
  ImprovedUcpFit fit;
  fit.nu = std::clamp(beta[0], 0.01, 0.99);
  for (double k : ks) {
    double worst = -INFINITY;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].k == k) worst = std::max(worst, y[i] - fit.nu * x[i]);
    }
    fit.log_c.emplace_back(k, worst);
  }
  return fit;
}

void write_carleman_csv(const std::vector<CarlemanSample>& samples, const std::string& path,
                        const std::string& header) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::InvalidArgument, "cannot open " + path);
  os << header;
  os << "sample,tau,k,lhs_u,lhs_grad,lhs_k,rhs_f,rhs_F,ratio\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    os << i << ',' << s.tau << ',' << s.k << ',' << s.lhs_terms[0] << ',' << s.lhs_terms[1] << ','
       << s.lhs_terms[2] << ',' << s.rhs_terms[0] << ',' << s.rhs_terms[1] << ',' << s.ratio()
       << '\n';
  }
}

}  // namespace hlab
