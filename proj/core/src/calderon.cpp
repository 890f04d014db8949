#include "hlab/calderon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hlab/error.hpp"
#include "hlab/parallel.hpp"

namespace hlab {

namespace {

constexpr std::size_t kMaxNodes = 24 * 24 * 24;

void require_same_context(const DtnMatrix& a, const DtnMatrix& b) {
  require(a.grid != nullptr && a.grid == b.grid, ErrorCode::ContextMismatch, "DtN maps on different grids");
  require(a.k == b.k, ErrorCode::ContextMismatch, "DtN maps at different k");
  require(a.space && b.space, ErrorCode::ContextMismatch, "DtN map without trace space");
  require(a.space == b.space || a.space->chart().gamma_local == b.space->chart().gamma_local,
          ErrorCode::ContextMismatch, "DtN maps on different Γ");
  require(a.L.rows() == b.L.rows() && a.L.cols() == b.L.cols(), ErrorCode::ContextMismatch,
          "DtN matrix sizes differ");
}

// log(e^a + e^b).
double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double log_term(double k, double delta, int n) {
  if (delta <= 0.0) return 0.0;
  const double l = std::pow(std::abs(std::log(delta)), 1.0 / (n + 3));
  return std::pow(k + l, -2.0 / n);
}

double log_rhs(double C, double k, double delta, int n) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  const double a = delta > 0.0 ? C * std::pow(k, n + 3) + std::log(delta) : neg_inf;
  const double t = log_term(k, delta, n);
  const double b = t > 0.0 ? std::log(t) : neg_inf;
  return std::log(C) + log_add(a, b);
}

double minimal_constant(double lhs, double k, double delta, int n) {
  if (lhs <= 0.0) return 0.0;
  if (delta <= 0.0) return std::numeric_limits<double>::infinity();
  const double target = std::log(lhs);
  double lo = 0.0, hi = 1.0;
  while (log_rhs(hi, k, delta, n) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return std::numeric_limits<double>::infinity();
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid > 0.0 && log_rhs(mid, k, delta, n) >= target ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

double DtnMatrix::pairing(const Eigen::VectorXd& g1, const Eigen::VectorXd& g2) const {
  require(g1.size() == L.cols() && g2.size() == L.rows(), ErrorCode::InvalidArgument,
          "trace size does not match Γ");
  return g2.dot(L * g1);
}

double DtnMatrix::symmetry_defect() const {
  const double n = L.norm();
  return n > 0.0 ? (L - L.transpose()).norm() / n : 0.0;
}

DtnMatrix dtn_map(const Grid& grid, const Medium& medium, double k, const TraceSpacePtr& space,
                  const ResonanceGuard* guard) {
  require(grid.dim == 3 && grid.topology == Topology::Cartesian, ErrorCode::InvalidArgument,
          "DtN maps need a 3D box grid");
  require(grid.size() <= kMaxNodes, ErrorCode::InvalidArgument, "3D grid exceeds 24^3 nodes");
  require(space && &space->grid() == &grid, ErrorCode::ContextMismatch,
          "trace space belongs to another grid");
  const DirichletSolver solver(assemble(grid, medium, k), guard);

  const auto& gamma = space->chart().gamma_local;
  const std::size_t m = gamma.size();
  require(m > 0, ErrorCode::EmptyGamma, "Γ has no nodes");
  DtnMatrix out;
  out.L.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  out.grid = &grid;
  out.k = k;
  out.space = space;

  const Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  parallel_for(m, [&](std::size_t i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->size()));
    e[gamma[i]] = 1.0;
    const Eigen::VectorXd u = solver.solve_trace(BoundaryTrace::gamma_supported(space, e));
    const BoundaryFunctional l = weak_neumann_trace(solver.op(), u, f, space);
    out.L.col(static_cast<Eigen::Index>(i)) = space->restrict_to_gamma(l.nodal);
  });
  return out;
}

double dtn_distance(const DtnMatrix& a, const DtnMatrix& b) {
  require_same_context(a, b);
  const Eigen::LLT<Eigen::MatrixXd> llt(a.space->gamma_gram());
  require(llt.info() == Eigen::Success, ErrorCode::GramNotSPD, "Γ Gram is not SPD");
  const auto R = llt.matrixL();
  // R⁻¹ Δ R⁻ᵀ.
  Eigen::MatrixXd X = R.solve(a.L - b.L);
  X = R.solve(X.transpose()).transpose();
  if (X.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  return svd.singularValues()[0];
}

double AlessandriniRecord::relative() const {
  const double scale = std::max({magnitude, std::abs(volume), std::abs(boundary)});
  return scale > 0.0 ? std::abs(volume - boundary) / scale : 0.0;
}

AlessandriniRecord alessandrini_check(const DirichletSolver& s1, const DtnMatrix& l1,
                                      const DirichletSolver& s2, const DtnMatrix& l2,
                                      const Eigen::VectorXd& g1, const Eigen::VectorXd& g2) {
  require_same_context(l1, l2);
  require(&s1.grid() == l1.grid && &s2.grid() == l2.grid, ErrorCode::ContextMismatch,
          "solver and DtN map on different grids");
  const auto& space = l1.space;
  const Eigen::VectorXd u1 =
      s1.solve_trace(BoundaryTrace::gamma_supported(space, space->extend_from_gamma(g1)));
  const Eigen::VectorXd u2 =
      s2.solve_trace(BoundaryTrace::gamma_supported(space, space->extend_from_gamma(g2)));
  const Eigen::VectorXd& w = s1.op().weights();
  const Eigen::VectorXd db = s2.op().b() - s1.op().b();
  AlessandriniRecord rec;
  const Eigen::ArrayXd terms = w.array() * db.array() * u1.array() * u2.array();
  rec.volume = terms.sum();
  rec.magnitude = terms.abs().sum();
  rec.boundary = l1.pairing(g1, g2) - l2.pairing(g1, g2);
  return rec;
}

double stability_rhs(double C, double k, double delta, int n) {
  const double grow = delta > 0.0 ? std::exp(C * std::pow(k, n + 3)) * delta : 0.0;
  return C * (grow + log_term(k, delta, n));
}

StabilityRecord stability_check(const DtnMatrix& l1, const Medium& m1, const DtnMatrix& l2,
                                const Medium& m2, const Mask& omega_prime, const Box& box,
                                double amplitude) {
  require_same_context(l1, l2);
  const Grid& g = *l1.grid;
  require(omega_prime.size() == g.size(), ErrorCode::InvalidArgument, "Ω′ mask size mismatch");
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (omega_prime[n]) continue;
    require(m1.q.values[n] == m2.q.values[n] && m1.V.values[n] == m2.V.values[n],
            ErrorCode::AgreementViolation, "media differ outside Ω′");
  }
  StabilityRecord rec;
  rec.k = l1.k;
  rec.amplitude = amplitude;
  rec.delta = dtn_distance(l1, l2);
  require(rec.delta < 1.0, ErrorCode::HypothesisViolated, "DtN distance is not below 1");
  const double k2 = l1.k * l1.k;
  const GridField diff(g, k2 * (m2.q.values - m1.q.values) + (m2.V.values - m1.V.values));
  rec.lhs = hminus1_norm_fourier(diff, box);
  rec.minimal_constant = minimal_constant(rec.lhs, rec.k, rec.delta, g.dim);
  return rec;
}

UniformConstant uniform_constant(const std::vector<StabilityRecord>& records) {
  UniformConstant out;
  for (const auto& r : records) out.C = std::max(out.C, r.minimal_constant);
  out.holds = std::isfinite(out.C);
  if (!out.holds) return out;
  // Guard the bisection tolerance before validating.
  out.C *= 1.0 + 1e-12;
  for (const auto& r : records) {
    if (r.lhs > stability_rhs(out.C, r.k, r.delta)) out.holds = false;
  }
  return out;
}

}  // namespace hlab
