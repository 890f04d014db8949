#include "hlab/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hlab/error.hpp"

namespace hlab {

void Medium::validate() const {
  require(q.grid != nullptr && q.grid == V.grid, ErrorCode::ContextMismatch,
          "q and V live on different grids");
  require(kappa > 1.0, ErrorCode::InvalidArgument, "kappa must exceed 1");
  const double lo = 1.0 / kappa;
  for (Eigen::Index i = 0; i < q.values.size(); ++i) {
    require(std::isfinite(q.values[i]) && std::isfinite(V.values[i]), ErrorCode::InvalidArgument,
            "medium has non-finite samples");
    require(q.values[i] >= lo && q.values[i] <= kappa, ErrorCode::InvalidArgument,
            "q leaves [1/kappa, kappa]");
  }
  if (monotone) {
    require(min_radial_derivative(*this) >= -1e-10, ErrorCode::InvalidArgument,
            "q is not radially nondecreasing");
  }
}

Medium Medium::constant(const Grid& g, double qv, double Vv, double kappa) {
  Medium m;
  m.q = GridField(g, Eigen::VectorXd::Constant(g.size(), qv));
  m.V = GridField(g, Eigen::VectorXd::Constant(g.size(), Vv));
  m.kappa = kappa;
  m.monotone = true;
  m.validate();
  return m;
}

Medium Medium::from_functions(const Grid& g, const std::function<double(const Point&)>& q,
                              const std::function<double(const Point&)>& V, double kappa,
                              bool monotone) {
  Medium m;
  m.q = GridField::sample(g, q);
  m.V = GridField::sample(g, V);
  m.kappa = kappa;
  m.monotone = monotone;
  m.validate();
  return m;
}

double min_radial_derivative(const Medium& medium) {
  const Grid& g = *medium.q.grid;
  const Eigen::MatrixXd grad = nodal_gradient(medium.q, g.full_mask());
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int d = 0; d < g.dim; ++d) s += grad(i, d) * g.nodes[i][d];
    lo = std::min(lo, s);
  }
  return lo;
}

double resolution_limit(double k, double kappa) {
  return 2.0 * std::numbers::pi / (10.0 * k * std::sqrt(kappa));
}

double ResonanceGuard::distance(double k) const {
  double d = std::numeric_limits<double>::infinity();
  for (double lam : eigenvalues) d = std::min(d, std::abs(k * k - lam));
  return d;
}

double ResonanceGuard::threshold(double k) const {
  return std::max(c * std::pow(k, 2 - dim), guard_factor * disc_error);
}

SparseMatrix graph_laplacian(const Grid& grid, const Mask& mask) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(grid.edges.size() * 4);
  for (const auto& e : grid.edges) {
    if (!mask.empty() && !(mask[e.a] && mask[e.b])) continue;
    t.emplace_back(e.a, e.a, e.weight);
    t.emplace_back(e.b, e.b, e.weight);
    t.emplace_back(e.a, e.b, -e.weight);
    t.emplace_back(e.b, e.a, -e.weight);
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  SparseMatrix D(n, n);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

SparseMatrix graph_laplacian(const Grid& grid) { return graph_laplacian(grid, Mask{}); }

DiscreteOperator::DiscreteOperator(const Grid& grid, Medium medium, double k, Mask domain)
    : grid_(&grid), medium_(std::move(medium)), k_(k), domain_(std::move(domain)) {
  require(medium_.q.grid == &grid, ErrorCode::ContextMismatch, "medium sampled on another grid");
  const auto n = static_cast<Eigen::Index>(grid.size());
  w_ = Eigen::Map<const Eigen::VectorXd>(grid.quad_weights.data(), n);
  b_ = k * k * medium_.q.values + medium_.V.values;
  if (domain_.empty()) {
    D_ = graph_laplacian(grid);
    unknowns_ = grid.interior_index;
    dirichlet_ = grid.boundary_index;
  } else {
    require(domain_.size() == grid.size(), ErrorCode::RegionMismatch, "domain mask size mismatch");
    D_ = graph_laplacian(grid, domain_);
    const Mask edge = subdomain_boundary(grid, domain_);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!domain_[i]) continue;
      (edge[i] ? dirichlet_ : unknowns_).push_back(static_cast<int>(i));
    }
    require(!unknowns_.empty(), ErrorCode::GeometryViolation, "domain mask has no interior nodes");
  }

  std::vector<int> row_of(grid.size(), -1), col_of(grid.size(), -1);
  for (std::size_t i = 0; i < unknowns_.size(); ++i) row_of[unknowns_[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < dirichlet_.size(); ++i) col_of[dirichlet_[i]] = static_cast<int>(i);

  std::vector<Eigen::Triplet<double>> tii, tib;
  for (int r : unknowns_) {
    tii.emplace_back(row_of[r], row_of[r], w_[r] * b_[r]);
  }
  for (int outer = 0; outer < D_.outerSize(); ++outer) {
    for (SparseMatrix::InnerIterator it(D_, outer); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (row_of[r] < 0) continue;
      if (row_of[c] >= 0) tii.emplace_back(row_of[r], row_of[c], -it.value());
      else tib.emplace_back(row_of[r], col_of[c], -it.value());
    }
  }
  const auto ni = static_cast<Eigen::Index>(unknowns_.size());
  const auto nb = static_cast<Eigen::Index>(dirichlet_.size());
  A_ii_.resize(ni, ni);
  A_ii_.setFromTriplets(tii.begin(), tii.end());
  A_ib_.resize(ni, nb);
  A_ib_.setFromTriplets(tib.begin(), tib.end());
}

Eigen::VectorXd DiscreteOperator::apply(const Eigen::VectorXd& u) const {
  return -(D_ * u) + w_.cwiseProduct(b_).cwiseProduct(u);
}

double DiscreteOperator::relative_residual(const Eigen::VectorXd& u, const Eigen::VectorXd& f) const {
  const Eigen::VectorXd Du = D_ * u;
  double num = 0.0, scale = 0.0;
  for (int i : unknowns_) {
    const double r = -Du[i] + w_[i] * (b_[i] * u[i] - f[i]);
    num += r * r;
    scale += Du[i] * Du[i] + w_[i] * w_[i] * (b_[i] * b_[i] * u[i] * u[i] + f[i] * f[i]);
  }
  return scale > 0.0 ? std::sqrt(num / scale) : std::sqrt(num);
}

DiscreteOperator assemble(const Grid& grid, const Medium& medium, double k, const Mask& domain) {
  require(k >= 1.0, ErrorCode::InvalidArgument, "frequency k must be at least 1");
  require(grid.h <= resolution_limit(k, medium.kappa) * (1.0 + 1e-12), ErrorCode::UnderResolved,
          "fewer than ten points per wavelength");
  return DiscreteOperator(grid, medium, k, domain);
}

DirichletSolver::DirichletSolver(DiscreteOperator op, const ResonanceGuard* guard) : op_(std::move(op)) {
  if (guard != nullptr) {
    require(guard->admits(op_.k()), ErrorCode::NearResonance,
            "k² lies inside the resonance guard band");
  }
  lu_.analyzePattern(op_.interior_matrix());
  lu_.factorize(op_.interior_matrix());
  require(lu_.info() == Eigen::Success, ErrorCode::SolverBreakdown,
          "sparse factorization failed (operator singular)");
}

Eigen::VectorXd DirichletSolver::solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  const Grid& grid = op_.grid();
  require(static_cast<std::size_t>(f.size()) == grid.size() &&
              static_cast<std::size_t>(g.size()) == grid.size(),
          ErrorCode::RegionMismatch, "solve inputs must be grid-sized");
  const auto& I = op_.unknowns();
  const auto& B = op_.dirichlet_nodes();
  Eigen::VectorXd gb(B.size());
  for (std::size_t i = 0; i < B.size(); ++i) gb[i] = g[B[i]];
  Eigen::VectorXd rhs(I.size());
  for (std::size_t i = 0; i < I.size(); ++i) rhs[i] = op_.weights()[I[i]] * f[I[i]];
  rhs -= op_.coupling() * gb;
  require(rhs.allFinite(), ErrorCode::InvalidArgument, "non-finite source or boundary data");

  Eigen::VectorXd x = lu_.solve(rhs);
  // Refine towards round-off; fail only if the normwise backward error
  // ‖r‖ / (‖A‖‖x‖ + ‖b‖) stays above 1e-10.
  const double anorm = op_.interior_matrix().norm();
  double backward = 0.0;
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd r = rhs - op_.interior_matrix() * x;
    const double scale = std::max(anorm * x.norm() + rhs.norm(), std::numeric_limits<double>::min());
    backward = r.norm() / scale;
    if (backward <= 1e-15 || pass == 2) break;
    x += lu_.solve(r);
  }
  require(backward <= 1e-10, ErrorCode::SolverBreakdown, "backward error stagnates above 1e-10");
  require(x.allFinite(), ErrorCode::SolverBreakdown, "solution is not finite");

  Eigen::VectorXd u = Eigen::VectorXd::Zero(grid.size());
  for (std::size_t i = 0; i < I.size(); ++i) u[I[i]] = x[i];
  for (std::size_t i = 0; i < B.size(); ++i) u[B[i]] = gb[i];
  return u;
}

Eigen::VectorXd DirichletSolver::solve_trace(const BoundaryTrace& g) const {
  return solve(Eigen::VectorXd::Zero(grid().size()), g.space->to_grid(g.values));
}

Eigen::VectorXd DirichletSolver::solve_source(const Eigen::VectorXd& f) const {
  return solve(f, Eigen::VectorXd::Zero(grid().size()));
}

GridField DirichletSolver::solve(const GridField& f, const BoundaryTrace& g) const {
  return GridField(grid(), solve(f.values, g.space->to_grid(g.values)));
}

Mask subdomain_boundary(const Grid& grid, const Mask& S) {
  Mask out(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (S[i] && grid.boundary_mask[i]) out[i] = 1;
  }
  for (const auto& e : grid.edges) {
    if (S[e.a] && !S[e.b]) out[e.a] = 1;
    if (S[e.b] && !S[e.a]) out[e.b] = 1;
  }
  return out;
}

Eigen::VectorXd weak_neumann_pairings(const DiscreteOperator& op, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& f, const Mask& S, double tolerance) {
  const Grid& grid = op.grid();
  require(S.size() == grid.size(), ErrorCode::RegionMismatch, "mask size mismatch");
  const Mask edge = subdomain_boundary(grid, S);
  const Eigen::VectorXd DSu = graph_laplacian(grid, S) * u;
  const auto& w = op.weights();
  const auto& b = op.b();
  double num = 0.0, scale = 0.0;
  Eigen::VectorXd ell = Eigen::VectorXd::Zero(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!S[i]) continue;
    const double r = DSu[i] - w[i] * (b[i] * u[i] - f[i]);
    if (edge[i]) {
      ell[i] = r;
    } else {
      num += r * r;
      scale += DSu[i] * DSu[i] + w[i] * w[i] * (b[i] * b[i] * u[i] * u[i] + f[i] * f[i]);
    }
  }
  require(num <= tolerance * tolerance * std::max(scale, 1e-300), ErrorCode::NotASolution,
          "field does not solve the equation inside the region");
  return ell;
}

BoundaryFunctional weak_neumann_trace(const DiscreteOperator& op, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& f, TraceSpacePtr space) {
  require(&space->grid() == &op.grid(), ErrorCode::ContextMismatch, "chart from another grid");
  const Eigen::VectorXd ell = weak_neumann_pairings(op, u, f, op.grid().full_mask());
  return BoundaryFunctional{space, space->from_grid(ell)};
}

}  // namespace hlab
