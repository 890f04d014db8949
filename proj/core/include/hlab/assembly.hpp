#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>
#include <vector>

#include "hlab/fields.hpp"
#include "hlab/geometry.hpp"

namespace hlab {

struct Medium {
  GridField q;
  GridField V;
  double kappa = 2.0;
  bool monotone = false;

  // κ⁻¹ ≤ q ≤ κ everywhere; with `monotone`, x·∇q ≥ −1e-10 everywhere.
  void validate() const;

  static Medium constant(const Grid& g, double q, double V, double kappa);
  static Medium from_functions(const Grid& g, const std::function<double(const Point&)>& q,
                               const std::function<double(const Point&)>& V, double kappa,
                               bool monotone);
};

// Smallest x·∇q over the grid (nodal gradient, positions relative to the origin).
double min_radial_derivative(const Medium& medium);

// Largest spacing allowed at frequency k: ten points per shortest wavelength.
double resolution_limit(double k, double kappa);

// dist(k², Σ) against max(c·k^{2−n}, guard_factor·disc_error).
struct ResonanceGuard {
  std::vector<double> eigenvalues;
  int dim = 2;
  double c = 0.01;
  double disc_error = 0.0;
  double guard_factor = 10.0;

  double distance(double k) const;
  double threshold(double k) const;
  bool admits(double k) const { return distance(k) > threshold(k); }
};

using SparseMatrix = Eigen::SparseMatrix<double>;

// Weighted form of Δ + k²q + V: the full-grid matrix −D + W·b, with D the
// edge Laplacian and W the quadrature weights. Rows at interior nodes equal
// W·f for a solution with source f. With a domain mask only edges inside the
// mask enter; unknowns are mask nodes off the mask boundary, and the mask
// boundary (see subdomain_boundary) carries the Dirichlet data.
class DiscreteOperator {
 public:
  DiscreteOperator(const Grid& grid, Medium medium, double k, Mask domain = {});

  const Grid& grid() const { return *grid_; }
  const Medium& medium() const { return medium_; }
  double k() const { return k_; }

  const Eigen::VectorXd& b() const { return b_; }
  const Eigen::VectorXd& weights() const { return w_; }
  const SparseMatrix& laplacian() const { return D_; }
  const SparseMatrix& interior_matrix() const { return A_ii_; }
  const SparseMatrix& coupling() const { return A_ib_; }
  const std::vector<int>& unknowns() const { return unknowns_; }
  const std::vector<int>& dirichlet_nodes() const { return dirichlet_; }
  // Empty for the whole grid.
  const Mask& domain() const { return domain_; }

  // (−D + W b) u on every node.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  // Interior residual of (Δ+b)u = f in weighted form, relative to ‖W f‖ + ‖D u‖.
  double relative_residual(const Eigen::VectorXd& u, const Eigen::VectorXd& f) const;

 private:
  const Grid* grid_;
  Medium medium_;
  double k_;
  Mask domain_;
  std::vector<int> unknowns_;
  std::vector<int> dirichlet_;
  Eigen::VectorXd b_;
  Eigen::VectorXd w_;
  SparseMatrix D_;
  SparseMatrix A_ii_;
  SparseMatrix A_ib_;
};

// Edge Laplacian Σ w_e (u_a − u_b)² of the grid as a full sparse matrix.
SparseMatrix graph_laplacian(const Grid& grid);
// Same, restricted to edges with both ends in `mask`.
SparseMatrix graph_laplacian(const Grid& grid, const Mask& mask);

// Checks k ≥ 1 and h ≤ resolution_limit(k, κ); throws UnderResolved.
DiscreteOperator assemble(const Grid& grid, const Medium& medium, double k, const Mask& domain = {});

class DirichletSolver {
 public:
  // Without a guard every nonsingular k is accepted.
  explicit DirichletSolver(DiscreteOperator op, const ResonanceGuard* guard = nullptr);

  const DiscreteOperator& op() const { return op_; }
  const Grid& grid() const { return op_.grid(); }

  // Full nodal solution of (Δ+b)u = f with u = g on Dirichlet nodes. Both
  // arguments are grid-sized; g is read only on Dirichlet nodes. Nodes outside
  // the operator's domain are zero.
  Eigen::VectorXd solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;
  // Zero source, Dirichlet data from a chart trace (zero on other boundary nodes).
  Eigen::VectorXd solve_trace(const BoundaryTrace& g) const;
  // Zero boundary data.
  Eigen::VectorXd solve_source(const Eigen::VectorXd& f) const;

  GridField solve(const GridField& f, const BoundaryTrace& g) const;

 private:
  DiscreteOperator op_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

// Nodal pairings ℓ_b = (D_S u)_b − w_b (b_b u_b − f_b) on the boundary ∂S of a
// node set S (nodes of S that are Dirichlet nodes or touch an edge leaving S).
// Zero elsewhere. Throws NotASolution when u fails the equation inside S.
Eigen::VectorXd weak_neumann_pairings(const DiscreteOperator& op, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& f, const Mask& S,
                                      double tolerance = 1e-8);

Mask subdomain_boundary(const Grid& grid, const Mask& S);

// Weak normal derivative on the outer boundary chart.
BoundaryFunctional weak_neumann_trace(const DiscreteOperator& op, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& f, TraceSpacePtr space);

}  // namespace hlab
