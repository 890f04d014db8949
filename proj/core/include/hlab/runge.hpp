#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hlab/assembly.hpp"
#include "hlab/fields.hpp"
#include "hlab/spectral.hpp"

namespace hlab {

// Boundary data on Γ to node values on Ω₁. Columns are the nodal Γ basis
// traces (Γ-local order of the trace space); rows are Ω₁ nodes in index
// order. Ω₁ carries the quadrature inner product, Γ the H^{1/2} Gram.
class ForwardMap {
 public:
  ForwardMap(std::shared_ptr<const DirichletSolver> solver, TraceSpacePtr space, Mask omega1);

  const Grid& grid() const { return solver_->grid(); }
  const DirichletSolver& solver() const { return *solver_; }
  const TraceSpacePtr& space() const { return space_; }
  const Mask& omega1() const { return omega1_; }
  const std::vector<int>& omega1_nodes() const { return omega1_nodes_; }
  const Eigen::MatrixXd& matrix() const { return A_; }
  // Quadrature weights on Ω₁ nodes.
  const Eigen::VectorXd& omega1_weights() const { return w1_; }
  double k() const { return solver_->op().k(); }

  // Grid-sized solution for Γ-local data.
  Eigen::VectorXd solve_gamma(const Eigen::VectorXd& g_gamma) const;
  Eigen::VectorXd restrict(const Eigen::VectorXd& nodal) const;
  Eigen::VectorXd extend(const Eigen::VectorXd& omega1_values) const;

  // Gram-weighted transpose G_Γ⁻¹ Aᵀ W u.
  Eigen::VectorXd adjoint_matrix_apply(const Eigen::VectorXd& u_omega1) const;

 private:
  std::shared_ptr<const DirichletSolver> solver_;
  TraceSpacePtr space_;
  Mask omega1_;
  std::vector<int> omega1_nodes_;
  Eigen::VectorXd w1_;
  Eigen::MatrixXd A_;
};

// One Dirichlet solve per Γ node; Ω₂ is the operator domain of `solver`.
ForwardMap build_forward_map(std::shared_ptr<const DirichletSolver> solver, TraceSpacePtr space,
                             const Mask& omega1);

// A*u through the PDE: w solves (Δ+k²q+V)w = 𝟙_{Ω₁}u with w = 0 on the
// boundary, and A*u is the Riesz image of the weak normal derivative of w on Γ.
Eigen::VectorXd adjoint_apply(const ForwardMap& map, const Eigen::VectorXd& u_omega1);

// ⟨g, h⟩ in H^{1/2} for Γ-local traces.
double gamma_inner(const TraceSpace& space, const Eigen::VectorXd& g, const Eigen::VectorXd& h);
// Quadrature inner product on Ω₁ for Ω₁-local vectors.
double omega1_inner(const ForwardMap& map, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// A φ_j = μ_j^{1/2} ψ_j, φ orthonormal in H^{1/2}(Γ), ψ orthonormal in L²(Ω₁).
struct SvdSystem {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd psi;
  // group[j] labels the tie class of μ_j (relative tolerance tie_tolerance).
  std::vector<int> group;
  double tie_tolerance = 1e-8;

  Eigen::Index size() const { return mu.size(); }
  // One value per tie class, strictly decreasing.
  std::vector<double> distinct_mu() const;
  // Index one past the tie class that contains j.
  Eigen::Index group_end(Eigen::Index j) const;
};

SvdSystem svd(const ForwardMap& map, double tie_tolerance = 1e-8);

struct SvdResiduals {
  // max_j ‖Aφ_j − μ_j^{1/2}ψ_j‖_{L²(Ω₁)} / ‖A‖.
  double max_identity = 0.0;
  double max_phi_orthonormality = 0.0;
  double max_psi_orthonormality = 0.0;
  // ‖A − Σ μ_j^{1/2} ψ_j ⟨φ_j, ·⟩‖ / ‖A‖ in the Gram-weighted norm.
  double reconstruction = 0.0;
};

SvdResiduals svd_residuals(const ForwardMap& map, const SvdSystem& s, Eigen::Index leading);

// Least-squares slope of log μ_j against j over the first `count` modes.
double log_decay_slope(const SvdSystem& s, Eigen::Index count);

struct RungeApproximant {
  double alpha = 0.0;
  Eigen::Index retained = 0;
  BoundaryTrace g_alpha;
  GridField u_alpha;
  // ‖u_α − v‖ on Ω₁ by Parseval over discarded modes and the out-of-span residue.
  double err = 0.0;
  // Same quantity from the solved u_α.
  double err_direct = 0.0;
  double residue = 0.0;
  // ‖g_α‖_{H^{1/2}}, from the modal sum and from the trace space.
  double cost = 0.0;
  double cost_trace = 0.0;
  double v_l2 = 0.0;
  Eigen::VectorXd beta;
};

// Keeps the leading `modes` singular modes.
RungeApproximant runge_with_modes(const ForwardMap& map, const SvdSystem& s, const GridField& v,
                                  Eigen::Index modes);
// Keeps every mode with μ_j^{1/2} ≥ α.
RungeApproximant runge_with_alpha(const ForwardMap& map, const SvdSystem& s, const GridField& v,
                                  double alpha);
// Smallest retention (whole tie classes) with err ≤ ε·v_h1.
RungeApproximant runge_approximate(const ForwardMap& map, const SvdSystem& s, const GridField& v,
                                   double epsilon, double v_h1);

struct ValphaIdentity {
  double parseval = 0.0;
  double pairing = 0.0;
  // ⟨v − v_α, v_α⟩ on Ω₁.
  double cross = 0.0;
  double relative_gap() const;
};

// ‖v_α‖² two ways: modal sum, and weak Neumann pairings of v and w_α on the
// boundary of Ω₁, where w_α solves with source 𝟙_{Ω₁}v_α and zero data.
ValphaIdentity valpha_identity(const ForwardMap& map, const RungeApproximant& approx,
                               const GridField& v);

// Solution on the node set `domain` whose data on the domain boundary is a
// random Fourier series in the polar angle with amplitudes
// (1 + m/mode_scale)^{-decay} (m = 0..modes), zero on nodes that are also
// grid boundary nodes.
GridField random_subdomain_solution(const Grid& grid, const Medium& medium, double k,
                                    const Mask& domain, std::uint64_t seed, double decay = 1.5,
                                    int modes = 64, double mode_scale = 1.0);

enum class RungeScenario { Boundary, Interior, Convex };

const char* to_string(RungeScenario s);

struct SweepParams {
  RungeScenario scenario = RungeScenario::Interior;
  double h = 1.0 / 32.0;
  std::vector<double> k_list{5.0};
  std::vector<double> epsilon_list;
  std::vector<std::uint64_t> seeds{1};
  // Disk scenarios: Ω₂ = B_outer, Ω₁ = B_inner, Ω̃₁ = B_tilde.
  // Annulus scenario: Ω₂ = B_outer \ B̄_hole, Ω₁ = B_inner \ B̄_hole, Ω̃₁ = B_tilde \ B̄_hole.
  double r_outer = 1.0;
  double r_inner = 0.5;
  double r_tilde = 0.75;
  double r_hole = 0.5;
  GammaSpec gamma = GammaSpec::full();
  std::function<double(const Point&)> q = [](const Point&) { return 1.0; };
  std::function<double(const Point&)> V = [](const Point&) { return 0.0; };
  double kappa = 2.0;
  bool monotone = true;
  double a1_constant = 0.01;
  double data_decay = 1.5;
  int data_modes = 64;
  // Angular content of the data grows with k: mode_scale = k.
  bool scale_modes_with_k = false;
  // Move each k to the middle of its spectral gap.
  bool adjust_k = true;
};

struct SweepCell {
  RungeScenario scenario = RungeScenario::Interior;
  std::uint64_t seed = 0;
  double k = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double err = 0.0;
  double cost = 0.0;
  double v_norm_h1 = 0.0;
  double v_norm_l2 = 0.0;
  double admissible_margin = 0.0;
  double h = 0.0;
  Eigen::Index retained = 0;
  bool reached = true;
};

// Cells ordered by (seed, k, ε). Unreachable targets are kept with reached = false.
std::vector<SweepCell> run_sweep(const SweepParams& params);

struct FitReport {
  RungeScenario scenario = RungeScenario::Interior;
  // boundary: a (ε^{-μ} coefficient), b (k^s coefficient), mu, s.
  // interior: nu, b (coefficient of k). convex: nu, s (exponent of k).
  double nu = 0.0;
  double mu = 0.0;
  double s = 0.0;
  double a = 0.0;
  double b = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int cells = 0;
};

// Fits log(cost/‖v‖_{L²(Ω₁)}) over the reached cells.
FitReport fit_sweep(RungeScenario scenario, const std::vector<SweepCell>& cells);

void write_sweep_csv(const std::vector<SweepCell>& cells, const std::string& path,
                     const std::string& header = {});

}  // namespace hlab
