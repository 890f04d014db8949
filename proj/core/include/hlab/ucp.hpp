#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hlab/assembly.hpp"
#include "hlab/fields.hpp"

namespace hlab {

// L² norms of u on B_{r/2}(x₀), B_r(x₀), B_{2r}(x₀) intersected with the grid.
// Boundary triples centre x₀ on Γ and use the half balls B⁺ = B ∩ Ω.
struct BallTriple {
  Point center{};
  double r = 0.0;
  double inner = 0.0;
  double middle = 0.0;
  double outer = 0.0;
  double k = 0.0;
  int family = 0;
  bool boundary = false;
  double eta = 0.0;
};

// Interior triple. Requires B_{4r}(x₀) ⊆ Ω and r ≥ min_cells·h.
BallTriple three_ball_ratio(const GridField& u, const Point& x0, double r, double k,
                            int family = 0, double min_cells = 8.0);

// Boundary triple at x₀ ∈ Γ: B_{4r}(x₀) must not reach ∂Ω \ Γ. Polar grids only.
BallTriple boundary_ball_ratio(const GridField& u, const GammaSpec& gamma, const Point& x0,
                               double r, double k, double eta, int family = 0,
                               double min_cells = 8.0);

// η = ‖u|_Γ‖_{H^{1/2}} + ‖∂_ν u‖_{H^{-1/2}(Γ)} for a homogeneous solution.
double cauchy_data_size(const DiscreteOperator& op, const GridField& u, const TraceSpacePtr& space);

// Interior: log N_r ≤ log C(k) + (1−α) log N_{2r} + α log N_{r/2}.
// Boundary: log N_r ≤ log C(k) + (1−α) log(N_{2r}+η) + α log η.
struct ThreeBallsFit {
  double alpha = 0.5;
  bool boundary = false;
  // Calibrated intercepts, keyed by k.
  std::map<double, double> log_c;
  // Least-squares intercepts before calibration.
  std::map<double, double> log_c_ls;
  int samples = 0;

  double log_constant(double k) const;
  // log C + (1−α)log N_{2r} + α log N_{r/2} − log N_r; ≥ 0 where the envelope holds.
  double margin(const BallTriple& t) const;
};

// Common α over all k with per-k intercepts; α clamped to [0.01, 0.99], then
// each intercept is raised to the worst sample at that k.
ThreeBallsFit estimate_exponent(const std::vector<BallTriple>& samples);

struct ChainParams {
  ThreeBallsFit interior;
  ThreeBallsFit boundary;
  // Start ball B⁺_{r0}(x_Γ) with x_Γ on Γ.
  Point start{};
  double start_radius = 0.25;
  double k = 1.0;
  // C_S in ‖u‖_{L⁴(Ω)} ≤ C_S ‖u‖_{H¹(Ω)}.
  double sobolev_constant = 1.0;
  // Exponent μ of the logarithmic bound.
  double mu = 0.5;
};

struct ChainResult {
  // Bound on ‖u‖_{L²(Ω_ε)} from the chain and on ‖u‖_{L²(W_ε)} from the layer.
  double bound_interior = 0.0;
  double bound_layer = 0.0;
  double bound = 0.0;
  int n_balls = 0;
  std::size_t cover_balls = 0;
  double measured_interior = 0.0;
  double measured = 0.0;
  double layer_measure = 0.0;
  // k |log(η/(M+η))|^{-μ} (M+η).
  double log_bound = 0.0;
};

// Ω_ε = {d(x,∂Ω) ≥ ε}, W_ε its complement. Ball radii are d(x)/4, so every
// B_{4r} stays in Ω; a step x → y is allowed when B_{r(y)/2}(y) ⊆ B_{r(x)}(x).
// The chain starts from points whose half ball lies in the start ball.
ChainResult chain_propagate(const GridField& u, double eta, double M, double epsilon,
                            const ChainParams& params);

// max over the family of ‖∇u‖_{L²(Ω_ε)} ε / (k ‖u‖_{L²(Ω_{ε/2})}).
double caccioppoli_ratio(const GridField& u, double k, double epsilon);

// ‖∂_ν w‖_{H^{-1/2}(Γ)} / (k^{n+2} ‖v‖_{L²(Ω₁)}) for w solving with source 𝟙_{Ω₁}v.
double eta_source_ratio(const DirichletSolver& solver, const TraceSpacePtr& space,
                        const GridField& v, const Mask& omega1);

// Homogeneous solution with Dirichlet data J_ℓ(k|x−c|)cos(ℓθ_c + φ), θ_c the
// angle about c. For q = 1, V = 0 it approximates that global mode.
GridField mode_solution(const DirichletSolver& solver, int ell, const Point& c, double phase);

// J_ℓ(k|x−c|)cos(ℓθ_c + φ) sampled on the nodes.
GridField sample_mode(const Grid& grid, double k, int ell, const Point& c, double phase);

void write_triples_csv(const std::vector<BallTriple>& triples, const std::string& path,
                       const std::string& header = {});

}  // namespace hlab
