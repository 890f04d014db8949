#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hlab/assembly.hpp"
#include "hlab/fields.hpp"

namespace hlab {

// log |x|^τ, accumulated in long double.
long double carleman_log_weight(const Point& x, double tau);

enum class SplitMode { SourceOnly, Divergence };

struct CarlemanSample {
  double tau = 0.0;
  double k = 0.0;
  SplitMode mode = SplitMode::SourceOnly;
  // τ‖e^φ u‖, ‖e^φ|x|∇u‖, τ^{1/2} k ‖q^{1/2}|x| e^φ u‖.
  double lhs_terms[3] = {0.0, 0.0, 0.0};
  // ‖e^φ|x|² f‖ and max{τ,k} Σ_j ‖e^φ|x| F^j‖.
  double rhs_terms[2] = {0.0, 0.0};
  GridField f;
  GridField F[2];

  double lhs() const { return lhs_terms[0] + lhs_terms[1] + lhs_terms[2]; }
  double rhs() const { return rhs_terms[0] + rhs_terms[1]; }
  // 0 when both sides vanish.
  double ratio() const;
};

struct CarlemanOptions {
  double tau0 = 10.0;
  SplitMode mode = SplitMode::SourceOnly;
  // Divergence mode: F = ∇(χΦ) with ΔΦ = (Δ+k²q)u on the annulus, χ = 1 on
  // the radial hull of supp u and 0 within `collar` of the annulus edges.
  double collar = 0.05;
};

// φ = τ log|x| on an annulus grid B_2 \ B̄_1 (polar). u needs two zero layers
// next to the boundary; f is the discrete (Δ + k²q)u, so V is ignored.
CarlemanSample carleman_check(const GridField& u, const Medium& medium, double k, double tau,
                              const CarlemanOptions& options = {});

// min over nodes of 2(1+τ) k² |x|² (2q + x·∇q).
double commutator_positivity(const Medium& medium, double k, double tau);

// Random smooth function supported in r ∈ (a, b) ⊂ (1, 2): a radial bump
// times an angular Fourier sum (kind 0) or times J_ℓ(k√q̄ r) cos ℓθ (kind 1).
GridField random_carleman_sample(const Grid& grid, double k, std::uint64_t seed, int kind);

struct ImprovedUcpRecord {
  int ell = 0;
  double k = 0.0;
  double delta = 0.0;
  double eta = 0.0;
  double M = 0.0;
  // ‖u‖ on B_2 \ B_{1+δ} and on the whole annulus.
  double lhs = 0.0;
  double full = 0.0;
  // |log(k³η/M)|^{-μ} M and (k³η)^ν M^{1−ν}.
  double rhs_log = 0.0;
  double rhs_poly = 0.0;
};

// Solution on the annulus with Dirichlet data Y_ℓ(k r)cos ℓθ on both circles;
// it decays towards ∂B_2, where η is measured. Throws HypothesisViolated if
// k³η > M.
ImprovedUcpRecord improved_ucp_probe(const DirichletSolver& solver, const TraceSpacePtr& outer,
                                     int ell, double delta, double mu = 0.5, double nu = 0.5);

struct ImprovedUcpFit {
  double nu = 0.0;
  // Calibrated log C per k in log(lhs/M) ≤ log C + ν log(k³η/M).
  std::vector<std::pair<double, double>> log_c;
};

ImprovedUcpFit fit_improved_ucp(const std::vector<ImprovedUcpRecord>& records);

void write_carleman_csv(const std::vector<CarlemanSample>& samples, const std::string& path,
                        const std::string& header = {});

}  // namespace hlab
