#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hlab/assembly.hpp"
#include "hlab/fields.hpp"

namespace hlab {

// Local DtN map on Γ in Γ-local nodal coordinates: L(j, i) = ⟨Λ e_i, e_j⟩,
// e_i the nodal hat at the i-th Γ node. Traces are Γ-supported.
struct DtnMatrix {
  Eigen::MatrixXd L;
  const Grid* grid = nullptr;
  double k = 0.0;
  TraceSpacePtr space;

  // ⟨Λ g₁, g₂⟩ for Γ-local traces.
  double pairing(const Eigen::VectorXd& g1, const Eigen::VectorXd& g2) const;
  // ‖L − Lᵀ‖_F / ‖L‖_F.
  double symmetry_defect() const;
};

// One Dirichlet solve and one weak Neumann trace per Γ node. n = 3 boxes with
// at most 24³ nodes. Throws NearResonance when the guard rejects k.
DtnMatrix dtn_map(const Grid& grid, const Medium& medium, double k, const TraceSpacePtr& space,
                  const ResonanceGuard* guard = nullptr);

// ‖Λ₁ − Λ₂‖ from H̃^{1/2}(Γ) to H^{-1/2}(Γ): with G = R Rᵀ the Γ Gram,
// the spectral norm of R⁻¹ (L₁ − L₂) R⁻ᵀ. Throws ContextMismatch.
double dtn_distance(const DtnMatrix& a, const DtnMatrix& b);

struct AlessandriniRecord {
  // Σ w (b₂ − b₁) u₁ u₂ and ⟨(Λ₁ − Λ₂) g₁, g₂⟩.
  double volume = 0.0;
  double boundary = 0.0;
  // Σ w |b₂ − b₁| |u₁ u₂|, the size of the sum without cancellation.
  double magnitude = 0.0;
  // |volume − boundary| / magnitude.
  double relative() const;
};

// u_j solves medium j with Γ-local data g_j.
AlessandriniRecord alessandrini_check(const DirichletSolver& s1, const DtnMatrix& l1,
                                      const DirichletSolver& s2, const DtnMatrix& l2,
                                      const Eigen::VectorXd& g1, const Eigen::VectorXd& g2);

// C (e^{C k^{n+3}} δ + (k + |log δ|^{1/(n+3)})^{−2/n}); the log term is 0 at δ = 0.
double stability_rhs(double C, double k, double delta, int n = 3);

struct StabilityRecord {
  double k = 0.0;
  double amplitude = 0.0;
  double lhs = 0.0;
  double delta = 0.0;
  // Smallest C with lhs ≤ rhs(C); +∞ when none exists.
  double minimal_constant = 0.0;
};

// Media must agree off Ω′ (AgreementViolation) and δ must be below 1
// (HypothesisViolated). `box` is the Fourier box for the H^{-1} norm.
StabilityRecord stability_check(const DtnMatrix& l1, const Medium& m1, const DtnMatrix& l2,
                                const Medium& m2, const Mask& omega_prime, const Box& box,
                                double amplitude = 0.0);

// Smallest single C ≥ 1 covering every record, and whether it validates all.
struct UniformConstant {
  double C = 1.0;
  bool holds = false;
};

UniformConstant uniform_constant(const std::vector<StabilityRecord>& records);

}  // namespace hlab
