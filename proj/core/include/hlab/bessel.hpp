#pragma once

#include <vector>

namespace hlab {

// Bessel functions of the first and second kind, real order α ≥ 0 and
// argument x ≥ 0. Orders above 500 or arguments above 1e4 raise RangeGuard.
struct BesselJY {
  double j = 0.0;
  double y = 0.0;
  double jp = 0.0;
  double yp = 0.0;
  // log|J| stays finite when J underflows.
  double log_abs_j = 0.0;
  int sign_j = 1;
};

BesselJY bessel_jy(double alpha, double x);
double bessel_j(double alpha, double x);
double bessel_y(double alpha, double x);
double bessel_j_prime(double alpha, double x);
double log_abs_bessel_j(double alpha, double x);

// R_ℓ(r) = r^{1−n/2} J_{ℓ+n/2−1}(r) and its derivative.
double radial_mode(int n, int ell, double r);
double radial_mode_prime(int n, int ell, double r);

// Smallest positive zero of J_α, by bracketing and bisection.
double bessel_j_first_zero(double alpha);

struct BesselInequalityReport {
  // Slack of each displayed inequality: lower ratio bound, upper ratio bound,
  // log-derivative lower, log-derivative upper, order-ratio bound.
  double min_ratio_lower = 0.0;
  double min_ratio_upper = 0.0;
  double min_logderiv_lower = 0.0;
  double min_logderiv_upper = 0.0;
  double min_order_ratio = 0.0;
  int violations = 0;
  int monotonicity_violations = 0;
  int evaluations = 0;
};

BesselInequalityReport check_bessel_inequalities(const std::vector<double>& alphas,
                                                 const std::vector<double>& xs,
                                                 int monotonicity_samples = 200);

// Gauss–Legendre nodes and weights on [a, b].
void gauss_legendre(int points, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights);

// ∫_0^{ρ} R_ℓ(k r)² r^{n−1} dr by composite Gauss–Legendre.
double radial_l2_squared(int n, int ell, double k, double rho);
// ∫_0^{ρ} (k² R'_ℓ(kr)² + λ_ℓ R_ℓ(kr)²/r²) r^{n−1} dr, λ_ℓ = ℓ(ℓ+n−2).
double radial_gradient_squared(int n, int ell, double k, double rho);
// 2k^{-n} Σ_m (ℓ+n/2+2m) J²_{ℓ+n/2+2m}(k/2), the closed form of
// radial_l2_squared(n, ℓ, k, 1/2).
double radial_l2_series(int n, int ell, double k);

// Mode g_ℓ = R_ℓ(k r) ψ_ℓ(θ), ψ_ℓ orthonormal on the sphere; v_ℓ = α_ℓ g_ℓ on
// B_{1/2} with ‖v_ℓ‖_{H¹(B_{1/2})} = 1; Γ = ∂B_1.
struct OptimalityBound {
  int n = 2;
  int ell = 0;
  double k = 0.0;
  double epsilon = 0.0;
  double g_l2 = 0.0;
  double g_h1 = 0.0;
  double alpha_ell = 0.0;
  // Smallest admissible coefficient of v_ℓ in u.
  double c_min = 0.0;
  // min ‖u‖_{H^{1/2}(∂B_1)} over solutions u on B_1 with ‖u − v_ℓ‖_{L²(B_{1/2})} ≤ ε.
  double min_boundary_norm = 0.0;
  // 2ℓ^{1/2} J_α(k)/J_α(k/2) (2^{−n/2}/(1+k+(2ℓ/k)^{1/2}) − ε(2ℓ+n)^{1/2}), α = ℓ+n/2−1.
  double bound_2ell = 0.0;
  // ℓ ≥ 4 max{k², n}.
  bool asymptotic_regime = false;
};

// ε < 0 selects (2^{n/2+4}ℓ)^{-1}. Requires ℓ + n/2 − 1 > k.
OptimalityBound optimality_lower_bound(double k, int ell, double epsilon = -1.0, int n = 2);

}  // namespace hlab
