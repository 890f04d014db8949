#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hlab/assembly.hpp"

namespace hlab {

struct SpectrumOptions {
  double a1_constant = 0.01;
  // Eigenvalues per shift-invert slice before the slice is bisected.
  int slice_size = 30;
  double residual_tolerance = 1e-9;
  bool store_vectors = false;
  std::uint64_t seed = 0x5eed;
};

// Generalized Dirichlet eigenvalues of (−Δ−V)u = λ q u on the grid.
struct SpectrumReport {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  // Interior-node eigenvectors, q-orthonormal, when requested.
  Eigen::MatrixXd vectors;
  int count = 0;
  int dim = 2;
  double grid_h = 0.0;
  double a1_constant = 0.01;
  double disc_error = 0.0;
  // Every eigenvalue below this value is listed.
  double covered_up_to = 0.0;

  double largest() const { return eigenvalues.empty() ? 0.0 : eigenvalues.back(); }
};

SpectrumReport compute_sigma(const Grid& grid, const Medium& medium, int count,
                             const SpectrumOptions& options = {});

// Every eigenvalue below `upper`.
SpectrumReport compute_sigma_below(const Grid& grid, const Medium& medium, double upper,
                                   const SpectrumOptions& options = {});

// Number of generalized eigenvalues below sigma (Sylvester inertia).
int count_below(const Grid& grid, const Medium& medium, double sigma);

struct A1Margin {
  bool admissible = false;
  double dist = 0.0;
  double threshold = 0.0;
  double margin() const { return dist - threshold; }
};

A1Margin check_a1(double k, const SpectrumReport& report, double c);

// Midpoint (in k²) of the spectral gap holding k_target²; on a resonance the
// wider neighbouring gap is taken. Never returns a smaller margin than k_target.
double find_admissible_k(const SpectrumReport& report, double k_target, double c);

// Union of the spectra, for choosing k admissible for several media at once.
SpectrumReport merge_reports(const std::vector<SpectrumReport>& reports);

// Richardson estimate |λ_h − λ_{2h}|/3 for eigenvalues up to `upper`,
// maximised over the matched pairs. Also stored in fine.disc_error.
double discretization_error(SpectrumReport& fine, const SpectrumReport& coarse, double upper);

ResonanceGuard make_guard(const SpectrumReport& report, double guard_factor = 10.0);

// Fitted exponent p of N(E) ~ E^p over the computed range.
double weyl_exponent(const SpectrumReport& report);

}  // namespace hlab
