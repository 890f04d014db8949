#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>

#include "hlab/geometry.hpp"

namespace hlab {

// Samples of a real function on the nodes of one grid. `region` marks the
// nodes where the samples are meaningful.
struct GridField {
  const Grid* grid = nullptr;
  Eigen::VectorXd values;
  Mask region;

  GridField() = default;
  GridField(const Grid& g, Eigen::VectorXd v, Mask region = {});

  static GridField zeros(const Grid& g);
  static GridField sample(const Grid& g, const std::function<double(const Point&)>& f);

  GridField& operator+=(const GridField& other);
  GridField& operator-=(const GridField& other);
  GridField& operator*=(double c);
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(double c, GridField a);

enum class NormKind { L2, H1, H1Semi };

double norm(const GridField& field, NormKind which, const Mask& region);
double norm(const GridField& field, NormKind which);

// Nodal gradient with one-sided second-order differences where the region
// ends. Rows are nodes, columns Cartesian components.
Eigen::MatrixXd nodal_gradient(const GridField& field, const Mask& region);

// Quadrature inner product Σ_{region} w u v.
double inner(const GridField& a, const GridField& b, const Mask& region);

// Discrete H^{±1/2} on the outer boundary. Modes solve K e = λ W e with K
// the chart Laplacian and W the arclength weights, normalised so Eᵀ W E = I.
// Traces are nodal vectors on the chart; functionals are nodal pairings
// ℓ_b = ℓ(δ_b). Immutable after construction.
class TraceSpace {
 public:
  explicit TraceSpace(BoundaryChart chart);

  const BoundaryChart& chart() const { return chart_; }
  const Grid& grid() const { return *chart_.grid; }
  std::size_t size() const { return chart_.size(); }
  std::size_t gamma_size() const { return chart_.gamma_local.size(); }

  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const Eigen::MatrixXd& modes() const { return modes_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  Eigen::VectorXd trace_coeffs(const Eigen::VectorXd& t) const;
  Eigen::VectorXd functional_coeffs(const Eigen::VectorXd& l) const;

  // Σ (1+λ_m)^order c_m².
  double norm(const Eigen::VectorXd& t, double order) const;
  // Norm of ℓ restricted to Γ-supported traces.
  double dual_norm(const Eigen::VectorXd& l) const;
  // Γ-supported trace g with ⟨ℓ, φ⟩ = (g, φ)_{1/2} for every Γ-supported φ.
  Eigen::VectorXd riesz(const Eigen::VectorXd& l) const;

  // Nodal Gram of the order-s norm on the whole chart.
  Eigen::MatrixXd gram(double order) const;
  // Gram of the +1/2 norm on Γ-supported traces, in Γ-local coordinates.
  const Eigen::MatrixXd& gamma_gram() const { return gamma_gram_; }
  Eigen::VectorXd gamma_gram_solve(const Eigen::VectorXd& rhs_gamma) const;

  Eigen::VectorXd restrict_to_gamma(const Eigen::VectorXd& t) const;
  Eigen::VectorXd extend_from_gamma(const Eigen::VectorXd& t_gamma) const;
  // Chart vector from grid-node values (boundary nodes only).
  Eigen::VectorXd from_grid(const Eigen::VectorXd& nodal) const;
  // Grid-sized vector with the chart values placed on boundary nodes.
  Eigen::VectorXd to_grid(const Eigen::VectorXd& t) const;

 private:
  BoundaryChart chart_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd modes_;
  Eigen::MatrixXd gamma_gram_;
  Eigen::LLT<Eigen::MatrixXd> gamma_llt_;
};

using TraceSpacePtr = std::shared_ptr<const TraceSpace>;

TraceSpacePtr make_trace_space(const Grid& grid, const GammaSpec& gamma);

struct BoundaryTrace {
  TraceSpacePtr space;
  Eigen::VectorXd values;

  // Values off Γ are zeroed.
  static BoundaryTrace gamma_supported(TraceSpacePtr space, Eigen::VectorXd values);
  Eigen::VectorXd modal_coeffs() const { return space->trace_coeffs(values); }
};

struct BoundaryFunctional {
  TraceSpacePtr space;
  Eigen::VectorXd nodal;

  Eigen::VectorXd coefficients() const { return space->functional_coeffs(nodal); }
};

double trace_norm(const BoundaryTrace& t, double order);
double dual_norm(const BoundaryFunctional& l);
double pairing(const BoundaryFunctional& l, const BoundaryTrace& t);
BoundaryTrace riesz_map(const BoundaryFunctional& l);

// (2π)^{-n} ∫ |F̂|² (1+|ζ|²)^{-1} dζ, square-rooted, for a field on a
// Cartesian grid extended by zero. The transform runs on a lattice padded to
// at least twice the box extent and ten units beyond it in every direction.
double hminus1_norm_fourier(const GridField& field, const Box& box);

// Columns x, y[, z], value.
void write_field_csv(const GridField& field, const std::string& path, const std::string& header = {});

}  // namespace hlab
