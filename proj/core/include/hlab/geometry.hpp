#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hlab {

using Point = std::array<double, 3>;
using Mask = std::vector<std::uint8_t>;

struct Box {
  Point lo{};
  Point hi{};
};

// Boundary subset Γ. Arcs are open angular intervals on the outer circle;
// faces name sides of the bounding box ("x0", "x1", "y0", ...) with an
// optional open window in the remaining coordinates.
struct GammaSpec {
  enum class Kind { Full, Arcs, Faces };
  struct Face {
    std::string name;
    bool windowed = false;
    std::array<double, 2> lo{};
    std::array<double, 2> hi{};
  };

  Kind kind = Kind::Full;
  std::vector<std::pair<double, double>> arcs;
  std::vector<Face> faces;

  static GammaSpec full();
  static GammaSpec arc(double theta0, double theta1);
  static GammaSpec face(const std::string& name);
};

struct DomainSpec {
  enum class Kind { Disk, Annulus, Rectangle, MaskedUnion };

  Kind kind = Kind::Disk;
  int dim = 2;
  Point center{};
  double radius = 1.0;
  double r_inner = 0.0;
  double r_outer = 0.0;
  std::vector<Box> boxes;
  GammaSpec gamma;

  static DomainSpec disk(double radius, Point center = {});
  static DomainSpec annulus(double r_inner, double r_outer, Point center = {});
  static DomainSpec rectangle(const Box& box, int dim = 2);
  static DomainSpec masked_union(std::vector<Box> boxes);
  DomainSpec with_gamma(GammaSpec g) const;

  void validate() const;
  bool is_polar() const { return kind == Kind::Disk || kind == Kind::Annulus; }
  bool contains(const Point& x, double tol = 1e-12) const;
  // Positive inside; for unions a lower bound on the true distance.
  double boundary_distance(const Point& x) const;
  double measure() const;
  double boundary_measure() const;
  double smallest_feature() const;
  Box bounding_box() const;
};

// Distance between the boundary of `inner` and the part of the boundary of
// `outer` it does not share (shared Dirichlet circles are skipped).
double nested_separation(const DomainSpec& inner, const DomainSpec& outer);

enum class Topology { Polar, Cartesian };

// Coefficient of the discrete Dirichlet form: Σ w (u_a − u_b)(v_a − v_b).
struct Edge {
  int a;
  int b;
  double weight;
};

struct Grid {
  DomainSpec spec;
  Topology topology = Topology::Polar;
  int dim = 2;
  double h = 0.0;

  // Polar layout: node = ring * ntheta + sector.
  int nrings = 0;
  int ntheta = 0;
  double dtheta = 0.0;
  std::vector<double> ring_radius;
  std::vector<double> ring_width;

  // Cartesian layout on a lattice; absent sites map to -1.
  std::array<int, 3> lattice{1, 1, 1};
  std::array<double, 3> spacing{};
  Point origin{};
  std::vector<int> node_of_site;
  std::vector<int> site_of_node;
  std::vector<std::uint8_t> cell_inside;

  std::vector<Point> nodes;
  std::vector<double> quad_weights;
  std::vector<Edge> edges;
  std::vector<int> incident_ptr;
  std::vector<int> incident_edges;

  Mask boundary_mask;
  Mask outer_mask;
  std::vector<int> interior_index;
  std::vector<int> boundary_index;
  std::vector<int> gamma_index;

  std::size_t size() const { return nodes.size(); }
  int neighbor(int node, int axis, int dir) const;
  double radius(int node) const;
  double theta(int node) const;
  int ring_of(int node) const { return node / ntheta; }
  int sector_of(int node) const { return node % ntheta; }
  std::array<int, 3> site_coords(int site) const;
  int site_index(const std::array<int, 3>& c) const;
  Mask full_mask() const { return Mask(nodes.size(), 1); }
};

Grid build_grid(const DomainSpec& spec, double h_target);

// Γ membership of a boundary node under the given descriptor.
bool in_gamma(const Grid& grid, const GammaSpec& gamma, int node);

struct BoundaryChart {
  const Grid* grid = nullptr;
  std::vector<int> nodes;
  std::vector<double> weights;
  std::vector<Edge> edges;
  Mask gamma;
  std::vector<int> gamma_local;
  std::vector<int> local_of;
  bool gamma_is_full = false;

  std::size_t size() const { return nodes.size(); }
  double measure() const;
};

BoundaryChart boundary_chart(const Grid& grid, const GammaSpec& gamma);

// Node masks on a grid.
Mask ball_mask(const Grid& grid, const Point& center, double radius);
Mask radial_mask(const Grid& grid, double r_min, double r_max);
Mask mask_and(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);
Mask mask_not(const Mask& a);
std::size_t mask_count(const Mask& m);
std::vector<int> mask_indices(const Mask& m);

// Number of grid layers separating two masks along edges (graph distance).
int layer_gap(const Grid& grid, const Mask& inner, const Mask& outer_boundary);

}  // namespace hlab
