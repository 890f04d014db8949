#include "hlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>

#include "hlab/error.hpp"

namespace hlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  return t < 0.0 ? t + kTwoPi : t;
}

bool box_contains(const Box& b, const Point& x, int dim, double tol) {
  for (int d = 0; d < dim; ++d) {
    if (x[d] < b.lo[d] - tol || x[d] > b.hi[d] + tol) return false;
  }
  return true;
}

double box_inner_distance(const Box& b, const Point& x, int dim) {
  double dist = INFINITY;
  for (int d = 0; d < dim; ++d) dist = std::min({dist, x[d] - b.lo[d], b.hi[d] - x[d]});
  return dist;
}

double planar_radius(const Point& x, const Point& c) { return std::hypot(x[0] - c[0], x[1] - c[1]); }

}  // namespace

GammaSpec GammaSpec::full() { return {}; }

GammaSpec GammaSpec::arc(double theta0, double theta1) {
  GammaSpec g;
  g.kind = Kind::Arcs;
  g.arcs.emplace_back(theta0, theta1);
  return g;
}

GammaSpec GammaSpec::face(const std::string& name) {
  GammaSpec g;
  g.kind = Kind::Faces;
  g.faces.push_back(Face{name});
  return g;
}

DomainSpec DomainSpec::disk(double radius, Point center) {
  DomainSpec s;
  s.kind = Kind::Disk;
  s.radius = radius;
  s.r_outer = radius;
  s.center = center;
  return s;
}

DomainSpec DomainSpec::annulus(double r_inner, double r_outer, Point center) {
  DomainSpec s;
  s.kind = Kind::Annulus;
  s.r_inner = r_inner;
  s.r_outer = r_outer;
  s.radius = r_outer;
  s.center = center;
  return s;
}

DomainSpec DomainSpec::rectangle(const Box& box, int dim) {
  DomainSpec s;
  s.kind = Kind::Rectangle;
  s.dim = dim;
  s.boxes = {box};
  return s;
}

DomainSpec DomainSpec::masked_union(std::vector<Box> boxes) {
  DomainSpec s;
  s.kind = Kind::MaskedUnion;
  s.boxes = std::move(boxes);
  return s;
}

DomainSpec DomainSpec::with_gamma(GammaSpec g) const {
  DomainSpec s = *this;
  s.gamma = std::move(g);
  return s;
}

void DomainSpec::validate() const {
  require(dim == 2 || dim == 3, ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  switch (kind) {
    case Kind::Disk:
      require(dim == 2 && radius > 0.0, ErrorCode::InvalidArgument, "disk needs radius > 0 in 2D");
      break;
    case Kind::Annulus:
      require(dim == 2 && r_inner > 0.0 && r_inner < r_outer, ErrorCode::InvalidArgument,
              "annulus needs 0 < r_inner < r_outer in 2D");
      break;
    case Kind::Rectangle:
    case Kind::MaskedUnion:
      require(!boxes.empty(), ErrorCode::InvalidArgument, "rectangle domains need at least one box");
      require(kind == Kind::Rectangle || dim == 2, ErrorCode::InvalidArgument,
              "masked unions are two-dimensional");
      for (const auto& b : boxes) {
        for (int d = 0; d < dim; ++d) {
          require(b.hi[d] > b.lo[d], ErrorCode::InvalidArgument, "box corners must be ordered");
        }
      }
      break;
  }
  if (gamma.kind == GammaSpec::Kind::Arcs) {
    require(is_polar(), ErrorCode::InvalidArgument, "angular gamma needs a circular boundary");
    require(!gamma.arcs.empty(), ErrorCode::EmptyGamma, "no arcs given");
    for (const auto& [a, b] : gamma.arcs) {
      require(b > a && b - a <= kTwoPi, ErrorCode::EmptyGamma, "arc must have positive length");
    }
  }
  if (gamma.kind == GammaSpec::Kind::Faces) {
    require(!gamma.faces.empty(), ErrorCode::EmptyGamma, "no faces given");
    require(!is_polar(), ErrorCode::InvalidArgument, "face gamma needs a box boundary");
  }
}

bool DomainSpec::contains(const Point& x, double tol) const {
  switch (kind) {
    case Kind::Disk:
      return planar_radius(x, center) <= radius + tol;
    case Kind::Annulus: {
      const double r = planar_radius(x, center);
      return r >= r_inner - tol && r <= r_outer + tol;
    }
    case Kind::Rectangle:
    case Kind::MaskedUnion:
      for (const auto& b : boxes) {
        if (box_contains(b, x, dim, tol)) return true;
      }
      return false;
  }
  return false;
}

double DomainSpec::boundary_distance(const Point& x) const {
  switch (kind) {
    case Kind::Disk:
      return radius - planar_radius(x, center);
    case Kind::Annulus: {
      const double r = planar_radius(x, center);
      return std::min(r - r_inner, r_outer - r);
    }
    case Kind::Rectangle:
    case Kind::MaskedUnion: {
      double best = -INFINITY;
      for (const auto& b : boxes) best = std::max(best, box_inner_distance(b, x, dim));
      return best;
    }
  }
  return 0.0;
}

double DomainSpec::measure() const {
  switch (kind) {
    case Kind::Disk:
      return std::numbers::pi * radius * radius;
    case Kind::Annulus:
      return std::numbers::pi * (r_outer * r_outer - r_inner * r_inner);
    case Kind::Rectangle: {
      double v = 1.0;
      for (int d = 0; d < dim; ++d) v *= boxes[0].hi[d] - boxes[0].lo[d];
      return v;
    }
    case Kind::MaskedUnion: {
      // Inclusion–exclusion is awkward for many boxes; integrate on a fine lattice.
      const Box bb = bounding_box();
      const int n = 2000;
      const double dx = (bb.hi[0] - bb.lo[0]) / n, dy = (bb.hi[1] - bb.lo[1]) / n;
      double area = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const Point p{bb.lo[0] + (i + 0.5) * dx, bb.lo[1] + (j + 0.5) * dy, 0.0};
          if (contains(p, 0.0)) area += dx * dy;
        }
      }
      return area;
    }
  }
  return 0.0;
}

double DomainSpec::boundary_measure() const {
  switch (kind) {
    case Kind::Disk:
      return kTwoPi * radius;
    case Kind::Annulus:
      return kTwoPi * (r_inner + r_outer);
    case Kind::Rectangle: {
      const auto& b = boxes[0];
      if (dim == 2) return 2.0 * ((b.hi[0] - b.lo[0]) + (b.hi[1] - b.lo[1]));
      const double a = b.hi[0] - b.lo[0], c = b.hi[1] - b.lo[1], e = b.hi[2] - b.lo[2];
      return 2.0 * (a * c + a * e + c * e);
    }
    case Kind::MaskedUnion:
      return NAN;
  }
  return 0.0;
}

double DomainSpec::smallest_feature() const {
  switch (kind) {
    case Kind::Disk:
      return 2.0 * radius;
    case Kind::Annulus:
      return r_outer - r_inner;
    case Kind::Rectangle:
    case Kind::MaskedUnion: {
      double f = INFINITY;
      for (const auto& b : boxes) {
        for (int d = 0; d < dim; ++d) f = std::min(f, b.hi[d] - b.lo[d]);
      }
      return f;
    }
  }
  return 0.0;
}

Box DomainSpec::bounding_box() const {
  Box bb;
  if (is_polar()) {
    for (int d = 0; d < 2; ++d) {
      bb.lo[d] = center[d] - r_outer;
      bb.hi[d] = center[d] + r_outer;
    }
    return bb;
  }
  bb = boxes.front();
  for (const auto& b : boxes) {
    for (int d = 0; d < dim; ++d) {
      bb.lo[d] = std::min(bb.lo[d], b.lo[d]);
      bb.hi[d] = std::max(bb.hi[d], b.hi[d]);
    }
  }
  return bb;
}

double nested_separation(const DomainSpec& inner, const DomainSpec& outer) {
  const bool concentric = inner.is_polar() && outer.is_polar() &&
                          planar_radius(inner.center, outer.center) == 0.0;
  if (concentric) {
    double sep = outer.r_outer - inner.r_outer;
    const double inner_hole = inner.kind == DomainSpec::Kind::Annulus ? inner.r_inner : 0.0;
    const double outer_hole = outer.kind == DomainSpec::Kind::Annulus ? outer.r_inner : 0.0;
    if (outer_hole > 0.0 && inner_hole != outer_hole) sep = std::min(sep, inner_hole - outer_hole);
    return sep;
  }
  // Generic case: sample the inner boundary densely.
  double sep = INFINITY;
  const int samples = 4096;
  if (inner.is_polar()) {
    for (int i = 0; i < samples; ++i) {
      const double t = kTwoPi * i / samples;
      const Point p{inner.center[0] + inner.r_outer * std::cos(t),
                    inner.center[1] + inner.r_outer * std::sin(t), 0.0};
      sep = std::min(sep, outer.boundary_distance(p));
    }
    return sep;
  }
  for (const auto& b : inner.boxes) {
    for (int i = 0; i <= samples; ++i) {
      const double s = static_cast<double>(i) / samples;
      const Point pts[4] = {{b.lo[0] + s * (b.hi[0] - b.lo[0]), b.lo[1], 0.0},
                            {b.lo[0] + s * (b.hi[0] - b.lo[0]), b.hi[1], 0.0},
                            {b.lo[0], b.lo[1] + s * (b.hi[1] - b.lo[1]), 0.0},
                            {b.hi[0], b.lo[1] + s * (b.hi[1] - b.lo[1]), 0.0}};
      for (const auto& p : pts) {
        if (!inner.contains(p, 0.0) || inner.boundary_distance(p) <= 1e-12) {
          sep = std::min(sep, outer.boundary_distance(p));
        }
      }
    }
  }
  return sep;
}

// ---------------------------------------------------------------------------

int Grid::neighbor(int node, int axis, int dir) const {
  if (topology == Topology::Polar) {
    const int i = ring_of(node), j = sector_of(node);
    if (axis == 0) {
      const int ii = i + dir;
      return (ii < 0 || ii >= nrings) ? -1 : ii * ntheta + j;
    }
    const int jj = (j + dir + ntheta) % ntheta;
    return i * ntheta + jj;
  }
  auto c = site_coords(site_of_node[node]);
  c[axis] += dir;
  if (c[axis] < 0 || c[axis] >= lattice[axis]) return -1;
  return node_of_site[site_index(c)];
}

double Grid::radius(int node) const {
  if (topology == Topology::Polar) return ring_radius[ring_of(node)];
  return planar_radius(nodes[node], spec.center);
}

double Grid::theta(int node) const {
  if (topology == Topology::Polar) return sector_of(node) * dtheta;
  return wrap_angle(std::atan2(nodes[node][1] - spec.center[1], nodes[node][0] - spec.center[0]));
}

std::array<int, 3> Grid::site_coords(int site) const {
  return {site % lattice[0], (site / lattice[0]) % lattice[1], site / (lattice[0] * lattice[1])};
}

int Grid::site_index(const std::array<int, 3>& c) const {
  return c[0] + lattice[0] * (c[1] + lattice[1] * c[2]);
}

namespace {

void finalize_incidence(Grid& g) {
  const int n = static_cast<int>(g.nodes.size());
  g.incident_ptr.assign(n + 1, 0);
  for (const auto& e : g.edges) {
    ++g.incident_ptr[e.a + 1];
    ++g.incident_ptr[e.b + 1];
  }
  for (int i = 0; i < n; ++i) g.incident_ptr[i + 1] += g.incident_ptr[i];
  g.incident_edges.assign(g.incident_ptr[n], 0);
  std::vector<int> fill(g.incident_ptr.begin(), g.incident_ptr.end() - 1);
  for (int k = 0; k < static_cast<int>(g.edges.size()); ++k) {
    g.incident_edges[fill[g.edges[k].a]++] = k;
    g.incident_edges[fill[g.edges[k].b]++] = k;
  }
  g.interior_index.clear();
  g.boundary_index.clear();
  g.gamma_index.clear();
  for (int i = 0; i < n; ++i) {
    (g.boundary_mask[i] ? g.boundary_index : g.interior_index).push_back(i);
    if (g.outer_mask[i] && in_gamma(g, g.spec.gamma, i)) g.gamma_index.push_back(i);
  }
}

Grid build_polar(const DomainSpec& s, double h) {
  Grid g;
  g.spec = s;
  g.topology = Topology::Polar;
  g.dim = 2;
  g.h = h;
  const double R = s.r_outer;
  g.ntheta = std::max(16, static_cast<int>(std::ceil(kTwoPi * R / h - 1e-9)));
  g.dtheta = kTwoPi / g.ntheta;

  if (s.kind == DomainSpec::Kind::Disk) {
    // Cell-centred rings at (i + 1/2)Δr; the flux through r = 0 vanishes.
    const int N = static_cast<int>(std::lround(R / h - 0.5));
    require(N >= 4, ErrorCode::FeatureUnresolved, "disk needs at least 4 radial layers");
    const double dr = R / (N + 0.5);
    for (int i = 0; i < N; ++i) {
      g.ring_radius.push_back((i + 0.5) * dr);
      g.ring_width.push_back(dr);
    }
    g.ring_radius.push_back(R);
    g.ring_width.push_back(0.5 * dr);
  } else {
    const int N = static_cast<int>(std::lround((s.r_outer - s.r_inner) / h));
    require(N >= 4, ErrorCode::FeatureUnresolved, "annulus shell needs at least 4 radial layers");
    const double dr = (s.r_outer - s.r_inner) / N;
    for (int i = 0; i <= N; ++i) {
      g.ring_radius.push_back(i == N ? s.r_outer : s.r_inner + i * dr);
      g.ring_width.push_back((i == 0 || i == N) ? 0.5 * dr : dr);
    }
  }
  g.nrings = static_cast<int>(g.ring_radius.size());

  const int n = g.nrings * g.ntheta;
  g.nodes.resize(n);
  g.quad_weights.resize(n);
  g.boundary_mask.assign(n, 0);
  g.outer_mask.assign(n, 0);
  for (int i = 0; i < g.nrings; ++i) {
    const double r = g.ring_radius[i];
    const bool outer = i == g.nrings - 1;
    const bool inner = s.kind == DomainSpec::Kind::Annulus && i == 0;
    for (int j = 0; j < g.ntheta; ++j) {
      const int id = i * g.ntheta + j;
      const double t = j * g.dtheta;
      g.nodes[id] = {s.center[0] + r * std::cos(t), s.center[1] + r * std::sin(t), 0.0};
      g.quad_weights[id] = r * g.ring_width[i] * g.dtheta;
      g.boundary_mask[id] = (outer || inner) ? 1 : 0;
      g.outer_mask[id] = outer ? 1 : 0;
    }
  }
  for (int i = 0; i < g.nrings; ++i) {
    const double r = g.ring_radius[i];
    for (int j = 0; j < g.ntheta; ++j) {
      const int id = i * g.ntheta + j;
      g.edges.push_back({id, i * g.ntheta + (j + 1) % g.ntheta, g.ring_width[i] / (r * g.dtheta)});
      if (i + 1 < g.nrings) {
        const double r1 = g.ring_radius[i + 1];
        g.edges.push_back({id, id + g.ntheta, 0.5 * (r + r1) * g.dtheta / (r1 - r)});
      }
    }
  }
  finalize_incidence(g);
  return g;
}

Grid build_cartesian(const DomainSpec& s, double h) {
  Grid g;
  g.spec = s;
  g.topology = Topology::Cartesian;
  g.dim = s.dim;
  g.h = h;
  const Box bb = s.bounding_box();
  for (int d = 0; d < 3; ++d) {
    if (d < s.dim) {
      const double L = bb.hi[d] - bb.lo[d];
      g.lattice[d] = std::max(2, static_cast<int>(std::lround(L / h)) + 1);
      g.spacing[d] = L / (g.lattice[d] - 1);
      g.origin[d] = bb.lo[d];
    } else {
      g.lattice[d] = 1;
      g.spacing[d] = 1.0;
      g.origin[d] = 0.0;
    }
  }
  for (const auto& b : s.boxes) {
    for (int d = 0; d < s.dim; ++d) {
      require((b.hi[d] - b.lo[d]) / g.spacing[d] >= 4.0 - 1e-9, ErrorCode::FeatureUnresolved,
              "box narrower than 4 grid layers");
    }
  }

  const std::array<int, 3> cells{std::max(1, g.lattice[0] - 1), std::max(1, g.lattice[1] - 1),
                                 s.dim == 3 ? g.lattice[2] - 1 : 1};
  auto cell_index = [&](int i, int j, int k) { return i + cells[0] * (j + cells[1] * k); };
  auto cell_valid = [&](int i, int j, int k) {
    return i >= 0 && j >= 0 && k >= 0 && i < cells[0] && j < cells[1] && k < cells[2];
  };
  g.cell_inside.assign(static_cast<std::size_t>(cells[0]) * cells[1] * cells[2], 0);
  for (int k = 0; k < cells[2]; ++k) {
    for (int j = 0; j < cells[1]; ++j) {
      for (int i = 0; i < cells[0]; ++i) {
        Point c{g.origin[0] + (i + 0.5) * g.spacing[0], g.origin[1] + (j + 0.5) * g.spacing[1],
                s.dim == 3 ? g.origin[2] + (k + 0.5) * g.spacing[2] : 0.0};
        g.cell_inside[cell_index(i, j, k)] = s.contains(c, 0.0) ? 1 : 0;
      }
    }
  }
  auto inside = [&](int i, int j, int k) {
    return cell_valid(i, j, k) && g.cell_inside[cell_index(i, j, k)];
  };

  const double cell_volume = g.spacing[0] * g.spacing[1] * (s.dim == 3 ? g.spacing[2] : 1.0);
  const int corner_count = s.dim == 3 ? 8 : 4;
  const int kmax = s.dim == 3 ? 1 : 0;
  const int sites = g.lattice[0] * g.lattice[1] * g.lattice[2];
  g.node_of_site.assign(sites, -1);
  for (int site = 0; site < sites; ++site) {
    const auto c = g.site_coords(site);
    int in = 0;
    for (int dk = 0; dk <= kmax; ++dk) {
      for (int dj = 0; dj <= 1; ++dj) {
        for (int di = 0; di <= 1; ++di) in += inside(c[0] - di, c[1] - dj, c[2] - dk) ? 1 : 0;
      }
    }
    if (in == 0) continue;
    const int id = static_cast<int>(g.nodes.size());
    g.node_of_site[site] = id;
    g.site_of_node.push_back(site);
    g.nodes.push_back({g.origin[0] + c[0] * g.spacing[0], g.origin[1] + c[1] * g.spacing[1],
                       s.dim == 3 ? g.origin[2] + c[2] * g.spacing[2] : 0.0});
    g.quad_weights.push_back(in * cell_volume / corner_count);
    const bool bnd = in < corner_count;
    g.boundary_mask.push_back(bnd ? 1 : 0);
    g.outer_mask.push_back(bnd ? 1 : 0);
  }

  // Edge along axis d: dual face made of the cells sharing the edge.
  for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
    const auto c = g.site_coords(g.site_of_node[id]);
    for (int d = 0; d < s.dim; ++d) {
      if (c[d] + 1 >= g.lattice[d]) continue;
      auto cn = c;
      cn[d] += 1;
      const int other = g.node_of_site[g.site_index(cn)];
      if (other < 0) continue;
      const int a1 = (d + 1) % s.dim, a2 = (d + 2) % s.dim;
      int in = 0;
      const int span2 = s.dim == 3 ? 1 : 0;
      for (int o2 = 0; o2 <= span2; ++o2) {
        for (int o1 = 0; o1 <= 1; ++o1) {
          std::array<int, 3> cc = c;
          cc[a1] -= o1;
          if (s.dim == 3) cc[a2] -= o2;
          in += inside(cc[0], cc[1], cc[2]) ? 1 : 0;
        }
      }
      if (in == 0) continue;
      const double face = in * cell_volume / (corner_count / 2) / g.spacing[d];
      g.edges.push_back({id, other, face / g.spacing[d]});
    }
  }
  finalize_incidence(g);
  return g;
}

}  // namespace

Grid build_grid(const DomainSpec& spec, double h_target) {
  require(h_target > 0.0, ErrorCode::InvalidArgument, "h_target must be positive");
  spec.validate();
  require(spec.smallest_feature() / h_target >= 4.0 - 1e-9, ErrorCode::FeatureUnresolved,
          "fewer than 4 grid layers across the smallest feature");
  Grid g = spec.is_polar() ? build_polar(spec, h_target) : build_cartesian(spec, h_target);
  require(!g.gamma_index.empty(), ErrorCode::EmptyGamma, "gamma selects no boundary node");
  return g;
}

bool in_gamma(const Grid& grid, const GammaSpec& gamma, int node) {
  if (!grid.outer_mask[node]) return false;
  switch (gamma.kind) {
    case GammaSpec::Kind::Full:
      return true;
    case GammaSpec::Kind::Arcs: {
      const double t = grid.theta(node);
      for (const auto& [a, b] : gamma.arcs) {
        const double rel = wrap_angle(t - a);
        if (rel > 1e-12 && rel < (b - a) - 1e-12) return true;
      }
      return false;
    }
    case GammaSpec::Kind::Faces: {
      const Box bb = grid.spec.bounding_box();
      const Point& x = grid.nodes[node];
      const double tol = 1e-9 * (1.0 + std::abs(bb.hi[0] - bb.lo[0]));
      auto on_face = [&](int d, int side) {
        return std::abs(x[d] - (side ? bb.hi[d] : bb.lo[d])) <= tol;
      };
      for (const auto& f : gamma.faces) {
        require(f.name.size() == 2 && (f.name[1] == '0' || f.name[1] == '1'),
                ErrorCode::InvalidArgument, "face names look like x0, x1, y0, y1, z0, z1");
        const int d = f.name[0] - 'x';
        const int side = f.name[1] - '0';
        require(d >= 0 && d < grid.dim, ErrorCode::InvalidArgument, "face axis out of range");
        if (!on_face(d, side)) continue;
        bool relative_interior = true;
        for (int e = 0; e < grid.dim && relative_interior; ++e) {
          if (e != d && (on_face(e, 0) || on_face(e, 1))) relative_interior = false;
        }
        if (!relative_interior) continue;
        if (f.windowed) {
          int slot = 0;
          bool ok = true;
          for (int e = 0; e < grid.dim; ++e) {
            if (e == d) continue;
            if (!(x[e] > f.lo[slot] + tol && x[e] < f.hi[slot] - tol)) ok = false;
            ++slot;
          }
          if (!ok) continue;
        }
        return true;
      }
      return false;
    }
  }
  return false;
}

double BoundaryChart::measure() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

BoundaryChart boundary_chart(const Grid& grid, const GammaSpec& gamma) {
  BoundaryChart chart;
  chart.grid = &grid;
  chart.local_of.assign(grid.size(), -1);
  for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
    if (!grid.outer_mask[i]) continue;
    chart.local_of[i] = static_cast<int>(chart.nodes.size());
    chart.nodes.push_back(i);
  }
  const std::size_t m = chart.nodes.size();
  chart.weights.assign(m, 0.0);

  if (grid.topology == Topology::Polar) {
    const int ring = grid.nrings - 1;
    const double R = grid.ring_radius[ring];
    for (int j = 0; j < grid.ntheta; ++j) {
      const int a = chart.local_of[ring * grid.ntheta + j];
      const int b = chart.local_of[ring * grid.ntheta + (j + 1) % grid.ntheta];
      chart.weights[a] = R * grid.dtheta;
      chart.edges.push_back({a, b, 1.0 / (R * grid.dtheta)});
    }
  } else {
    std::map<std::pair<int, int>, double> acc;
    auto add_edge = [&](int a, int b, double w) {
      if (a > b) std::swap(a, b);
      acc[{a, b}] += w;
    };
    const std::array<int, 3> cells{grid.lattice[0] - 1, grid.lattice[1] - 1,
                                   grid.dim == 3 ? grid.lattice[2] - 1 : 1};
    auto inside = [&](int i, int j, int k) {
      if (i < 0 || j < 0 || k < 0 || i >= cells[0] || j >= cells[1] || k >= cells[2]) return false;
      return grid.cell_inside[i + cells[0] * (j + cells[1] * k)] != 0;
    };
    for (int id = 0; id < static_cast<int>(grid.size()); ++id) {
      const auto c = grid.site_coords(grid.site_of_node[id]);
      if (grid.dim == 2) {
        // Lattice edge from c along d is a boundary segment when exactly one
        // of its two adjacent cells lies inside.
        for (int d = 0; d < 2; ++d) {
          if (c[d] + 1 >= grid.lattice[d]) continue;
          auto cn = c;
          cn[d] += 1;
          const int other = grid.node_of_site[grid.site_index(cn)];
          if (other < 0) continue;
          const int e = 1 - d;
          auto c0 = c, c1 = c;
          c1[e] -= 1;
          if (inside(c0[0], c0[1], 0) == inside(c1[0], c1[1], 0)) continue;
          const double len = grid.spacing[d];
          const int a = chart.local_of[id], b = chart.local_of[other];
          chart.weights[a] += 0.5 * len;
          chart.weights[b] += 0.5 * len;
          add_edge(a, b, 1.0 / len);
        }
      } else {
        // Lattice square with lower corner c, normal d, is a surface face
        // when exactly one of the two cubes it separates lies inside.
        for (int d = 0; d < 3; ++d) {
          const int a1 = (d + 1) % 3, a2 = (d + 2) % 3;
          if (c[a1] + 1 >= grid.lattice[a1] || c[a2] + 1 >= grid.lattice[a2]) continue;
          auto below = c;
          below[d] -= 1;
          if (inside(c[0], c[1], c[2]) == inside(below[0], below[1], below[2])) continue;
          std::array<int, 4> corner{};
          bool complete = true;
          for (int q = 0; q < 4; ++q) {
            auto cc = c;
            cc[a1] += q & 1;
            cc[a2] += (q >> 1) & 1;
            const int node = grid.node_of_site[grid.site_index(cc)];
            if (node < 0 || chart.local_of[node] < 0) complete = false;
            corner[q] = complete ? chart.local_of[node] : -1;
          }
          if (!complete) continue;
          const double s1 = grid.spacing[a1], s2 = grid.spacing[a2];
          for (int q = 0; q < 4; ++q) chart.weights[corner[q]] += 0.25 * s1 * s2;
          add_edge(corner[0], corner[1], 0.5 * s2 / s1);
          add_edge(corner[2], corner[3], 0.5 * s2 / s1);
          add_edge(corner[0], corner[2], 0.5 * s1 / s2);
          add_edge(corner[1], corner[3], 0.5 * s1 / s2);
        }
      }
    }
    for (const auto& [key, w] : acc) chart.edges.push_back({key.first, key.second, w});
  }

  chart.gamma.assign(m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    if (in_gamma(grid, gamma, chart.nodes[a])) {
      chart.gamma[a] = 1;
      chart.gamma_local.push_back(static_cast<int>(a));
    }
  }
  require(!chart.gamma_local.empty(), ErrorCode::EmptyGamma, "gamma selects no boundary node");
  chart.gamma_is_full = chart.gamma_local.size() == m;
  return chart;
}

Mask ball_mask(const Grid& grid, const Point& center, double radius) {
  Mask m(grid.size(), 0);
  const double tol = 1e-12 * (1.0 + radius);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& x = grid.nodes[i];
    double d2 = 0.0;
    for (int d = 0; d < grid.dim; ++d) d2 += (x[d] - center[d]) * (x[d] - center[d]);
    m[i] = std::sqrt(d2) <= radius + tol ? 1 : 0;
  }
  return m;
}

Mask radial_mask(const Grid& grid, double r_min, double r_max) {
  Mask m(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.radius(static_cast<int>(i));
    m[i] = (r >= r_min - 1e-12 && r <= r_max + 1e-12) ? 1 : 0;
  }
  return m;
}

Mask mask_and(const Mask& a, const Mask& b) {
  require(a.size() == b.size(), ErrorCode::RegionMismatch, "mask sizes differ");
  Mask m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = (a[i] && b[i]) ? 1 : 0;
  return m;
}

Mask mask_or(const Mask& a, const Mask& b) {
  require(a.size() == b.size(), ErrorCode::RegionMismatch, "mask sizes differ");
  Mask m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = (a[i] || b[i]) ? 1 : 0;
  return m;
}

Mask mask_not(const Mask& a) {
  Mask m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = a[i] ? 0 : 1;
  return m;
}

std::size_t mask_count(const Mask& m) {
  return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; }));
}

std::vector<int> mask_indices(const Mask& m) {
  std::vector<int> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

int layer_gap(const Grid& grid, const Mask& inner, const Mask& outer_boundary) {
  std::vector<int> dist(grid.size(), -1);
  std::deque<int> queue;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (inner[i]) {
      dist[i] = 0;
      queue.push_back(static_cast<int>(i));
    }
  }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    if (outer_boundary[v]) return dist[v];
    for (int p = grid.incident_ptr[v]; p < grid.incident_ptr[v + 1]; ++p) {
      const auto& e = grid.edges[grid.incident_edges[p]];
      const int w = e.a == v ? e.b : e.a;
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return -1;
}

}  // namespace hlab
