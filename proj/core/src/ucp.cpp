#include "hlab/ucp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <queue>

#include "hlab/bessel.hpp"
#include "hlab/error.hpp"
#include "hlab/parallel.hpp"
#include "hlab/stats.hpp"

namespace hlab {

namespace {

double dist(const Point& a, const Point& b) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

double ball_l2(const GridField& u, const Point& c, double rho) {
  const Grid& g = *u.grid;
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (dist(g.nodes[i], c) <= rho) s += g.quad_weights[i] * u.values[i] * u.values[i];
  }
  return std::sqrt(s);
}

void fill_norms(BallTriple& t, const GridField& u) {
  t.inner = ball_l2(u, t.center, 0.5 * t.r);
  t.middle = ball_l2(u, t.center, t.r);
  t.outer = ball_l2(u, t.center, 2.0 * t.r);
}

// Uniform buckets over the bounding box for radius queries.
class Buckets {
 public:
  Buckets(const Grid& g, const std::vector<int>& nodes, double cell) : g_(g), cell_(cell) {
    lo_ = {INFINITY, INFINITY};
    Point hi{-INFINITY, -INFINITY, 0.0};
    for (int n : nodes) {
      for (int d = 0; d < 2; ++d) {
        lo_[d] = std::min(lo_[d], g.nodes[n][d]);
        hi[d] = std::max(hi[d], g.nodes[n][d]);
      }
    }
    for (int d = 0; d < 2; ++d) dims_[d] = std::max(1, static_cast<int>((hi[d] - lo_[d]) / cell_) + 1);
    cells_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1], {});
    for (int n : nodes) cells_[index(cell_of(g.nodes[n], 0), cell_of(g.nodes[n], 1))].push_back(n);
  }

  template <class F>
  void visit(const Point& c, double rho, F&& f) const {
    const int i0 = std::max(0, cell_of_unclamped(c[0] - rho, 0));
    const int i1 = std::min(dims_[0] - 1, cell_of_unclamped(c[0] + rho, 0));
    const int j0 = std::max(0, cell_of_unclamped(c[1] - rho, 1));
    const int j1 = std::min(dims_[1] - 1, cell_of_unclamped(c[1] + rho, 1));
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        for (int n : cells_[index(i, j)]) {
          if (dist(g_.nodes[n], c) <= rho) f(n);
        }
      }
    }
  }

 private:
  int cell_of_unclamped(double x, int d) const {
    return static_cast<int>(std::floor((x - lo_[d]) / cell_));
  }
  int cell_of(const Point& x, int d) const {
    return std::clamp(cell_of_unclamped(x[d], d), 0, dims_[d] - 1);
  }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * dims_[1] + j; }

  const Grid& g_;
  double cell_;
  std::array<double, 2> lo_{};
  std::array<int, 2> dims_{};
  std::vector<std::vector<int>> cells_;
};

}  // namespace

BallTriple three_ball_ratio(const GridField& u, const Point& x0, double r, double k, int family,
                            double min_cells) {
  require(u.grid != nullptr, ErrorCode::InvalidArgument, "field without grid");
  const Grid& g = *u.grid;
  require(r > 0.0 && r >= min_cells * g.h - 1e-12, ErrorCode::GeometryViolation,
          "ball radius below the resolution floor");
  require(g.spec.boundary_distance(x0) >= 4.0 * r - 1e-12, ErrorCode::GeometryViolation,
          "B_4r(x0) leaves the domain");
  BallTriple t;
  t.center = x0;
  t.r = r;
  t.k = k;
  t.family = family;
  fill_norms(t, u);
  return t;
}

BallTriple boundary_ball_ratio(const GridField& u, const GammaSpec& gamma, const Point& x0,
                               double r, double k, double eta, int family, double min_cells) {
  require(u.grid != nullptr, ErrorCode::InvalidArgument, "field without grid");
  const Grid& g = *u.grid;
  require(g.topology == Topology::Polar, ErrorCode::GeometryViolation,
          "boundary triples need a polar grid");
  require(r > 0.0 && r >= min_cells * g.h - 1e-12, ErrorCode::GeometryViolation,
          "ball radius below the resolution floor");
  require(std::abs(g.spec.boundary_distance(x0)) <= 1e-9, ErrorCode::GeometryViolation,
          "boundary centre must lie on the boundary");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.boundary_mask[i]) continue;
    if (g.outer_mask[i] && in_gamma(g, gamma, static_cast<int>(i))) continue;
    require(dist(g.nodes[i], x0) >= 4.0 * r, ErrorCode::GeometryViolation,
            "B_4r(x0) reaches the boundary outside Γ");
  }
  BallTriple t;
  t.center = x0;
  t.r = r;
  t.k = k;
  t.family = family;
  t.boundary = true;
  t.eta = eta;
  fill_norms(t, u);
  return t;
}

double cauchy_data_size(const DiscreteOperator& op, const GridField& u, const TraceSpacePtr& space) {
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(u.values.size());
  const Eigen::VectorXd t = space->restrict_to_gamma(space->from_grid(u.values));
  const double dirichlet = std::sqrt(std::max(0.0, t.dot(space->gamma_gram() * t)));
  const BoundaryFunctional l = weak_neumann_trace(op, u.values, f, space);
  return dirichlet + dual_norm(l);
}

double ThreeBallsFit::log_constant(double k) const {
  const auto it = log_c.find(k);
  if (it != log_c.end()) return it->second;
  // Nearest calibrated k from above keeps the envelope conservative.
  const auto up = log_c.lower_bound(k);
  if (up != log_c.end()) return up->second;
  require(!log_c.empty(), ErrorCode::DegenerateSamples, "empty fit");
  return log_c.rbegin()->second;
}

namespace {

// y = log N_r − log N_2r ≤ c + α x. Interior x = log(N_{r/2}/N_{2r}); boundary
// x = log(η/(N_{2r}+η)) with N_{2r} replaced by N_{2r}+η in y.
std::pair<double, double> fit_coordinates(const BallTriple& t) {
  if (t.boundary) {
    const double big = t.outer + t.eta;
    return {std::log(t.eta / big), std::log(t.middle / big)};
  }
  return {std::log(t.inner / t.outer), std::log(t.middle / t.outer)};
}

bool usable(const BallTriple& t) {
  const bool base = t.middle > 0.0 && t.outer > 0.0 && std::isfinite(t.outer);
  return base && (t.boundary ? t.eta > 0.0 : t.inner > 0.0);
}

}  // namespace

double ThreeBallsFit::margin(const BallTriple& t) const {
  const auto [x, y] = fit_coordinates(t);
  return log_constant(t.k) + alpha * x - y;
}

ThreeBallsFit estimate_exponent(const std::vector<BallTriple>& samples) {
  require(samples.size() >= 10, ErrorCode::DegenerateSamples, "at least 10 samples are needed");
  const bool boundary = samples.front().boundary;
  std::vector<double> ks;
  std::vector<std::pair<double, double>> xy;
  for (const auto& t : samples) {
    require(t.boundary == boundary, ErrorCode::DegenerateSamples, "mixed interior and boundary samples");
    require(usable(t), ErrorCode::DegenerateSamples, "sample with vanishing norms");
    xy.push_back(fit_coordinates(t));
    if (std::find(ks.begin(), ks.end(), t.k) == ks.end()) ks.push_back(t.k);
  }
  std::sort(ks.begin(), ks.end());

  // Spread of x within each k; without it α is not identifiable.
  double spread = 0.0;
  for (double k : ks) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].k != k) continue;
      lo = std::min(lo, xy[i].first);
      hi = std::max(hi, xy[i].first);
    }
    spread = std::max(spread, hi - lo);
  }
  require(spread > 1e-9, ErrorCode::DegenerateSamples, "samples do not vary");

  // Design [x, 𝟙_{k=k_1}, …, 𝟙_{k=k_m}].
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::vector<double> row(1 + ks.size(), 0.0);
    row[0] = xy[i].first;
    row[1 + (std::find(ks.begin(), ks.end(), samples[i].k) - ks.begin())] = 1.0;
    rows.push_back(std::move(row));
    y.push_back(xy[i].second);
  }
  const std::vector<double> beta = least_squares(rows, y);

  ThreeBallsFit fit;
  fit.boundary = boundary;
  fit.samples = static_cast<int>(samples.size());
  fit.alpha = std::clamp(beta[0], 0.01, 0.99);
  for (std::size_t j = 0; j < ks.size(); ++j) {
    fit.log_c_ls[ks[j]] = beta[1 + j];
    double worst = -INFINITY;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].k == ks[j]) worst = std::max(worst, xy[i].second - fit.alpha * xy[i].first);
    }
    fit.log_c[ks[j]] = worst;
  }
  return fit;
}

ChainResult chain_propagate(const GridField& u, double eta, double M, double epsilon,
                            const ChainParams& p) {
  require(u.grid != nullptr, ErrorCode::InvalidArgument, "field without grid");
  require(eta >= 0.0 && M >= 0.0 && epsilon > 0.0, ErrorCode::InvalidArgument,
          "η, M must be nonnegative and ε positive");
  const Grid& g = *u.grid;
  const std::size_t n = g.size();
  auto dist_to_boundary = [&](const Point& x) { return g.spec.boundary_distance(x); };

  std::vector<double> d(n);
  std::vector<int> inner_nodes;
  Mask inner(n, 0);
  ChainResult out;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = g.boundary_mask[i] ? 0.0 : dist_to_boundary(g.nodes[i]);
    if (d[i] >= epsilon) {
      inner[i] = 1;
      inner_nodes.push_back(static_cast<int>(i));
    } else {
      out.layer_measure += g.quad_weights[i];
    }
  }
  require(!inner_nodes.empty(), ErrorCode::ChainBlocked, "Ω_ε is empty");

  double sq_inner = 0.0, sq_all = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = g.quad_weights[i] * u.values[i] * u.values[i];
    sq_all += s;
    if (inner[i]) sq_inner += s;
  }
  out.measured_interior = std::sqrt(sq_inner);
  out.measured = std::sqrt(sq_all);

  // Shortest paths in the metric |dx|/d(x) through Ω_ε, from every node whose
  // half ball lies in the start ball.
  std::vector<double> cost(n, INFINITY);
  std::vector<int> parent(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (int i : inner_nodes) {
    if (dist(g.nodes[i], p.start) + 0.125 * d[i] <= p.start_radius) {
      cost[i] = 0.0;
      heap.emplace(0.0, i);
    }
  }
  require(!heap.empty(), ErrorCode::ChainBlocked, "no interior ball fits inside the start ball");
  while (!heap.empty()) {
    const auto [c, a] = heap.top();
    heap.pop();
    if (c > cost[a]) continue;
    for (int e = g.incident_ptr[a]; e < g.incident_ptr[a + 1]; ++e) {
      const Edge& ed = g.edges[g.incident_edges[e]];
      const int b = ed.a == a ? ed.b : ed.a;
      if (!inner[b]) continue;
      const double w = 2.0 * dist(g.nodes[a], g.nodes[b]) / (d[a] + d[b]);
      if (c + w < cost[b]) {
        cost[b] = c + w;
        parent[b] = a;
        heap.emplace(cost[b], b);
      }
    }
  }
  for (int i : inner_nodes) {
    require(std::isfinite(cost[i]), ErrorCode::ChainBlocked, "Ω_ε is not connected to the start ball");
  }

  // Walk each path with steps 0.4·r(x), r = d/4: then |Δ| + r(y)/2 ≤ r(x), so
  // the half ball of the next centre sits inside the current ball.
  std::vector<int> depth(n, 0);
  parallel_for(inner_nodes.size(), [&](std::size_t t) {
    const int target = inner_nodes[t];
    std::vector<int> path;
    for (int v = target; v >= 0; v = parent[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    Point x = g.nodes[path.front()];
    int count = 1;
    std::size_t next = 1;
    while (next < path.size()) {
      double step = 0.1 * dist_to_boundary(x);
      // Arclength left to the target along the polyline.
      double left = dist(x, g.nodes[path[next]]);
      for (std::size_t j = next + 1; j < path.size(); ++j) left += dist(g.nodes[path[j - 1]], g.nodes[path[j]]);
      ++count;
      if (left <= step) break;
      while (step > 0.0) {
        const Point& y = g.nodes[path[next]];
        const double seg = dist(x, y);
        if (seg <= step) {
          x = y;
          step -= seg;
          ++next;
        } else {
          for (int k = 0; k < 3; ++k) x[k] += (y[k] - x[k]) * (step / seg);
          step = 0.0;
        }
      }
    }
    depth[target] = count;
  });
  for (int i : inner_nodes) out.n_balls = std::max(out.n_balls, depth[i]);

  const double alpha = p.interior.alpha;
  const double log_ci = p.interior.log_constant(p.k);
  const double alpha0 = p.boundary.alpha;
  const double log_cb = p.boundary.log_constant(p.k);
  const double logM = std::log(M);

  // m_0 bounds ‖u‖ on the start half ball; m_j = C M^{1−α} m_{j−1}^α.
  std::vector<double> log_m(out.n_balls + 1, -INFINITY);
  if (eta > 0.0) {
    log_m[0] = log_cb + (1.0 - alpha0) * std::log(M + eta) + alpha0 * std::log(eta);
    for (int j = 1; j <= out.n_balls; ++j) {
      log_m[j] = log_ci + (1.0 - alpha) * logM + alpha * log_m[j - 1];
    }
  }

  // Greedy cover by shallow balls first.
  std::vector<int> order = inner_nodes;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return depth[a] < depth[b]; });
  double rmax = 0.0;
  for (int i : inner_nodes) rmax = std::max(rmax, 0.25 * d[i]);
  const Buckets buckets(g, inner_nodes, std::max(rmax, g.h));
  Mask covered(n, 0);
  double sum = 0.0;
  for (int c : order) {
    if (covered[c]) continue;
    ++out.cover_balls;
    const double lm = log_m[depth[c]];
    if (std::isfinite(lm)) sum += std::exp(2.0 * lm);
    buckets.visit(g.nodes[c], 0.25 * d[c], [&](int y) { covered[y] = 1; });
  }
  out.bound_interior = std::sqrt(sum);
  out.bound_layer = std::pow(out.layer_measure, 0.25) * p.sobolev_constant * M;
  out.bound = out.bound_interior + out.bound_layer;
  out.log_bound = eta > 0.0 ? p.k * std::pow(std::abs(std::log(eta / (M + eta))), -p.mu) * (M + eta)
                            : 0.0;
  return out;
}

double caccioppoli_ratio(const GridField& u, double k, double epsilon) {
  const Grid& g = *u.grid;
  Mask far(g.size(), 0), near(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double di = g.boundary_mask[i] ? 0.0 : g.spec.boundary_distance(g.nodes[i]);
    far[i] = di >= epsilon;
    near[i] = di >= 0.5 * epsilon;
  }
  require(mask_count(far) > 0, ErrorCode::GeometryViolation, "Ω_ε is empty");
  const double grad = norm(u, NormKind::H1Semi, far);
  const double base = norm(u, NormKind::L2, near);
  if (grad == 0.0) return 0.0;
  return grad * epsilon / (k * base);
}

double eta_source_ratio(const DirichletSolver& solver, const TraceSpacePtr& space,
                        const GridField& v, const Mask& omega1) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(v.values.size());
  for (std::size_t i = 0; i < omega1.size(); ++i) {
    if (omega1[i]) f[i] = v.values[i];
  }
  const Eigen::VectorXd w = solver.solve_source(f);
  const BoundaryFunctional l = weak_neumann_trace(solver.op(), w, f, space);
  const double vn = norm(v, NormKind::L2, omega1);
  if (vn == 0.0) return 0.0;
  const double k = solver.op().k();
  return dual_norm(l) / (std::pow(k, solver.grid().dim + 2) * vn);
}

GridField sample_mode(const Grid& grid, double k, int ell, const Point& c, double phase) {
  return GridField::sample(grid, [&](const Point& x) {
    const double dx = x[0] - c[0], dy = x[1] - c[1];
    const double rho = std::hypot(dx, dy);
    return bessel_j(ell, k * rho) * std::cos(ell * std::atan2(dy, dx) + phase);
  });
}

GridField mode_solution(const DirichletSolver& solver, int ell, const Point& c, double phase) {
  const Grid& g = solver.grid();
  const GridField data = sample_mode(g, solver.op().k(), ell, c, phase);
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(g.size());
  return GridField(g, solver.solve(f, data.values));
}

void write_triples_csv(const std::vector<BallTriple>& triples, const std::string& path,
                       const std::string& header) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::InvalidArgument, "cannot open " + path);
  os << header;
  os << "x0,y0,r,inner,middle,outer,k,family,boundary,eta\n";
  os << std::setprecision(17);
  for (const auto& t : triples) {
    os << t.center[0] << ',' << t.center[1] << ',' << t.r << ',' << t.inner << ',' << t.middle
       << ',' << t.outer << ',' << t.k << ',' << t.family << ',' << (t.boundary ? 1 : 0) << ','
       << t.eta << '\n';
  }
}

}  // namespace hlab
