#include "hlab/fields.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>

#include "hlab/error.hpp"

namespace hlab {

GridField::GridField(const Grid& g, Eigen::VectorXd v, Mask r)
    : grid(&g), values(std::move(v)), region(r.empty() ? g.full_mask() : std::move(r)) {
  require(static_cast<std::size_t>(values.size()) == g.size() && region.size() == g.size(),
          ErrorCode::RegionMismatch, "field size does not match the grid");
}

GridField GridField::zeros(const Grid& g) { return GridField(g, Eigen::VectorXd::Zero(g.size())); }

GridField GridField::sample(const Grid& g, const std::function<double(const Point&)>& f) {
  Eigen::VectorXd v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g.nodes[i]);
  return GridField(g, std::move(v));
}

namespace {

void same_grid(const GridField& a, const GridField& b) {
  require(a.grid != nullptr && a.grid == b.grid, ErrorCode::RegionMismatch,
          "arithmetic between fields on different grids");
}

void region_within(const GridField& f, const Mask& region) {
  require(f.grid != nullptr && region.size() == f.grid->size(), ErrorCode::RegionMismatch,
          "region mask has the wrong size");
  for (std::size_t i = 0; i < region.size(); ++i) {
    require(!region[i] || f.region[i], ErrorCode::RegionMismatch,
            "region extends beyond the field's region");
  }
}

// Derivative at x0 of the quadratic through (x0,f0), (xa,fa), (xb,fb).
double lagrange_slope(double x0, double xa, double xb, double f0, double fa, double fb) {
  const double c0 = (2.0 * x0 - xa - xb) / ((x0 - xa) * (x0 - xb));
  const double ca = (x0 - xb) / ((xa - x0) * (xa - xb));
  const double cb = (x0 - xa) / ((xb - x0) * (xb - xa));
  return c0 * f0 + ca * fa + cb * fb;
}

// Directional derivative along a 1D stencil. coord(n) maps a node to its
// coordinate along the line, step(n, dir) walks to the neighbour or -1.
template <class Coord, class Step>
double line_derivative(int node, const Eigen::VectorXd& u, const Mask& region, Coord coord,
                       Step step) {
  auto usable = [&](int n) { return n >= 0 && region[n]; };
  const int m = step(node, -1), p = step(node, +1);
  const double x0 = coord(node, 0);
  if (usable(m) && usable(p)) {
    return lagrange_slope(x0, coord(m, -1), coord(p, +1), u[node], u[m], u[p]);
  }
  if (usable(p)) {
    const int pp = step(p, +1);
    if (usable(pp)) return lagrange_slope(x0, coord(p, 1), coord(pp, 2), u[node], u[p], u[pp]);
    return (u[p] - u[node]) / (coord(p, 1) - x0);
  }
  if (usable(m)) {
    const int mm = step(m, -1);
    if (usable(mm)) return lagrange_slope(x0, coord(m, -1), coord(mm, -2), u[node], u[m], u[mm]);
    return (u[node] - u[m]) / (x0 - coord(m, -1));
  }
  return 0.0;
}

}  // namespace

GridField& GridField::operator+=(const GridField& o) {
  same_grid(*this, o);
  values += o.values;
  region = mask_and(region, o.region);
  return *this;
}

GridField& GridField::operator-=(const GridField& o) {
  same_grid(*this, o);
  values -= o.values;
  region = mask_and(region, o.region);
  return *this;
}

GridField& GridField::operator*=(double c) {
  values *= c;
  return *this;
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(double c, GridField a) { return a *= c; }

Eigen::MatrixXd nodal_gradient(const GridField& field, const Mask& region) {
  region_within(field, region);
  const Grid& g = *field.grid;
  const Eigen::VectorXd& u = field.values;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(g.size(), g.dim);
  for (int n = 0; n < static_cast<int>(g.size()); ++n) {
    if (!region[n]) continue;
    if (g.topology == Topology::Polar) {
      // Radial walk crosses rings; angular walk is periodic and measured in arclength.
      const double r = g.radius(n);
      const double t = g.theta(n);
      const double ur = line_derivative(
          n, u, region, [&](int m, int) { return g.ring_radius[g.ring_of(m)]; },
          [&](int m, int dir) { return g.neighbor(m, 0, dir); });
      const double ut = line_derivative(
          n, u, region, [&](int, int offset) { return r * offset * g.dtheta; },
          [&](int m, int dir) { return g.neighbor(m, 1, dir); });
      grad(n, 0) = ur * std::cos(t) - ut * std::sin(t);
      grad(n, 1) = ur * std::sin(t) + ut * std::cos(t);
    } else {
      for (int d = 0; d < g.dim; ++d) {
        grad(n, d) = line_derivative(
            n, u, region, [&](int m, int) { return g.nodes[m][d]; },
            [&](int m, int dir) { return g.neighbor(m, d, dir); });
      }
    }
  }
  return grad;
}

double inner(const GridField& a, const GridField& b, const Mask& region) {
  same_grid(a, b);
  region_within(a, region);
  region_within(b, region);
  double s = 0.0;
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (region[i]) s += a.grid->quad_weights[i] * a.values[i] * b.values[i];
  }
  return s;
}

double norm(const GridField& field, NormKind which, const Mask& region) {
  region_within(field, region);
  const Grid& g = *field.grid;
  double l2 = 0.0, semi = 0.0;
  if (which != NormKind::H1Semi) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (region[i]) l2 += g.quad_weights[i] * field.values[i] * field.values[i];
    }
  }
  if (which != NormKind::L2) {
    const Eigen::MatrixXd grad = nodal_gradient(field, region);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (region[i]) semi += g.quad_weights[i] * grad.row(i).squaredNorm();
    }
  }
  const double total = l2 + semi;
  require(std::isfinite(total), ErrorCode::InvalidArgument, "norm of a non-finite field");
  return std::sqrt(total);
}

double norm(const GridField& field, NormKind which) { return norm(field, which, field.region); }

// ---------------------------------------------------------------------------

TraceSpace::TraceSpace(BoundaryChart chart) : chart_(std::move(chart)) {
  const Eigen::Index m = static_cast<Eigen::Index>(chart_.size());
  weights_ = Eigen::Map<const Eigen::VectorXd>(chart_.weights.data(), m);
  require((weights_.array() > 0.0).all(), ErrorCode::GramNotSPD, "boundary weight not positive");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m);
  for (const auto& e : chart_.edges) {
    K(e.a, e.a) += e.weight;
    K(e.b, e.b) += e.weight;
    K(e.a, e.b) -= e.weight;
    K(e.b, e.a) -= e.weight;
  }
  const Eigen::VectorXd isw = weights_.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = isw.asDiagonal() * K * isw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  require(es.info() == Eigen::Success, ErrorCode::GramNotSPD, "boundary eigensolve failed");
  lambda_ = es.eigenvalues().cwiseMax(0.0);
  modes_ = isw.asDiagonal() * es.eigenvectors();

  const std::vector<int>& gl = chart_.gamma_local;
  const Eigen::Index ng = static_cast<Eigen::Index>(gl.size());
  // Rows of W E restricted to Γ.
  Eigen::MatrixXd WEg(ng, m);
  for (Eigen::Index i = 0; i < ng; ++i) WEg.row(i) = weights_[gl[i]] * modes_.row(gl[i]);
  const Eigen::VectorXd s = (1.0 + lambda_.array()).sqrt();
  gamma_gram_ = WEg * s.asDiagonal() * WEg.transpose();
  gamma_llt_.compute(gamma_gram_);
  require(gamma_llt_.info() == Eigen::Success, ErrorCode::GramNotSPD, "Γ Gram is not positive definite");
}

Eigen::VectorXd TraceSpace::trace_coeffs(const Eigen::VectorXd& t) const {
  return modes_.transpose() * weights_.cwiseProduct(t);
}

Eigen::VectorXd TraceSpace::functional_coeffs(const Eigen::VectorXd& l) const {
  return modes_.transpose() * l;
}

double TraceSpace::norm(const Eigen::VectorXd& t, double order) const {
  const Eigen::VectorXd c = trace_coeffs(t);
  const double s = ((1.0 + lambda_.array()).pow(order) * c.array().square()).sum();
  require(std::isfinite(s), ErrorCode::InvalidArgument, "trace norm is not finite");
  return std::sqrt(s);
}

Eigen::VectorXd TraceSpace::gamma_gram_solve(const Eigen::VectorXd& rhs) const {
  return gamma_llt_.solve(rhs);
}

double TraceSpace::dual_norm(const Eigen::VectorXd& l) const {
  if (chart_.gamma_is_full) {
    const Eigen::VectorXd d = functional_coeffs(l);
    return std::sqrt(((1.0 + lambda_.array()).pow(-0.5) * d.array().square()).sum());
  }
  const Eigen::VectorXd lg = restrict_to_gamma(l);
  return std::sqrt(std::max(0.0, lg.dot(gamma_gram_solve(lg))));
}

Eigen::VectorXd TraceSpace::riesz(const Eigen::VectorXd& l) const {
  if (chart_.gamma_is_full) {
    const Eigen::VectorXd d = functional_coeffs(l);
    const Eigen::VectorXd c = (1.0 + lambda_.array()).pow(-0.5).matrix().cwiseProduct(d);
    return modes_ * c;
  }
  return extend_from_gamma(gamma_gram_solve(restrict_to_gamma(l)));
}

Eigen::MatrixXd TraceSpace::gram(double order) const {
  const Eigen::MatrixXd WE = weights_.asDiagonal() * modes_;
  return WE * (1.0 + lambda_.array()).pow(order).matrix().asDiagonal() * WE.transpose();
}

Eigen::VectorXd TraceSpace::restrict_to_gamma(const Eigen::VectorXd& t) const {
  Eigen::VectorXd out(chart_.gamma_local.size());
  for (std::size_t i = 0; i < chart_.gamma_local.size(); ++i) out[i] = t[chart_.gamma_local[i]];
  return out;
}

Eigen::VectorXd TraceSpace::extend_from_gamma(const Eigen::VectorXd& tg) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  for (std::size_t i = 0; i < chart_.gamma_local.size(); ++i) out[chart_.gamma_local[i]] = tg[i];
  return out;
}

Eigen::VectorXd TraceSpace::from_grid(const Eigen::VectorXd& nodal) const {
  Eigen::VectorXd out(size());
  for (std::size_t a = 0; a < size(); ++a) out[a] = nodal[chart_.nodes[a]];
  return out;
}

Eigen::VectorXd TraceSpace::to_grid(const Eigen::VectorXd& t) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid().size());
  for (std::size_t a = 0; a < size(); ++a) out[chart_.nodes[a]] = t[a];
  return out;
}

TraceSpacePtr make_trace_space(const Grid& grid, const GammaSpec& gamma) {
  return std::make_shared<const TraceSpace>(boundary_chart(grid, gamma));
}

BoundaryTrace BoundaryTrace::gamma_supported(TraceSpacePtr space, Eigen::VectorXd values) {
  require(static_cast<std::size_t>(values.size()) == space->size(), ErrorCode::RegionMismatch,
          "trace size does not match the chart");
  for (std::size_t a = 0; a < space->size(); ++a) {
    if (!space->chart().gamma[a]) values[a] = 0.0;
  }
  return BoundaryTrace{std::move(space), std::move(values)};
}

double trace_norm(const BoundaryTrace& t, double order) { return t.space->norm(t.values, order); }

double dual_norm(const BoundaryFunctional& l) { return l.space->dual_norm(l.nodal); }

double pairing(const BoundaryFunctional& l, const BoundaryTrace& t) {
  require(l.space == t.space, ErrorCode::ContextMismatch, "pairing across different charts");
  return l.nodal.dot(t.values);
}

BoundaryTrace riesz_map(const BoundaryFunctional& l) {
  return BoundaryTrace{l.space, l.space->riesz(l.nodal)};
}

// ---------------------------------------------------------------------------

namespace {
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

double hminus1_norm_fourier(const GridField& field, const Box& box) {
  require(field.grid != nullptr && field.grid->topology == Topology::Cartesian,
          ErrorCode::InvalidArgument, "Fourier norm needs a Cartesian grid");
  const Grid& g = *field.grid;
  const int dim = g.dim;
  std::array<int, 3> lo{0, 0, 0}, count{1, 1, 1};
  for (int d = 0; d < dim; ++d) {
    const double h = g.spacing[d];
    lo[d] = static_cast<int>(std::ceil((box.lo[d] - g.origin[d]) / h - 1e-9));
    const int hi = static_cast<int>(std::floor((box.hi[d] - g.origin[d]) / h + 1e-9));
    count[d] = hi - lo[d] + 1;
    require(count[d] >= 3, ErrorCode::InvalidArgument, "box holds too few lattice points");
  }

  // Support must lie strictly inside the box.
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (field.values[n] == 0.0) continue;
    for (int d = 0; d < dim; ++d) {
      const double x = g.nodes[n][d];
      const double tol = 1e-9 * g.spacing[d];
      require(x > box.lo[d] + tol && x < box.hi[d] - tol, ErrorCode::SupportTouchesBox,
              "field support reaches the Fourier box");
    }
  }

  std::array<int, 3> P{1, 1, 1};
  // The padded period exceeds the support by at least ten decay lengths of
  // the kernel of (1 − Δ)^{-1}, so periodization is below e^{-10}.
  for (int d = 0; d < dim; ++d) {
    const int extra = static_cast<int>(std::ceil(10.0 / g.spacing[d]));
    P[d] = std::max(2 * count[d], count[d] + extra);
    P[d] += P[d] % 2;
  }
  const std::size_t total = static_cast<std::size_t>(P[0]) * P[1] * P[2];
  const int last = P[dim - 1];
  const int half = last / 2 + 1;
  const std::size_t out_total = total / last * half;

  double* in = fftw_alloc_real(total);
  fftw_complex* out = fftw_alloc_complex(out_total);
  std::fill(in, in + total, 0.0);
  // Row-major with the first axis slowest.
  auto flat = [&](const std::array<int, 3>& c) {
    std::size_t idx = 0;
    for (int d = 0; d < dim; ++d) idx = idx * P[d] + c[d];
    return idx;
  };
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (field.values[n] == 0.0) continue;
    const auto site = g.site_coords(g.site_of_node[n]);
    std::array<int, 3> c{0, 0, 0};
    for (int d = 0; d < dim; ++d) c[d] = site[d] - lo[d];
    in[flat(c)] = field.values[n];
  }
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft_r2c(dim, P.data(), in, out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);

  double cell = 1.0;
  for (int d = 0; d < dim; ++d) cell *= g.spacing[d];
  double acc = 0.0;
  std::array<int, 3> c{0, 0, 0};
  for (std::size_t idx = 0; idx < out_total; ++idx) {
    std::size_t rem = idx;
    for (int d = dim - 1; d >= 0; --d) {
      const int size_d = d == dim - 1 ? half : P[d];
      c[d] = static_cast<int>(rem % size_d);
      rem /= size_d;
    }
    double zeta2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const int j = c[d] <= P[d] / 2 ? c[d] : c[d] - P[d];
      const double z = 2.0 * std::numbers::pi * j / (P[d] * g.spacing[d]);
      zeta2 += z * z;
    }
    const bool mirrored = c[dim - 1] != 0 && !(last % 2 == 0 && c[dim - 1] == last / 2);
    const double mag2 = out[idx][0] * out[idx][0] + out[idx][1] * out[idx][1];
    acc += (mirrored ? 2.0 : 1.0) * mag2 / (1.0 + zeta2);
  }
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  // Discrete Plancherel: Σ|F_k|² = N Σ f², so cell·acc/N reproduces h^n Σ f² at unit weight.
  return std::sqrt(cell * acc / static_cast<double>(total));
}

void write_field_csv(const GridField& field, const std::string& path, const std::string& header) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot open " + path);
  out << header;
  out << (field.grid->dim == 3 ? "x,y,z,value\n" : "x,y,value\n");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < field.grid->size(); ++i) {
    if (!field.region[i]) continue;
    const auto& p = field.grid->nodes[i];
    out << p[0] << ',' << p[1] << ',';
    if (field.grid->dim == 3) out << p[2] << ',';
    out << field.values[i] << '\n';
  }
}

}  // namespace hlab
