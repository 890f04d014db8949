#include "hlab/spectral.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include "hlab/error.hpp"
#include "hlab/stats.hpp"

namespace hlab {

namespace {

// Symmetric form C = B^{-1/2} (D − W V)_II B^{-1/2}, B = (W q)_II.
struct Pencil {
  SparseMatrix C;
  Eigen::VectorXd inv_sqrt_b;
  double lower_bound = 0.0;
  double norm_estimate = 1.0;
};

Pencil build_pencil(const Grid& grid, const Medium& medium) {
  require(medium.q.grid == &grid, ErrorCode::ContextMismatch, "medium sampled on another grid");
  const auto& I = grid.interior_index;
  const auto ni = static_cast<Eigen::Index>(I.size());
  std::vector<int> row_of(grid.size(), -1);
  for (std::size_t i = 0; i < I.size(); ++i) row_of[I[i]] = static_cast<int>(i);

  Pencil p;
  p.inv_sqrt_b.resize(ni);
  double qmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (Eigen::Index i = 0; i < ni; ++i) {
    const int n = I[i];
    p.inv_sqrt_b[i] = 1.0 / std::sqrt(grid.quad_weights[n] * medium.q.values[n]);
    qmin = std::min(qmin, medium.q.values[n]);
    vmax = std::max(vmax, medium.V.values[n]);
  }
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(grid.edges.size() * 4 + I.size());
  for (Eigen::Index i = 0; i < ni; ++i) {
    const int n = I[i];
    t.emplace_back(i, i, -grid.quad_weights[n] * medium.V.values[n] * p.inv_sqrt_b[i] * p.inv_sqrt_b[i]);
  }
  for (const auto& e : grid.edges) {
    const int a = row_of[e.a], b = row_of[e.b];
    if (a >= 0) t.emplace_back(a, a, e.weight * p.inv_sqrt_b[a] * p.inv_sqrt_b[a]);
    if (b >= 0) t.emplace_back(b, b, e.weight * p.inv_sqrt_b[b] * p.inv_sqrt_b[b]);
    if (a >= 0 && b >= 0) {
      const double v = -e.weight * p.inv_sqrt_b[a] * p.inv_sqrt_b[b];
      t.emplace_back(a, b, v);
      t.emplace_back(b, a, v);
    }
  }
  p.C.resize(ni, ni);
  p.C.setFromTriplets(t.begin(), t.end());
  // −Δ ≥ 0 gives λ ≥ −max V / min q.
  p.lower_bound = -std::max(vmax, 0.0) / qmin - 1.0;
  double rowmax = 0.0;
  for (int k = 0; k < p.C.outerSize(); ++k) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(p.C, k); it; ++it) s += std::abs(it.value());
    rowmax = std::max(rowmax, s);
  }
  p.norm_estimate = std::max(rowmax, 1.0);
  return p;
}

using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

SparseMatrix shifted(const SparseMatrix& C, double sigma) {
  SparseMatrix S = C;
  for (Eigen::Index i = 0; i < S.rows(); ++i) S.coeffRef(i, i) -= sigma;
  return S;
}

// Negative pivots of the LDLᵀ factorization of C − σI. The shift is nudged
// off exact zero pivots.
int inertia_below(const Pencil& p, double sigma) {
  for (int attempt = 0; attempt < 5; ++attempt) {
    Ldlt ldlt(shifted(p.C, sigma));
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd d = ldlt.vectorD();
      if ((d.array() != 0.0).all()) return static_cast<int>((d.array() < 0.0).count());
    }
    sigma += 1e-9 * (1.0 + std::abs(sigma));
  }
  fail(ErrorCode::SolverBreakdown, "inertia count failed at the requested shift");
}

void check_assumption_i(const Pencil& p) {
  Ldlt ldlt(p.C);
  require(ldlt.info() == Eigen::Success, ErrorCode::AssumptionIViolated,
          "−Δ−V cannot be factorized (zero is an eigenvalue)");
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Eigen::VectorXd x(p.C.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = nd(rng);
  x.normalize();
  double growth = 0.0;
  for (int it = 0; it < 30; ++it) {
    Eigen::VectorXd y = ldlt.solve(x);
    growth = y.norm();
    require(std::isfinite(growth), ErrorCode::AssumptionIViolated, "−Δ−V is singular");
    x = y / growth;
  }
  require(1.0 / growth > 1e-12 * p.norm_estimate, ErrorCode::AssumptionIViolated,
          "−Δ−V is numerically singular");
}

struct Eigenpair {
  double value;
  double residual;
  Eigen::VectorXd vector;
};

// Shift-invert Lanczos with full reorthogonalisation, restarted from fresh
// vectors orthogonal to the converged ones until the slice [lo, hi) yields
// the `expected` eigenpairs promised by the inertia count.
std::vector<Eigenpair> solve_slice(const Pencil& p, double lo, double hi, int expected,
                                   double tol, std::uint64_t seed) {
  const Eigen::Index n = p.C.rows();
  const double sigma = 0.5 * (lo + hi);
  Ldlt ldlt(shifted(p.C, sigma));
  require(ldlt.info() == Eigen::Success, ErrorCode::SolverBreakdown, "shift factorization failed");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Eigenpair> found;
  Eigen::MatrixXd locked(n, 0);
  int dim = static_cast<int>(std::min<Eigen::Index>(n, 2 * expected + 40));

  for (int attempt = 0; attempt < 40 && static_cast<int>(found.size()) < expected; ++attempt) {
    const Eigen::Index kdim = std::min<Eigen::Index>(dim, n - locked.cols());
    Eigen::MatrixXd V(n, kdim);
    Eigen::VectorXd alpha(kdim), beta(kdim);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
    for (int pass = 0; pass < 2; ++pass) v -= locked * (locked.transpose() * v);
    v.normalize();
    Eigen::Index m = 0;
    for (; m < kdim; ++m) {
      V.col(m) = v;
      Eigen::VectorXd w = ldlt.solve(v);
      alpha[m] = w.dot(v);
      for (int pass = 0; pass < 2; ++pass) {
        w -= V.leftCols(m + 1) * (V.leftCols(m + 1).transpose() * w);
        w -= locked * (locked.transpose() * w);
      }
      beta[m] = w.norm();
      if (beta[m] < 1e-12 * std::abs(alpha[m]) || m + 1 == kdim) {
        ++m;
        break;
      }
      v = w / beta[m];
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::MatrixXd ritz = V.leftCols(m) * es.eigenvectors();
    int added = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double theta = es.eigenvalues()[i];
      if (theta == 0.0) continue;
      const double lam = sigma + 1.0 / theta;
      if (lam < lo || lam >= hi) continue;
      Eigen::VectorXd x = ritz.col(i);
      for (int pass = 0; pass < 2; ++pass) x -= locked * (locked.transpose() * x);
      x.normalize();
      // Backward error relative to the operator scale.
      const double res = (p.C * x - lam * x).norm() / p.norm_estimate;
      if (res > tol) continue;
      locked.conservativeResize(n, locked.cols() + 1);
      locked.col(locked.cols() - 1) = x;
      found.push_back({lam, res, x});
      ++added;
    }
    if (added == 0) dim = static_cast<int>(std::min<Eigen::Index>(n, dim * 2));
  }
  require(static_cast<int>(found.size()) == expected, ErrorCode::SolverBreakdown,
          "Lanczos slice did not recover the inertia count");
  return found;
}

SpectrumReport slice_spectrum(const Grid& grid, const Medium& medium, double upper, int want,
                              const SpectrumOptions& opt) {
  const Pencil p = build_pencil(grid, medium);
  check_assumption_i(p);
  const double lo = p.lower_bound;

  struct Slice {
    double a, b;
    int ca, cb;
  };
  std::vector<Slice> leaves;
  std::function<void(double, double, int, int, int)> split = [&](double a, double b, int ca, int cb,
                                                                   int depth) {
    if (cb == ca) return;
    if (cb - ca <= opt.slice_size || depth > 40) {
      leaves.push_back({a, b, ca, cb});
      return;
    }
    // Slightly off-centre to avoid symmetric coincidences.
    const double mid = a + 0.5037 * (b - a);
    const int cm = inertia_below(p, mid);
    split(a, mid, ca, cm, depth + 1);
    split(mid, b, cm, cb, depth + 1);
  };
  const int chi = inertia_below(p, upper);
  split(lo, upper, 0, chi, 0);

  std::vector<Eigenpair> all;
  for (std::size_t s = 0; s < leaves.size(); ++s) {
    const auto& L = leaves[s];
    auto pairs = solve_slice(p, L.a, L.b, L.cb - L.ca, opt.residual_tolerance, opt.seed + 7919 * s);
    for (auto& e : pairs) all.push_back(std::move(e));
  }
  std::sort(all.begin(), all.end(), [](const Eigenpair& x, const Eigenpair& y) { return x.value < y.value; });
  if (want > 0 && static_cast<int>(all.size()) > want) all.resize(want);
  const double covered = want > 0 && !all.empty() ? all.back().value : upper;

  SpectrumReport rep;
  rep.dim = grid.dim;
  rep.grid_h = grid.h;
  rep.a1_constant = opt.a1_constant;
  rep.count = static_cast<int>(all.size());
  rep.covered_up_to = covered;
  for (const auto& e : all) {
    rep.eigenvalues.push_back(e.value);
    rep.residuals.push_back(e.residual);
  }
  if (opt.store_vectors) {
    rep.vectors.resize(p.C.rows(), static_cast<Eigen::Index>(all.size()));
    for (std::size_t j = 0; j < all.size(); ++j) {
      rep.vectors.col(j) = p.inv_sqrt_b.cwiseProduct(all[j].vector);
    }
  }
  return rep;
}

double weyl_upper_guess(const Grid& grid, const Medium& medium, int count) {
  double mass = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double q = medium.q.values[i];
    mass += grid.quad_weights[i] * (grid.dim == 3 ? q * std::sqrt(q) : q);
  }
  const double pi = std::numbers::pi;
  const double E = grid.dim == 3 ? std::pow(6.0 * pi * pi * count / mass, 2.0 / 3.0)
                                 : 4.0 * pi * count / mass;
  return 1.3 * E + 10.0;
}

}  // namespace

int count_below(const Grid& grid, const Medium& medium, double sigma) {
  return inertia_below(build_pencil(grid, medium), sigma);
}

SpectrumReport compute_sigma(const Grid& grid, const Medium& medium, int count,
                             const SpectrumOptions& options) {
  require(count >= 1, ErrorCode::InvalidArgument, "count must be positive");
  require(static_cast<std::size_t>(count) <= grid.interior_index.size(), ErrorCode::InvalidArgument,
          "more eigenvalues requested than unknowns");
  const Pencil p = build_pencil(grid, medium);
  double upper = weyl_upper_guess(grid, medium, count);
  while (inertia_below(p, upper) < count) upper *= 1.5;
  return slice_spectrum(grid, medium, upper, count, options);
}

SpectrumReport compute_sigma_below(const Grid& grid, const Medium& medium, double upper,
                                   const SpectrumOptions& options) {
  SpectrumReport rep = slice_spectrum(grid, medium, upper, 0, options);
  rep.covered_up_to = upper;
  return rep;
}

A1Margin check_a1(double k, const SpectrumReport& report, double c) {
  require(report.covered_up_to >= 2.0 * k * k,
          ErrorCode::SpectrumTooShort, "spectrum does not reach 2k²");
  A1Margin m;
  m.dist = std::numeric_limits<double>::infinity();
  for (double lam : report.eigenvalues) m.dist = std::min(m.dist, std::abs(k * k - lam));
  m.threshold = c * std::pow(k, 2 - report.dim);
  m.admissible = m.dist > m.threshold;
  return m;
}

double find_admissible_k(const SpectrumReport& report, double k_target, double c) {
  const auto& ev = report.eigenvalues;
  require(!ev.empty() && ev.back() > k_target * k_target, ErrorCode::SpectrumTooShort,
          "spectrum does not reach k_target²");
  const double t = k_target * k_target;
  // Gap edges; the bottom gap starts at k = 1.
  std::vector<double> edges;
  edges.push_back(1.0);
  for (double lam : ev) {
    if (lam > 1.0) edges.push_back(lam);
  }
  std::size_t g = 0;
  while (g + 1 < edges.size() && edges[g + 1] <= t) ++g;
  if (g + 1 >= edges.size()) fail(ErrorCode::SpectrumTooShort, "no eigenvalue above k_target²");
  auto margin_at = [&](double kk) {
    double d = std::numeric_limits<double>::infinity();
    for (double lam : ev) d = std::min(d, std::abs(kk * kk - lam));
    return d - c * std::pow(kk, 2 - report.dim);
  };
  std::size_t best = g;
  const double tol = 1e-12 * std::max(1.0, t);
  const bool on_left = std::abs(t - edges[g]) <= tol && g > 0;
  const bool on_right = std::abs(edges[g + 1] - t) <= tol && g + 2 < edges.size();
  if (on_left || on_right) {
    const std::size_t other = on_left ? g - 1 : g + 1;
    if (edges[other + 1] - edges[other] > edges[g + 1] - edges[g]) best = other;
  }
  const double k_mid = std::sqrt(0.5 * (edges[best] + edges[best + 1]));
  return margin_at(k_mid) >= margin_at(k_target) ? k_mid : k_target;
}

SpectrumReport merge_reports(const std::vector<SpectrumReport>& reports) {
  require(!reports.empty(), ErrorCode::InvalidArgument, "no reports to merge");
  SpectrumReport out = reports.front();
  out.vectors.resize(0, 0);
  double top = reports.front().covered_up_to;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    out.eigenvalues.insert(out.eigenvalues.end(), reports[i].eigenvalues.begin(), reports[i].eigenvalues.end());
    out.residuals.insert(out.residuals.end(), reports[i].residuals.begin(), reports[i].residuals.end());
    out.disc_error = std::max(out.disc_error, reports[i].disc_error);
    top = std::min(top, reports[i].covered_up_to);
  }
  std::vector<std::size_t> order(out.eigenvalues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return out.eigenvalues[a] < out.eigenvalues[b]; });
  std::vector<double> ev, res;
  for (auto i : order) {
    // Only the range covered by every report is trustworthy.
    if (out.eigenvalues[i] > top) continue;
    ev.push_back(out.eigenvalues[i]);
    res.push_back(out.residuals[i]);
  }
  out.eigenvalues = std::move(ev);
  out.residuals = std::move(res);
  out.count = static_cast<int>(out.eigenvalues.size());
  out.covered_up_to = top;
  return out;
}

double discretization_error(SpectrumReport& fine, const SpectrumReport& coarse, double upper) {
  double err = 0.0;
  const std::size_t n = std::min(fine.eigenvalues.size(), coarse.eigenvalues.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (fine.eigenvalues[i] > upper) break;
    err = std::max(err, std::abs(fine.eigenvalues[i] - coarse.eigenvalues[i]) / 3.0);
  }
  fine.disc_error = err;
  return err;
}

ResonanceGuard make_guard(const SpectrumReport& report, double guard_factor) {
  ResonanceGuard g;
  g.eigenvalues = report.eigenvalues;
  g.dim = report.dim;
  g.c = report.a1_constant;
  g.disc_error = report.disc_error;
  g.guard_factor = guard_factor;
  return g;
}

double weyl_exponent(const SpectrumReport& report) {
  std::vector<double> x, y;
  const std::size_t n = report.eigenvalues.size();
  for (std::size_t i = n / 4; i < n; ++i) {
    if (report.eigenvalues[i] <= 0.0) continue;
    x.push_back(std::log(report.eigenvalues[i]));
    y.push_back(std::log(static_cast<double>(i + 1)));
  }
  return fit_line(x, y).slope;
}

}  // namespace hlab
