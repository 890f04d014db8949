#include "hlab/runge.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "hlab/error.hpp"
#include "hlab/parallel.hpp"
#include "hlab/stats.hpp"

namespace hlab {

ForwardMap::ForwardMap(std::shared_ptr<const DirichletSolver> solver, TraceSpacePtr space, Mask omega1)
    : solver_(std::move(solver)), space_(std::move(space)), omega1_(std::move(omega1)) {
  require(solver_ != nullptr && space_ != nullptr, ErrorCode::InvalidArgument, "missing solver or chart");
  require(&space_->grid() == &solver_->grid(), ErrorCode::ContextMismatch, "chart from another grid");
  require(omega1_.size() == solver_->grid().size(), ErrorCode::RegionMismatch, "Ω₁ mask size mismatch");
  omega1_nodes_ = mask_indices(omega1_);
  require(!omega1_nodes_.empty(), ErrorCode::RegionMismatch, "Ω₁ is empty");
  require(space_->gamma_size() > 0, ErrorCode::EmptyGamma, "Γ has no nodes");
  const auto& w = solver_->op().weights();
  w1_.resize(static_cast<Eigen::Index>(omega1_nodes_.size()));
  for (std::size_t i = 0; i < omega1_nodes_.size(); ++i) w1_[i] = w[omega1_nodes_[i]];

  const auto m = static_cast<Eigen::Index>(space_->gamma_size());
  A_.resize(static_cast<Eigen::Index>(omega1_nodes_.size()), m);
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e[static_cast<Eigen::Index>(j)] = 1.0;
    A_.col(static_cast<Eigen::Index>(j)) = restrict(solve_gamma(e));
  });
}

Eigen::VectorXd ForwardMap::solve_gamma(const Eigen::VectorXd& g_gamma) const {
  const Eigen::VectorXd g = space_->to_grid(space_->extend_from_gamma(g_gamma));
  return solver_->solve(Eigen::VectorXd::Zero(grid().size()), g);
}

Eigen::VectorXd ForwardMap::restrict(const Eigen::VectorXd& nodal) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(omega1_nodes_.size()));
  for (std::size_t i = 0; i < omega1_nodes_.size(); ++i) out[i] = nodal[omega1_nodes_[i]];
  return out;
}

Eigen::VectorXd ForwardMap::extend(const Eigen::VectorXd& values) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid().size());
  for (std::size_t i = 0; i < omega1_nodes_.size(); ++i) out[omega1_nodes_[i]] = values[i];
  return out;
}

Eigen::VectorXd ForwardMap::adjoint_matrix_apply(const Eigen::VectorXd& u) const {
  return space_->gamma_gram_solve(A_.transpose() * w1_.cwiseProduct(u));
}

ForwardMap build_forward_map(std::shared_ptr<const DirichletSolver> solver, TraceSpacePtr space,
                             const Mask& omega1) {
  return ForwardMap(std::move(solver), std::move(space), omega1);
}

Eigen::VectorXd adjoint_apply(const ForwardMap& map, const Eigen::VectorXd& u) {
  const Eigen::VectorXd f = map.extend(u);
  const Eigen::VectorXd w = map.solver().solve_source(f);
  const BoundaryFunctional dn = weak_neumann_trace(map.solver().op(), w, f, map.space());
  return map.space()->restrict_to_gamma(riesz_map(dn).values);
}

double gamma_inner(const TraceSpace& space, const Eigen::VectorXd& g, const Eigen::VectorXd& h) {
  return g.dot(space.gamma_gram() * h);
}

double omega1_inner(const ForwardMap& map, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(map.omega1_weights().cwiseProduct(b));
}

std::vector<double> SvdSystem::distinct_mu() const {
  std::vector<double> out;
  for (Eigen::Index j = 0; j < size(); ++j) {
    if (j == 0 || group[j] != group[j - 1]) out.push_back(mu[j]);
  }
  return out;
}

Eigen::Index SvdSystem::group_end(Eigen::Index j) const {
  Eigen::Index e = j + 1;
  while (e < size() && group[e] == group[j]) ++e;
  return e;
}

SvdSystem svd(const ForwardMap& map, double tie_tolerance) {
  const Eigen::MatrixXd& G = map.space()->gamma_gram();
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  require(llt.info() == Eigen::Success, ErrorCode::GramNotSPD, "H^{1/2}(Γ) Gram is not positive definite");
  const Eigen::VectorXd& w = map.omega1_weights();
  require((w.array() > 0.0).all(), ErrorCode::GramNotSPD, "Ω₁ quadrature weights must be positive");
  const Eigen::VectorXd sw = w.cwiseSqrt();

  // M = W^{1/2} A L^{-T} with G = L Lᵀ.
  const Eigen::MatrixXd Mt = llt.matrixL().solve(map.matrix().transpose());
  const Eigen::MatrixXd M = sw.asDiagonal() * Mt.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> dec(M, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SvdSystem s;
  s.tie_tolerance = tie_tolerance;
  s.sigma = dec.singularValues();
  s.mu = s.sigma.array().square();
  s.phi = llt.matrixU().solve(dec.matrixV());
  s.psi = sw.cwiseInverse().asDiagonal() * dec.matrixU();
  s.group.resize(static_cast<std::size_t>(s.size()));
  int g = 0;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (j > 0 && s.mu[j - 1] - s.mu[j] > tie_tolerance * s.mu[j - 1]) ++g;
    s.group[static_cast<std::size_t>(j)] = g;
  }
  return s;
}

SvdResiduals svd_residuals(const ForwardMap& map, const SvdSystem& s, Eigen::Index leading) {
  const Eigen::Index m = std::min(leading, s.size());
  const double normA = s.sigma[0];
  const Eigen::VectorXd& w = map.omega1_weights();
  const Eigen::MatrixXd& G = map.space()->gamma_gram();
  SvdResiduals r;
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::VectorXd d = map.matrix() * s.phi.col(j) - s.sigma[j] * s.psi.col(j);
    r.max_identity = std::max(r.max_identity, std::sqrt(d.dot(w.cwiseProduct(d))) / normA);
  }
  const Eigen::MatrixXd Pg = s.phi.leftCols(m).transpose() * G * s.phi.leftCols(m);
  const Eigen::MatrixXd Pw = s.psi.leftCols(m).transpose() * w.asDiagonal() * s.psi.leftCols(m);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  r.max_phi_orthonormality = (Pg - I).cwiseAbs().maxCoeff();
  r.max_psi_orthonormality = (Pw - I).cwiseAbs().maxCoeff();

  // Gram-weighted operator norm of A − Ψ Σ Φᵀ G, through W^{1/2} (·) L^{-T}.
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  const Eigen::MatrixXd R = map.matrix() - s.psi * s.sigma.asDiagonal() * (s.phi.transpose() * G);
  const Eigen::MatrixXd Rt = llt.matrixL().solve(R.transpose());
  const Eigen::MatrixXd Rw = w.cwiseSqrt().asDiagonal() * Rt.transpose();
  r.reconstruction = Eigen::JacobiSVD<Eigen::MatrixXd>(Rw).singularValues()[0] / normA;
  return r;
}

double log_decay_slope(const SvdSystem& s, Eigen::Index count) {
  const Eigen::Index m = std::min(count, s.size());
  std::vector<double> x, y;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (s.mu[j] <= 0.0) break;
    x.push_back(static_cast<double>(j + 1));
    y.push_back(std::log(s.mu[j]));
  }
  require(x.size() >= 3, ErrorCode::DegenerateSamples, "too few positive singular values");
  return fit_line(x, y).slope;
}

namespace {

struct Expansion {
  Eigen::VectorXd v1;
  Eigen::VectorXd beta;
  double residue2 = 0.0;
};

Expansion expand(const ForwardMap& map, const SvdSystem& s, const GridField& v) {
  require(v.grid == &map.grid(), ErrorCode::ContextMismatch, "field on another grid");
  Expansion e;
  e.v1 = map.restrict(v.values);
  require(e.v1.allFinite(), ErrorCode::InvalidArgument, "non-finite field on Ω₁");
  const Eigen::VectorXd& w = map.omega1_weights();
  e.beta = s.psi.transpose() * w.cwiseProduct(e.v1);
  const Eigen::VectorXd r = e.v1 - s.psi * e.beta;
  e.residue2 = r.dot(w.cwiseProduct(r));
  return e;
}

// err²(m) for every m = 0..size, by Parseval.
std::vector<double> tail_errors(const Expansion& e) {
  const auto n = e.beta.size();
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  double acc = e.residue2;
  t[static_cast<std::size_t>(n)] = acc;
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    acc += e.beta[j] * e.beta[j];
    t[static_cast<std::size_t>(j)] = acc;
  }
  return t;
}

RungeApproximant build(const ForwardMap& map, const SvdSystem& s, const Expansion& e, Eigen::Index m) {
  RungeApproximant a;
  a.retained = m;
  a.alpha = m > 0 ? s.sigma[m - 1] : 2.0 * s.sigma[0];
  a.beta = e.beta;
  a.residue = std::sqrt(e.residue2);
  const Eigen::VectorXd& w = map.omega1_weights();
  a.v_l2 = std::sqrt(e.v1.dot(w.cwiseProduct(e.v1)));

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(s.size());
  double cost2 = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    coef[j] = e.beta[j] / s.sigma[j];
    cost2 += e.beta[j] * e.beta[j] / s.mu[j];
  }
  a.cost = std::sqrt(cost2);
  const Eigen::VectorXd g = s.phi * coef;
  a.g_alpha = BoundaryTrace::gamma_supported(map.space(), map.space()->extend_from_gamma(g));
  a.cost_trace = trace_norm(a.g_alpha, 0.5);
  a.u_alpha = GridField(map.grid(), map.solve_gamma(g));
  a.err = std::sqrt(tail_errors(e)[static_cast<std::size_t>(m)]);
  const Eigen::VectorXd d = map.restrict(a.u_alpha.values) - e.v1;
  a.err_direct = std::sqrt(d.dot(w.cwiseProduct(d)));
  return a;
}

}  // namespace

RungeApproximant runge_with_modes(const ForwardMap& map, const SvdSystem& s, const GridField& v,
                                  Eigen::Index modes) {
  require(modes >= 0 && modes <= s.size(), ErrorCode::InvalidArgument, "mode count out of range");
  return build(map, s, expand(map, s, v), modes);
}

RungeApproximant runge_with_alpha(const ForwardMap& map, const SvdSystem& s, const GridField& v,
                                  double alpha) {
  require(alpha > 0.0, ErrorCode::InvalidArgument, "alpha must be positive");
  Eigen::Index m = 0;
  while (m < s.size() && s.sigma[m] >= alpha) ++m;
  RungeApproximant a = build(map, s, expand(map, s, v), m);
  a.alpha = alpha;
  return a;
}

RungeApproximant runge_approximate(const ForwardMap& map, const SvdSystem& s, const GridField& v,
                                   double epsilon, double v_h1) {
  require(epsilon > 0.0 && v_h1 >= 0.0, ErrorCode::InvalidArgument, "epsilon must be positive");
  const Expansion e = expand(map, s, v);
  const std::vector<double> tail = tail_errors(e);
  const double target2 = (epsilon * v_h1) * (epsilon * v_h1);
  Eigen::Index m = 0;
  while (tail[static_cast<std::size_t>(m)] > target2) {
    require(m < s.size(), ErrorCode::TargetUnreachable,
            "out-of-span residue exceeds the requested accuracy");
    m = s.group_end(m);
  }
  return build(map, s, e, m);
}

double ValphaIdentity::relative_gap() const {
  const double scale = std::max(std::abs(parseval), std::numeric_limits<double>::min());
  return std::abs(parseval - pairing) / scale;
}

ValphaIdentity valpha_identity(const ForwardMap& map, const RungeApproximant& approx, const GridField& v) {
  const Eigen::VectorXd& w1 = map.omega1_weights();
  const Eigen::VectorXd v1 = map.restrict(v.values);
  const Eigen::VectorXd va = v1 - map.restrict(approx.u_alpha.values);

  ValphaIdentity out;
  double disc = approx.residue * approx.residue;
  for (Eigen::Index j = approx.retained; j < approx.beta.size(); ++j) disc += approx.beta[j] * approx.beta[j];
  out.parseval = disc;
  out.cross = (v1 - va).dot(w1.cwiseProduct(va));

  const Eigen::VectorXd f = map.extend(va);
  const Eigen::VectorXd wa = map.solver().solve_source(f);
  const DiscreteOperator& op = map.solver().op();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(map.grid().size());
  const Eigen::VectorXd lw = weak_neumann_pairings(op, wa, f, map.omega1());
  const Eigen::VectorXd lv = weak_neumann_pairings(op, v.values, zero, map.omega1());
  double p = 0.0;
  for (int i : map.omega1_nodes()) p += v.values[i] * lw[i] - wa[i] * lv[i];
  out.pairing = p;
  return out;
}

GridField random_subdomain_solution(const Grid& grid, const Medium& medium, double k, const Mask& domain,
                                    std::uint64_t seed, double decay, int modes, double mode_scale) {
  require(modes >= 0 && mode_scale > 0.0, ErrorCode::InvalidArgument, "invalid mode parameters");
  DirichletSolver solver(assemble(grid, medium, k, domain));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(modes) + 1), b(a.size());
  for (std::size_t m = 0; m < a.size(); ++m) {
    const double amp = std::pow(1.0 + static_cast<double>(m) / mode_scale, -decay);
    a[m] = amp * normal(rng);
    b[m] = amp * normal(rng);
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(grid.size());
  const Point& c = grid.spec.center;
  for (int n : solver.op().dirichlet_nodes()) {
    if (grid.boundary_mask[n]) continue;
    const double t = std::atan2(grid.nodes[n][1] - c[1], grid.nodes[n][0] - c[0]);
    double s = a[0];
    for (std::size_t m = 1; m < a.size(); ++m) {
      s += a[m] * std::cos(static_cast<double>(m) * t) + b[m] * std::sin(static_cast<double>(m) * t);
    }
    g[n] = s;
  }
  GridField v(grid, solver.solve(Eigen::VectorXd::Zero(grid.size()), g), domain);
  return v;
}

const char* to_string(RungeScenario s) {
  switch (s) {
    case RungeScenario::Boundary: return "boundary";
    case RungeScenario::Interior: return "interior";
    case RungeScenario::Convex: return "convex";
  }
  return "unknown";
}

std::vector<SweepCell> run_sweep(const SweepParams& p) {
  require(!p.k_list.empty() && !p.epsilon_list.empty() && !p.seeds.empty(), ErrorCode::InvalidArgument,
          "sweep needs k values, tolerances and seeds");
  const bool annulus = p.scenario == RungeScenario::Convex;
  const double lo = annulus ? p.r_hole : 0.0;
  require(lo < p.r_inner && p.r_inner < p.r_tilde && p.r_tilde < p.r_outer, ErrorCode::GeometryViolation,
          "radii must be nested");
  const DomainSpec spec = (annulus ? DomainSpec::annulus(p.r_hole, p.r_outer) : DomainSpec::disk(p.r_outer))
                              .with_gamma(p.gamma);
  const Grid grid = build_grid(spec, p.h);
  const Medium medium = Medium::from_functions(grid, p.q, p.V, p.kappa, p.monotone);

  const Mask omega1 = annulus ? radial_mask(grid, 0.0, p.r_inner) : ball_mask(grid, spec.center, p.r_inner);
  const bool interior = p.scenario != RungeScenario::Boundary;
  const Mask vdomain =
      interior ? (annulus ? radial_mask(grid, 0.0, p.r_tilde) : ball_mask(grid, spec.center, p.r_tilde)) : omega1;
  require(layer_gap(grid, vdomain, grid.outer_mask) >= 4, ErrorCode::FeatureUnresolved,
          "fewer than four layers between the data domain and the outer boundary");

  const double kmax = *std::max_element(p.k_list.begin(), p.k_list.end());
  SpectrumOptions sopt;
  sopt.a1_constant = p.a1_constant;
  double upper = 2.5 * kmax * kmax;
  const int below = count_below(grid, medium, kmax * kmax);
  while (count_below(grid, medium, upper) == below) upper *= 1.5;
  const SpectrumReport spectrum = compute_sigma_below(grid, medium, upper, sopt);
  const ResonanceGuard guard = make_guard(spectrum);
  TraceSpacePtr space = make_trace_space(grid, p.gamma);

  struct PerK {
    double k = 0.0;
    double margin = 0.0;
    std::vector<SweepCell> cells;
  };
  std::vector<PerK> per_k(p.k_list.size());
  for (std::size_t ik = 0; ik < p.k_list.size(); ++ik) {
    double k = p.k_list[ik];
    if (p.adjust_k) k = find_admissible_k(spectrum, k, p.a1_constant);
    const A1Margin m = check_a1(k, spectrum, p.a1_constant);
    require(m.admissible, ErrorCode::InsufficientAdmissibleK, "k is not admissible");
    per_k[ik].k = k;
    per_k[ik].margin = m.margin();
  }

  for (auto& pk : per_k) {
    auto solver = std::make_shared<const DirichletSolver>(assemble(grid, medium, pk.k), &guard);
    const ForwardMap map = build_forward_map(solver, space, omega1);
    const SvdSystem s = svd(map);
    for (std::uint64_t seed : p.seeds) {
      const GridField v = random_subdomain_solution(grid, medium, pk.k, vdomain, seed, p.data_decay, p.data_modes,
                                                     p.scale_modes_with_k ? pk.k : 1.0);
      const double vh1 = norm(v, NormKind::H1, vdomain);
      const double vl2 = norm(v, NormKind::L2, omega1);
      for (double eps : p.epsilon_list) {
        SweepCell c;
        c.scenario = p.scenario;
        c.seed = seed;
        c.k = pk.k;
        c.epsilon = eps;
        c.v_norm_h1 = vh1;
        c.v_norm_l2 = vl2;
        c.admissible_margin = pk.margin;
        c.h = grid.h;
        try {
          const RungeApproximant a = runge_approximate(map, s, v, eps, vh1);
          c.alpha = a.alpha;
          c.err = a.err;
          c.cost = a.cost;
          c.retained = a.retained;
        } catch (const Error& err) {
          if (err.code() != ErrorCode::TargetUnreachable) throw;
          c.reached = false;
        }
        pk.cells.push_back(c);
      }
    }
  }

  std::vector<SweepCell> out;
  for (auto& pk : per_k) out.insert(out.end(), pk.cells.begin(), pk.cells.end());
  std::stable_sort(out.begin(), out.end(), [](const SweepCell& a, const SweepCell& b) {
    if (a.seed != b.seed) return a.seed < b.seed;
    if (a.k != b.k) return a.k < b.k;
    return a.epsilon > b.epsilon;
  });
  return out;
}

namespace {

double r_squared(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                 const std::vector<double>& beta) {
  const double m = mean(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double pred = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) pred += X[i][j] * beta[j];
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - m) * (y[i] - m);
  }
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

}  // namespace

FitReport fit_sweep(RungeScenario scenario, const std::vector<SweepCell>& cells) {
  std::vector<const SweepCell*> use;
  for (const auto& c : cells) {
    if (c.scenario == scenario && c.reached && c.cost > 0.0 && c.v_norm_l2 > 0.0) use.push_back(&c);
  }
  require(use.size() >= 3, ErrorCode::DegenerateSamples, "too few reached cells to fit");
  bool several_k = false;
  for (const auto* c : use) several_k |= c->k != use.front()->k;

  std::vector<double> y;
  for (const auto* c : use) y.push_back(std::log(c->cost / c->v_norm_l2));

  FitReport r;
  r.scenario = scenario;
  r.cells = static_cast<int>(use.size());
  auto design = [&](const std::function<std::vector<double>(const SweepCell&)>& row) {
    std::vector<std::vector<double>> X;
    for (const auto* c : use) X.push_back(row(*c));
    return X;
  };

  if (scenario == RungeScenario::Boundary) {
    r.r_squared = -std::numeric_limits<double>::infinity();
    const std::vector<double> s_grid = several_k ? std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8} : std::vector<double>{0};
    for (int im = 1; im <= 12; ++im) {
      const double mu = 0.25 * im;
      for (double s : s_grid) {
        const auto X = design([&](const SweepCell& c) {
          std::vector<double> row{1.0, std::pow(c.epsilon, -mu)};
          if (several_k) row.push_back(std::pow(c.k, s));
          return row;
        });
        const auto beta = least_squares(X, y);
        const double r2 = r_squared(X, y, beta);
        if (r2 > r.r_squared) {
          r.r_squared = r2;
          r.mu = mu;
          r.s = s;
          r.intercept = beta[0];
          r.a = beta[1];
          r.b = several_k ? beta[2] : 0.0;
        }
      }
    }
    return r;
  }

  const bool convex = scenario == RungeScenario::Convex;
  const auto X = design([&](const SweepCell& c) {
    std::vector<double> row{1.0, -std::log(c.epsilon)};
    if (several_k) row.push_back(convex ? std::log(c.k) : c.k);
    return row;
  });
  const auto beta = least_squares(X, y);
  r.intercept = beta[0];
  r.nu = beta[1];
  if (several_k) (convex ? r.s : r.b) = beta[2];
  r.r_squared = r_squared(X, y, beta);
  return r;
}

void write_sweep_csv(const std::vector<SweepCell>& cells, const std::string& path, const std::string& header) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot open " + path);
  out << header;
  out << "scenario,seed,k,epsilon,alpha,err,cost,v_norm_h1,v_norm_l2,admissible_margin,h,retained,reached\n";
  out << std::setprecision(17);
  for (const auto& c : cells) {
    out << to_string(c.scenario) << ',' << c.seed << ',' << c.k << ',' << c.epsilon << ',' << c.alpha << ','
        << c.err << ',' << c.cost << ',' << c.v_norm_h1 << ',' << c.v_norm_l2 << ',' << c.admissible_margin << ','
        << c.h << ',' << c.retained << ',' << (c.reached ? 1 : 0) << '\n';
  }
}

}  // namespace hlab
