#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "hlab/bessel.hpp"
#include "hlab/calderon.hpp"
#include "hlab/carleman.hpp"
#include "hlab/error.hpp"
#include "hlab/runge.hpp"
#include "hlab/spectral.hpp"
#include "hlab/stats.hpp"
#include "hlab/ucp.hpp"

namespace hlab::cli {

namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

struct Context {
  const ExperimentConfig& config;
  std::string dir;
  std::string header;
  RunResult result;

  std::string path(const std::string& name) {
    result.files.push_back(name);
    return (std::filesystem::path(dir) / name).string();
  }
};

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header, const std::string& columns)
      : out_(path) {
    require(static_cast<bool>(out_), ErrorCode::InvalidArgument, "cannot open " + path);
    out_ << header << columns << '\n' << std::setprecision(17);
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    int i = 0;
    ((out_ << (i++ ? "," : "") << values), ...);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

SpectrumOptions spectrum_options(const ExperimentConfig& c) {
  SpectrumOptions o;
  o.a1_constant = c.a1_constant;
  o.residual_tolerance = c.tolerances.spectrum_residual;
  o.seed = c.seeds.empty() ? 0x5eed : c.seeds.front();
  return o;
}

// Every eigenvalue below some upper bound ≥ 2k_max² with one eigenvalue past
// k_max², so the gap of each k is bracketed.
SpectrumReport spectrum_covering(const Grid& g, const Medium& m, double k_max, const SpectrumOptions& o) {
  double upper = std::max(2.05 * k_max * k_max, 10.0);
  for (;;) {
    SpectrumReport r = compute_sigma_below(g, m, upper, o);
    if (!r.eigenvalues.empty() && r.largest() > k_max * k_max) return r;
    upper *= 1.5;
  }
}

double k_max(const ExperimentConfig& c) {
  require(!c.k_list.empty(), ErrorCode::InvalidArgument, "k_list is empty");
  return *std::max_element(c.k_list.begin(), c.k_list.end());
}

json admissibility(double target, double k, const SpectrumReport& r, double c) {
  const A1Margin a = check_a1(k, r, c);
  return json{{"k_target", target}, {"k", k}, {"dist", a.dist}, {"threshold", a.threshold},
              {"margin", a.margin()}, {"admissible", a.admissible}};
}

double spectral_distance(const SpectrumReport& r, double k) {
  double d = std::numeric_limits<double>::infinity();
  for (double l : r.eigenvalues) d = std::min(d, std::abs(l - k * k));
  return d;
}

std::function<double(const Point&)> as_function(const Profile& p) {
  return [p](const Point& x) { return p(x); };
}

// ---------------------------------------------------------------------------

void run_spectrum(Context& ctx) {
  const auto& c = ctx.config;
  const Grid g = build_grid(c.domain, c.h);
  const Medium m = make_medium(g, c.medium);
  SpectrumOptions o = spectrum_options(c);
  SpectrumReport r;
  if (c.params.contains("upper")) {
    r = compute_sigma_below(g, m, param<double>(c, "upper", 0.0), o);
  } else {
    r = compute_sigma(g, m, param<int>(c, "count", 10), o);
  }
  CsvWriter csv(ctx.path("spectrum.csv"), ctx.header, "index,eigenvalue,residual");
  double worst = 0.0;
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
    csv.row(i, r.eigenvalues[i], r.residuals[i]);
    worst = std::max(worst, r.residuals[i]);
  }
  json margins = json::array();
  for (double k : c.k_list) margins.push_back(admissibility(k, k, r, c.a1_constant));
  ctx.result.manifest["admissibility"] = margins;
  ctx.result.summary = json{{"count", r.count}, {"eigenvalues", r.eigenvalues}, {"max_residual", worst},
                            {"nodes", g.size()}};
  if (r.count >= 10) ctx.result.summary["weyl_exponent"] = weyl_exponent(r);
}

void run_solve(Context& ctx) {
  const auto& c = ctx.config;
  const Grid g = build_grid(c.domain, c.h);
  const Medium m = make_medium(g, c.medium);
  Profile source;
  if (c.params.contains("source")) {
    source = parse_profile(c.params.at("source"));
  }
  const GridField f = GridField::sample(g, as_function(source));

  std::vector<double> ks = c.k_list;
  SpectrumReport r;
  if (c.params.contains("eigen_index")) {
    const int idx = param<int>(c, "eigen_index", 0);
    r = compute_sigma(g, m, idx + 2, spectrum_options(c));
    const double lambda = r.eigenvalues.at(static_cast<std::size_t>(idx));
    const double below = idx > 0 ? r.eigenvalues[static_cast<std::size_t>(idx) - 1] : 0.0;
    ks.clear();
    for (double d : param<std::vector<double>>(c, "distances", {})) {
      require(d > 0.0 && lambda - d > below, ErrorCode::InvalidArgument,
              "distance leaves the gap below the eigenvalue");
      ks.push_back(std::sqrt(lambda - d));
    }
  } else {
    r = spectrum_covering(g, m, k_max(c), spectrum_options(c));
  }
  require(!ks.empty(), ErrorCode::InvalidArgument, "no frequencies to solve at");

  CsvWriter csv(ctx.path("solve.csv"), ctx.header, "k,k2,dist,u_h1,f_l2,ratio");
  std::vector<double> x, y;
  json margins = json::array();
  for (double k : ks) {
    const DirichletSolver s(assemble(g, m, k));
    const GridField u(g, s.solve_source(f.values));
    const double u_h1 = norm(u, NormKind::H1), f_l2 = norm(f, NormKind::L2);
    const double dist = spectral_distance(r, k);
    csv.row(k, k * k, dist, u_h1, f_l2, u_h1 / f_l2);
    x.push_back(std::log(dist));
    y.push_back(std::log(u_h1 / f_l2));
    margins.push_back(admissibility(k, k, r, c.a1_constant));
  }
  ctx.result.manifest["admissibility"] = margins;
  ctx.result.summary = json{{"points", ks.size()}};
  if (x.size() >= 2) {
    const LinearFit fit = fit_line(x, y);
    ctx.result.summary["slope"] = fit.slope;
    ctx.result.summary["r_squared"] = fit.r_squared;
  }
}

RungeScenario scenario_from(const std::string& s) {
  if (s == "boundary") return RungeScenario::Boundary;
  if (s == "interior") return RungeScenario::Interior;
  if (s == "convex") return RungeScenario::Convex;
  fail(ErrorCode::InvalidArgument, "unknown scenario '" + s + "'");
}

// Mean of log(cost/‖v‖) per key over reached cells with positive cost.
template <typename KeyFn>
std::map<double, double> pooled_log_cost(const std::vector<SweepCell>& cells, KeyFn key) {
  std::map<double, std::vector<double>> by;
  for (const auto& cell : cells) {
    if (cell.reached && cell.cost > 0.0) by[key(cell)].push_back(std::log(cell.cost / cell.v_norm_l2));
  }
  std::map<double, double> out;
  for (const auto& [k, v] : by) out[k] = mean(v);
  return out;
}

void run_runge_sweep(Context& ctx) {
  const auto& c = ctx.config;
  SweepParams p;
  p.scenario = scenario_from(param<std::string>(c, "scenario", "interior"));
  p.h = c.h;
  p.k_list = c.k_list;
  p.epsilon_list = c.epsilon_list;
  p.seeds = c.seeds;
  if (c.domain.kind == DomainSpec::Kind::Disk) {
    p.r_outer = c.domain.radius;
  } else if (c.domain.kind == DomainSpec::Kind::Annulus) {
    p.r_outer = c.domain.r_outer;
    p.r_hole = c.domain.r_inner;
  } else {
    fail(ErrorCode::InvalidArgument, "sweeps run on disks or annuli");
  }
  p.r_inner = param<double>(c, "r_inner", p.r_inner);
  p.r_tilde = param<double>(c, "r_tilde", p.r_tilde);
  p.gamma = c.domain.gamma;
  p.q = as_function(c.medium.q);
  p.V = as_function(c.medium.V);
  p.kappa = c.medium.kappa;
  p.monotone = c.medium.monotone;
  p.a1_constant = c.a1_constant;
  p.data_decay = param<double>(c, "data_decay", p.data_decay);
  p.data_modes = param<int>(c, "data_modes", p.data_modes);
  p.scale_modes_with_k = param<bool>(c, "scale_modes_with_k", p.scale_modes_with_k);
  p.adjust_k = param<bool>(c, "adjust_k", p.adjust_k);

  const std::vector<SweepCell> cells = run_sweep(p);
  write_sweep_csv(cells, ctx.path("sweep.csv"), ctx.header);

  json margins = json::array();
  std::map<double, double> seen;
  int bound_violations = 0, reached = 0;
  for (const auto& cell : cells) {
    if (!seen.count(cell.k)) {
      seen[cell.k] = cell.admissible_margin;
      margins.push_back(json{{"k", cell.k}, {"margin", cell.admissible_margin}});
    }
    if (!cell.reached) continue;
    ++reached;
    if (cell.cost > cell.v_norm_l2 / cell.alpha * (1.0 + 1e-9)) ++bound_violations;
  }
  ctx.result.manifest["admissibility"] = margins;

  const FitReport fit = fit_sweep(p.scenario, cells);
  json s{{"scenario", to_string(p.scenario)},
         {"cells", cells.size()},
         {"reached", reached},
         {"cutoff_bound_violations", bound_violations},
         {"fit", {{"nu", fit.nu}, {"mu", fit.mu}, {"s", fit.s}, {"a", fit.a}, {"b", fit.b},
                  {"intercept", fit.intercept}, {"r_squared", fit.r_squared}, {"cells", fit.cells}}}};

  // Pooled curve in log(1/ε): linear fit and per-seed curvature.
  const auto by_eps = pooled_log_cost(cells, [](const SweepCell& x) { return x.epsilon; });
  if (by_eps.size() >= 3) {
    std::vector<double> x, y;
    for (const auto& [e, v] : by_eps) {
      x.push_back(std::log(1.0 / e));
      y.push_back(v);
    }
    const LinearFit lf = fit_line(x, y);
    s["pooled"] = {{"slope", lf.slope}, {"r_squared", lf.r_squared}, {"points", x.size()}};
    std::vector<double> curvatures;
    for (std::uint64_t seed : p.seeds) {
      std::vector<double> a, b;
      for (const auto& cell : cells) {
        if (cell.seed == seed && cell.reached && cell.cost > 0.0) {
          a.push_back(std::log(1.0 / cell.epsilon));
          b.push_back(std::log(cell.cost / cell.v_norm_l2));
        }
      }
      if (a.size() >= 4) curvatures.push_back(fit_quadratic(a, b).c2);
    }
    if (curvatures.size() >= 2) {
      const TTest t = t_test_positive(curvatures);
      s["curvature"] = {{"mean", t.mean}, {"t", t.t}, {"p_value", t.p_value}, {"seeds", curvatures.size()}};
    }
  }
  // Slope of log cost against log k over [k_min, k_max] and over [k_min, k_max/2].
  const auto by_k = pooled_log_cost(cells, [](const SweepCell& x) { return x.k; });
  if (by_k.size() >= 4) {
    std::vector<double> x, y;
    for (const auto& [k, v] : by_k) {
      x.push_back(std::log(k));
      y.push_back(v);
    }
    // Halving k_max is the range the full one doubles.
    const double half = x.back() - std::log(2.0) + 1e-9;
    std::vector<double> xh, yh;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] <= half) {
        xh.push_back(x[i]);
        yh.push_back(y[i]);
      }
    }
    const LinearFit full = fit_line(x, y);
    s["k_slope_full"] = full.slope;
    if (xh.size() >= 2) {
      const LinearFit lower = fit_line(xh, yh);
      s["k_slope_half"] = lower.slope;
      s["k_slope_change"] = std::abs(full.slope - lower.slope) / std::max(std::abs(lower.slope), 1e-300);
    }
  }
  ctx.result.summary = s;
}

struct Family {
  std::vector<BallTriple> train;
  std::vector<BallTriple> held;
};

void run_three_balls(Context& ctx) {
  const auto& c = ctx.config;
  require(c.domain.kind == DomainSpec::Kind::Disk, ErrorCode::InvalidArgument, "three-balls runs on a disk");
  const Grid g = build_grid(c.domain, c.h);
  const Medium m = make_medium(g, c.medium);
  const double R = c.domain.radius;
  const auto radii = param<std::vector<double>>(c, "radii", {0.25, 0.3, 0.375});
  const int centers = param<int>(c, "centers_per_ball", 4);
  const int random_solutions = param<int>(c, "random_solutions", 30);
  const int base_modes = param<int>(c, "base_modes", 4);
  const auto held_seed = static_cast<std::uint64_t>(param<std::int64_t>(c, "heldout_seed", 107));
  const double spread = param<double>(c, "center_spread", 0.6) * R;
  const double min_cells = param<double>(c, "min_cells", 8.0);

  const SpectrumReport rep = spectrum_covering(g, m, k_max(c), spectrum_options(c));
  json margins = json::array();
  Family fam;
  for (double kt : c.k_list) {
    const double k = find_admissible_k(rep, kt, c.a1_constant);
    margins.push_back(admissibility(kt, k, rep, c.a1_constant));
    const DirichletSolver S(assemble(g, m, k));
    const int Lk = base_modes + static_cast<int>(kt);
    for (int family = 0; family < 2; ++family) {
      std::mt19937_64 rng(family == 0 ? c.seeds.front() : held_seed);
      std::uniform_real_distribution<double> U(-1.0, 1.0);
      // Training adds the centred modes ℓ = 0..Lk ahead of the random ones.
      const int count = random_solutions + (family == 0 ? Lk + 1 : 0);
      for (int s = 0; s < count; ++s) {
        int ell = (s * 7) % (Lk + 1);
        Point center{spread * U(rng), spread * U(rng), 0.0};
        const double phase = kPi * U(rng);
        if (family == 0 && s <= Lk) {
          ell = s;
          center = {0.0, 0.0, 0.0};
        }
        const GridField u = mode_solution(S, ell, center, phase);
        for (double r : radii) {
          for (int j = 0; j < centers; ++j) {
            const double rr = (R - 4.0 * r) * std::sqrt(0.5 * (U(rng) + 1.0));
            const double th = kPi * U(rng);
            Point x0{rr * std::cos(th), rr * std::sin(th), 0.0};
            if (j == 0) x0 = center;
            if (g.spec.boundary_distance(x0) < 4.0 * r) continue;
            const BallTriple t = three_ball_ratio(u, x0, r, kt, family, min_cells);
            (family == 0 ? fam.train : fam.held).push_back(t);
          }
        }
      }
    }
  }
  ctx.result.manifest["admissibility"] = margins;

  std::vector<BallTriple> all = fam.train;
  all.insert(all.end(), fam.held.begin(), fam.held.end());
  write_triples_csv(all, ctx.path("triples.csv"), ctx.header);

  const ThreeBallsFit fit = estimate_exponent(fam.train);
  double min_margin = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (const auto& t : fam.held) {
    const double mg = fit.margin(t);
    min_margin = std::min(min_margin, mg);
    if (mg < 0.0) ++violations;
  }
  json log_c = json::array(), log_c_ls = json::array();
  bool nondecreasing = true;
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& [k, v] : fit.log_c) {
    log_c.push_back(json{{"k", k}, {"log_c", v}});
    log_c_ls.push_back(json{{"k", k}, {"log_c", fit.log_c_ls.at(k)}});
    if (v < prev) nondecreasing = false;
    prev = v;
  }
  ctx.result.summary = json{{"alpha", fit.alpha},
                            {"train_samples", fam.train.size()},
                            {"heldout_samples", fam.held.size()},
                            {"heldout_min_margin", min_margin},
                            {"heldout_violations", violations},
                            {"log_c", log_c},
                            {"log_c_least_squares", log_c_ls},
                            {"log_c_nondecreasing", nondecreasing}};
}

void run_chain(Context& ctx) {
  const auto& c = ctx.config;
  require(c.domain.kind == DomainSpec::Kind::Disk && c.domain.gamma.kind == GammaSpec::Kind::Arcs,
          ErrorCode::InvalidArgument, "chain runs on a disk with an arc Γ");
  const Grid g = build_grid(c.domain, c.h);
  const Medium m = make_medium(g, c.medium);
  const double R = c.domain.radius;
  const GammaSpec& gam = c.domain.gamma;
  const double mid = 0.5 * (gam.arcs.front().first + gam.arcs.front().second);
  const auto radii = param<std::vector<double>>(c, "radii", {0.25, 0.3, 0.375});
  const auto b_radii = param<std::vector<double>>(c, "boundary_radii", {0.25, 0.3});
  const auto angles = param<std::vector<double>>(c, "boundary_angles", {-0.25, -0.1, 0.0, 0.1, 0.25});
  const double r0 = param<double>(c, "start_radius", 0.375);
  const int solutions = param<int>(c, "solutions", 30);
  require(!c.epsilon_list.empty(), ErrorCode::InvalidArgument, "epsilon_list is empty");

  const SpectrumReport rep = spectrum_covering(g, m, k_max(c), spectrum_options(c));
  const auto space = make_trace_space(g, gam);
  const Point start{c.domain.center[0] + R * std::cos(mid), c.domain.center[1] + R * std::sin(mid), 0.0};
  CsvWriter csv(ctx.path("chain.csv"), ctx.header,
                "k,epsilon,solution,n_balls,cover_balls,bound_interior,measured_interior,bound_layer,"
                "bound,measured,layer_measure,log_bound");
  json margins = json::array(), per_k = json::array();
  bool all_hold = true;
  for (double kt : c.k_list) {
    const double k = find_admissible_k(rep, kt, c.a1_constant);
    margins.push_back(admissibility(kt, k, rep, c.a1_constant));
    const DirichletSolver S(assemble(g, m, k));
    std::mt19937_64 rng(c.seeds.front());
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int Lk = 4 + static_cast<int>(kt);
    std::vector<GridField> sols;
    std::vector<double> etas;
    std::vector<BallTriple> inner, bnd;
    for (int s = 0; s < solutions; ++s) {
      const int ell = s <= Lk ? s : (s * 7) % (Lk + 1);
      Point center{0.0, 0.0, 0.0};
      if (s > Lk) center = {0.6 * R * U(rng), 0.6 * R * U(rng), 0.0};
      const GridField u = mode_solution(S, ell, center, kPi * U(rng));
      const double eta = cauchy_data_size(S.op(), u, space);
      for (double r : radii) {
        for (int j = 0; j < 4; ++j) {
          Point x0 = center;
          if (j > 0) {
            const double rr = (R - 4.0 * r) * std::sqrt(0.5 * (U(rng) + 1.0)), th = kPi * U(rng);
            x0 = {rr * std::cos(th), rr * std::sin(th), 0.0};
          }
          if (g.spec.boundary_distance(x0) < 4.0 * r) continue;
          inner.push_back(three_ball_ratio(u, x0, r, kt));
        }
      }
      for (double r : b_radii) {
        for (double th : angles) {
          const Point x0{R * std::cos(mid + th), R * std::sin(mid + th), 0.0};
          try {
            bnd.push_back(boundary_ball_ratio(u, gam, x0, r, kt, eta));
          } catch (const Error& e) {
            if (e.code() != ErrorCode::GeometryViolation) throw;
          }
        }
      }
      bnd.push_back(boundary_ball_ratio(u, gam, start, r0, kt, eta));
      sols.push_back(u);
      etas.push_back(eta);
    }
    ChainParams P;
    P.interior = estimate_exponent(inner);
    P.boundary = estimate_exponent(bnd);
    P.start = start;
    P.start_radius = r0;
    P.k = kt;
    P.sobolev_constant = param<double>(c, "sobolev_constant", 1.0);
    P.mu = param<double>(c, "mu", 0.5);

    std::vector<double> lx, ny;
    double worst_ratio = 0.0;
    for (double eps : c.epsilon_list) {
      int n_balls = 0;
      for (std::size_t i = 0; i < sols.size(); ++i) {
        const double M = norm(sols[i], NormKind::H1);
        const ChainResult cr = chain_propagate(sols[i], etas[i], M, eps, P);
        csv.row(kt, eps, i, cr.n_balls, cr.cover_balls, cr.bound_interior, cr.measured_interior,
                cr.bound_layer, cr.bound, cr.measured, cr.layer_measure, cr.log_bound);
        n_balls = std::max(n_balls, cr.n_balls);
        worst_ratio = std::max(worst_ratio, cr.measured / cr.bound);
      }
      lx.push_back(std::log(1.0 / eps));
      ny.push_back(n_balls);
    }
    if (worst_ratio > 1.0) all_hold = false;
    json entry{{"k", kt}, {"alpha", P.interior.alpha}, {"alpha_boundary", P.boundary.alpha},
               {"n_balls", ny}, {"max_measured_over_bound", worst_ratio}};
    if (lx.size() >= 2) {
      const LinearFit f = fit_line(lx, ny);
      entry["depth_slope"] = f.slope;
      entry["depth_r_squared"] = f.r_squared;
    }
    per_k.push_back(entry);
  }
  ctx.result.manifest["admissibility"] = margins;
  ctx.result.summary = json{{"per_k", per_k}, {"bounds_hold", all_hold}};
}

// Largest ratio between neighbouring entries of a positive sequence.
double max_neighbour_ratio(const std::vector<double>& v) {
  double worst = 1.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double a = v[i], b = v[i + 1];
    if (a <= 0.0 || b <= 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::max(a / b, b / a));
  }
  return worst;
}

void run_carleman(Context& ctx) {
  const auto& c = ctx.config;
  const Grid g = build_grid(c.domain, c.h);
  const Medium m = make_medium(g, c.medium);
  const auto taus = param<std::vector<double>>(c, "taus", {10.0, 20.0, 40.0, 80.0});
  const int per_k = param<int>(c, "samples_per_k", 20);
  CarlemanOptions opt;
  opt.tau0 = param<double>(c, "tau0", opt.tau0);
  opt.collar = param<double>(c, "collar", opt.collar);
  const std::string split = param<std::string>(c, "split", "source");
  require(split == "source" || split == "divergence", ErrorCode::InvalidArgument,
          "split is 'source' or 'divergence'");
  opt.mode = split == "source" ? SplitMode::SourceOnly : SplitMode::Divergence;

  const std::size_t nt = taus.size(), nk = c.k_list.size();
  std::vector<std::vector<double>> worst(nt, std::vector<double>(nk, 0.0));
  std::vector<CarlemanSample> rows;
  double commutator = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < nk; ++b) {
    const double k = c.k_list[b];
    for (double tau : taus) commutator = std::min(commutator, commutator_positivity(m, k, tau));
    for (int s = 0; s < per_k; ++s) {
      const std::uint64_t seed = c.seeds.front() * 1000003ULL + 1000ULL * b + static_cast<std::uint64_t>(s);
      const GridField u = random_carleman_sample(g, k, seed, s % 2);
      for (std::size_t a = 0; a < nt; ++a) {
        CarlemanSample cs = carleman_check(u, m, k, taus[a], opt);
        worst[a][b] = std::max(worst[a][b], cs.ratio());
        cs.f = GridField();
        cs.F[0] = GridField();
        cs.F[1] = GridField();
        rows.push_back(std::move(cs));
      }
    }
  }
  write_carleman_csv(rows, ctx.path("carleman.csv"), ctx.header);

  std::vector<double> by_tau(nt, 0.0), by_k(nk, 0.0);
  for (std::size_t a = 0; a < nt; ++a) {
    for (std::size_t b = 0; b < nk; ++b) {
      by_tau[a] = std::max(by_tau[a], worst[a][b]);
      by_k[b] = std::max(by_k[b], worst[a][b]);
    }
  }
  ctx.result.summary = json{{"samples", per_k * static_cast<int>(nk)},
                            {"split", split},
                            {"taus", taus},
                            {"k_list", c.k_list},
                            {"max_ratio", worst},
                            {"max_ratio_by_tau", by_tau},
                            {"max_ratio_by_k", by_k},
                            {"tau_doubling_spread", max_neighbour_ratio(by_tau)},
                            {"k_doubling_spread", max_neighbour_ratio(by_k)},
                            {"commutator_min", commutator}};
}

void run_improved_ucp(Context& ctx) {
  const auto& c = ctx.config;
  const Grid g = build_grid(c.domain, c.h);
  const Medium m = make_medium(g, c.medium);
  const auto deltas = param<std::vector<double>>(c, "deltas", {0.1, 0.2, 0.4});
  const int lo = param<int>(c, "ell_min_offset", 2), hi = param<int>(c, "ell_max_offset", 10);
  const double mu = param<double>(c, "mu", 0.5), nu = param<double>(c, "nu", 0.5);
  const SpectrumReport rep = spectrum_covering(g, m, k_max(c), spectrum_options(c));
  const auto space = make_trace_space(g, GammaSpec::full());

  std::vector<std::unique_ptr<DirichletSolver>> solvers;
  json margins = json::array();
  for (double kt : c.k_list) {
    const double k = find_admissible_k(rep, kt, c.a1_constant);
    margins.push_back(admissibility(kt, k, rep, c.a1_constant));
    solvers.push_back(std::make_unique<DirichletSolver>(assemble(g, m, k)));
  }
  ctx.result.manifest["admissibility"] = margins;

  CsvWriter csv(ctx.path("improved_ucp.csv"), ctx.header,
                "delta,k,ell,status,eta,M,lhs,full,rhs_log,rhs_poly");
  json fits = json::array();
  double worst_growth = 0.0;
  std::vector<double> nus;
  for (double delta : deltas) {
    std::vector<ImprovedUcpRecord> all;
    for (std::size_t i = 0; i < c.k_list.size(); ++i) {
      const double kt = c.k_list[i];
      for (int ell = static_cast<int>(kt) + lo; ell <= static_cast<int>(kt) + hi; ++ell) {
        try {
          ImprovedUcpRecord r = improved_ucp_probe(*solvers[i], space, ell, delta, mu, nu);
          r.k = kt;
          csv.row(delta, kt, ell, "ok", r.eta, r.M, r.lhs, r.full, r.rhs_log, r.rhs_poly);
          all.push_back(r);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::HypothesisViolated) throw;
          csv.row(delta, kt, ell, "hypothesis_violated", "", "", "", "", "", "");
        }
      }
    }
    json entry{{"delta", delta}, {"records", all.size()}};
    if (all.size() >= 3) {
      const ImprovedUcpFit fit = fit_improved_ucp(all);
      json cs = json::array();
      for (std::size_t j = 0; j < fit.log_c.size(); ++j) {
        cs.push_back(json{{"k", fit.log_c[j].first}, {"c", std::exp(fit.log_c[j].second)}});
        for (std::size_t l = 0; l < fit.log_c.size(); ++l) {
          if (std::abs(fit.log_c[l].first - 2.0 * fit.log_c[j].first) < 1e-9) {
            worst_growth = std::max(worst_growth, std::exp(fit.log_c[l].second - fit.log_c[j].second));
          }
        }
      }
      entry["nu"] = fit.nu;
      entry["constants"] = cs;
      nus.push_back(fit.nu);
    }
    fits.push_back(entry);
  }
  bool increasing = nus.size() == deltas.size();
  for (std::size_t i = 0; i + 1 < nus.size(); ++i) increasing = increasing && nus[i + 1] > nus[i];
  ctx.result.summary = json{{"fits", fits}, {"nu_increasing_in_delta", increasing},
                            {"max_constant_growth_on_doubling", worst_growth}};
}

void run_bessel_optimality(Context& ctx) {
  const auto& c = ctx.config;
  const auto ells = param<std::vector<int>>(c, "ells", {12, 16, 20});
  const int n = param<int>(c, "dimension", 2);
  const double rho = param<double>(c, "inner_radius", 0.5);
  const bool discrete = param<bool>(c, "discrete", n == 2);
  const std::vector<double> ks = c.k_list.empty() ? std::vector<double>{2.0} : c.k_list;

  CsvWriter csv(ctx.path("optimality.csv"), ctx.header,
                "n,k,ell,epsilon,g_l2,series_l2,alpha_ell,c_min,min_boundary_norm,bound_2ell,"
                "growth_over_2pow_ell,asymptotic_regime,measured_cost,cost_ratio");
  double min_growth = std::numeric_limits<double>::infinity();
  double min_ratio = std::numeric_limits<double>::infinity();
  double series_gap = 0.0;
  bool bound_ok = true;
  for (double k : ks) {
    std::unique_ptr<Grid> grid;
    std::shared_ptr<const DirichletSolver> solver;
    std::unique_ptr<ForwardMap> F;
    std::unique_ptr<SvdSystem> S;
    Mask om;
    if (discrete) {
      require(n == 2 && c.domain.kind == DomainSpec::Kind::Disk, ErrorCode::InvalidArgument,
              "the discrete cross-check runs on a disk");
      grid = std::make_unique<Grid>(build_grid(c.domain, c.h));
      const Medium m = make_medium(*grid, c.medium);
      solver = std::make_shared<const DirichletSolver>(assemble(*grid, m, k));
      om = ball_mask(*grid, c.domain.center, rho);
      F = std::make_unique<ForwardMap>(build_forward_map(solver, make_trace_space(*grid, c.domain.gamma), om));
      S = std::make_unique<SvdSystem>(svd(*F, c.tolerances.tie));
    }
    for (int ell : ells) {
      const OptimalityBound ob = optimality_lower_bound(k, ell, -1.0, n);
      const OptimalityBound ob2 = optimality_lower_bound(k, 2 * ell, -1.0, n);
      const double growth = ob2.min_boundary_norm / ob.min_boundary_norm / std::pow(2.0, ell);
      min_growth = std::min(min_growth, growth);
      if (ob.min_boundary_norm < ob.bound_2ell) bound_ok = false;
      double series = std::numeric_limits<double>::quiet_NaN();
      if (rho == 0.5) {
        series = std::sqrt(radial_l2_series(n, ell, k));
        series_gap = std::max(series_gap, std::abs(series * series - ob.g_l2 * ob.g_l2) / (ob.g_l2 * ob.g_l2));
      }
      double cost = std::numeric_limits<double>::quiet_NaN(), ratio = cost;
      if (discrete) {
        const Point c0 = c.domain.center;
        const GridField data = GridField::sample(*grid, [&](const Point& x) {
          const double dx = x[0] - c0[0], dy = x[1] - c0[1];
          return ob.alpha_ell * bessel_j(ell, k * std::hypot(dx, dy)) * std::cos(ell * std::atan2(dy, dx)) /
                 std::sqrt(kPi);
        });
        const DirichletSolver local(assemble(*grid, solver->op().medium(), k, om));
        GridField v(*grid, local.solve(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid->size())), data.values),
                    om);
        // Same data size as the continuum problem: unit H¹ norm on Ω₁.
        v.values /= norm(v, NormKind::H1, om);
        const RungeApproximant a = runge_approximate(*F, *S, v, ob.epsilon, 1.0);
        cost = a.cost;
        ratio = cost / ob.min_boundary_norm;
        min_ratio = std::min(min_ratio, ratio);
      }
      csv.row(n, k, ell, ob.epsilon, ob.g_l2, series, ob.alpha_ell, ob.c_min, ob.min_boundary_norm,
              ob.bound_2ell, growth, ob.asymptotic_regime ? 1 : 0, cost, ratio);
    }
  }
  ctx.result.summary = json{{"min_growth_over_2pow_ell", min_growth},
                            {"bound_2ell_holds", bound_ok},
                            {"series_relative_gap", series_gap}};
  if (discrete) ctx.result.summary["min_cost_ratio"] = min_ratio;
}

void run_calderon(Context& ctx) {
  const auto& c = ctx.config;
  const Grid g = build_grid(c.domain, c.h);
  const Medium m0 = make_medium(g, c.medium);
  const auto space = make_trace_space(g, c.domain.gamma);
  const auto amplitudes = param<std::vector<double>>(c, "amplitudes", {0.25, 0.5, 1.0, 2.0});
  const std::string target = param<std::string>(c, "target", "V");
  require(target == "V" || target == "q", ErrorCode::InvalidArgument, "target is 'V' or 'q'");
  Profile pert;
  pert.kind = "bump";
  pert.center = {0.5, 0.5, 0.5};
  if (c.params.contains("perturbation")) {
    pert = parse_profile(c.params.at("perturbation"));
  }
  const double op_radius = param<double>(c, "omega_prime_radius", 0.3);
  Point op_center = pert.center;
  const auto oc = param<std::vector<double>>(c, "omega_prime_center", {});
  for (std::size_t i = 0; i < oc.size() && i < 3; ++i) op_center[i] = oc[i];
  const Mask omega_prime = ball_mask(g, op_center, op_radius);
  const int pairs = param<int>(c, "identity_pairs", 4);
  const Box box = c.domain.bounding_box();

  auto perturbed = [&](double a) {
    Medium m = m0;
    const GridField bump = GridField::sample(g, as_function(pert.with_amplitude(a)));
    (target == "V" ? m.V : m.q).values += bump.values;
    m.validate();
    return m;
  };

  const SpectrumOptions so = spectrum_options(c);
  const double kmax = k_max(c);
  const SpectrumReport rep0 = spectrum_covering(g, m0, kmax, so);
  std::vector<Medium> media;
  std::vector<SpectrumReport> reps;
  for (double a : amplitudes) {
    media.push_back(perturbed(a));
    reps.push_back(spectrum_covering(g, media.back(), kmax, so));
  }
  json margins = json::array();
  for (double k : c.k_list) {
    margins.push_back(admissibility(k, k, rep0, c.a1_constant));
    require(check_a1(k, rep0, c.a1_constant).admissible, ErrorCode::NearResonance,
            "k violates (a1) for the background medium");
    for (const auto& r : reps) {
      require(check_a1(k, r, c.a1_constant).admissible, ErrorCode::NearResonance,
              "k violates (a1) for a perturbed medium");
    }
  }
  ctx.result.manifest["admissibility"] = margins;
  ctx.result.manifest["geometry_note"] = "box boundary has corners; the stability bound is stated for smooth boundaries";

  CsvWriter csv(ctx.path("calderon.csv"), ctx.header,
                "perturbation_id,amplitude,k,delta,lhs,best_c,alessandrini_rel,symmetry_defect");
  std::vector<StabilityRecord> records;
  double worst_identity = 0.0, worst_symmetry = 0.0, identical_delta = 0.0, worst_linearity = 0.0;
  std::mt19937_64 rng(c.seeds.front());
  std::normal_distribution<double> N;
  for (double k : c.k_list) {
    const DtnMatrix L0 = dtn_map(g, m0, k, space);
    const Medium copy = m0;
    identical_delta = std::max(identical_delta, dtn_distance(L0, dtn_map(g, copy, k, space)));
    worst_symmetry = std::max(worst_symmetry, L0.symmetry_defect());
    const DirichletSolver s0(assemble(g, m0, k));
    double prev_delta = 0.0, prev_amp = 0.0;
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
      const DtnMatrix L1 = dtn_map(g, media[i], k, space);
      worst_symmetry = std::max(worst_symmetry, L1.symmetry_defect());
      const StabilityRecord rec = stability_check(L0, m0, L1, media[i], omega_prime, box, amplitudes[i]);
      const DirichletSolver s1(assemble(g, media[i], k));
      double identity = 0.0;
      for (int p = 0; p < pairs; ++p) {
        Eigen::VectorXd g1(static_cast<Eigen::Index>(space->gamma_size()));
        Eigen::VectorXd g2(g1.size());
        for (auto& x : g1) x = N(rng);
        for (auto& x : g2) x = N(rng);
        identity = std::max(identity, alessandrini_check(s0, L0, s1, L1, g1, g2).relative());
      }
      worst_identity = std::max(worst_identity, identity);
      if (prev_delta > 0.0) {
        const double linear = (rec.delta / prev_delta) / (amplitudes[i] / prev_amp);
        worst_linearity = std::max(worst_linearity, std::abs(linear - 1.0));
      }
      prev_delta = rec.delta;
      prev_amp = amplitudes[i];
      csv.row(i, amplitudes[i], k, rec.delta, rec.lhs, rec.minimal_constant, identity,
              L1.symmetry_defect());
      records.push_back(rec);
    }
  }
  const UniformConstant uc = uniform_constant(records);
  ctx.result.summary = json{{"uniform_c", uc.C},
                            {"uniform_c_holds", uc.holds},
                            {"records", records.size()},
                            {"max_alessandrini_relative", worst_identity},
                            {"max_symmetry_defect", worst_symmetry},
                            {"identical_media_delta", identical_delta},
                            {"max_linearity_deviation", worst_linearity},
                            {"gamma_nodes", space->gamma_size()},
                            {"nodes", g.size()}};
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config.canonical.dump());
  return s.str();
}

std::string manifest_header(const ExperimentConfig& config) {
  std::ostringstream s;
  s << std::setprecision(17);
  s << "# hlab " << kVersion << '\n';
  s << "# experiment " << to_string(config.experiment) << '\n';
  s << "# config_hash " << config_hash(config) << '\n';
  s << "# h " << config.h << '\n';
  s << "# seeds";
  for (auto seed : config.seeds) s << ' ' << seed;
  s << '\n';
  return s.str();
}

RunResult run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  Context ctx{config, out_dir, manifest_header(config), {}};
  ctx.result.manifest = json{{"tool", "hlab"},
                             {"version", kVersion},
                             {"experiment", to_string(config.experiment)},
                             {"config_hash", config_hash(config)},
                             {"h", config.h},
                             {"seeds", config.seeds},
                             {"config", config.canonical}};
  switch (config.experiment) {
    case Experiment::Spectrum: run_spectrum(ctx); break;
    case Experiment::Solve: run_solve(ctx); break;
    case Experiment::RungeSweep: run_runge_sweep(ctx); break;
    case Experiment::ThreeBalls: run_three_balls(ctx); break;
    case Experiment::Chain: run_chain(ctx); break;
    case Experiment::Carleman: run_carleman(ctx); break;
    case Experiment::ImprovedUcp: run_improved_ucp(ctx); break;
    case Experiment::BesselOptimality: run_bessel_optimality(ctx); break;
    case Experiment::Calderon: run_calderon(ctx); break;
  }
  ctx.result.manifest["files"] = ctx.result.files;
  const auto dir = std::filesystem::path(out_dir);
  std::ofstream(dir / "summary.json") << ctx.result.summary.dump(2) << '\n';
  std::ofstream(dir / "manifest.json") << ctx.result.manifest.dump(2) << '\n';
  return ctx.result;
}

json sigma_report(const ExperimentConfig& config) {
  const Grid g = build_grid(config.domain, config.h);
  const Medium m = make_medium(g, config.medium);
  const double top = config.k_list.empty() ? 3.0 : k_max(config);
  const SpectrumReport r = spectrum_covering(g, m, top, spectrum_options(config));
  json margins = json::array();
  for (double k : config.k_list) {
    json entry = admissibility(k, k, r, config.a1_constant);
    entry["suggested_k"] = find_admissible_k(r, k, config.a1_constant);
    margins.push_back(entry);
  }
  return json{{"config_hash", config_hash(config)},
              {"nodes", g.size()},
              {"count", r.count},
              {"covered_up_to", r.covered_up_to},
              {"eigenvalues", r.eigenvalues},
              {"admissibility", margins}};
}

std::vector<std::string> assumption_report(const ExperimentConfig& config) {
  std::vector<std::string> out;
  const Grid g = build_grid(config.domain, config.h);
  Medium m;
  try {
    m.q = GridField::sample(g, as_function(config.medium.q));
    m.V = GridField::sample(g, as_function(config.medium.V));
  } catch (const Error& e) {
    out.push_back(std::string("medium: ") + e.what());
    return out;
  }
  m.kappa = config.medium.kappa;
  const double lo = 1.0 / m.kappa;
  if (!m.V.values.allFinite()) out.push_back("(i) V has non-finite samples");
  if (m.q.values.minCoeff() < lo || m.q.values.maxCoeff() > m.kappa) {
    std::ostringstream s;
    s << "(ii) q ranges over [" << m.q.values.minCoeff() << ", " << m.q.values.maxCoeff()
      << "], outside [1/kappa, kappa] = [" << lo << ", " << m.kappa << "]";
    out.push_back(s.str());
  }
  bool needs_monotone = config.medium.monotone || config.experiment == Experiment::Carleman ||
                        config.experiment == Experiment::ImprovedUcp;
  if (config.experiment == Experiment::RungeSweep) {
    const auto it = config.params.find("scenario");
    if (it != config.params.end() && scenario_from(it->get<std::string>()) == RungeScenario::Convex) {
      needs_monotone = true;
    }
  }
  if (needs_monotone && min_radial_derivative(m) < -1e-10) {
    out.push_back("(ii') q is not radially nondecreasing (x·∇q < 0 somewhere)");
  }
  if (!out.empty() || config.k_list.empty()) return out;
  m.validate();
  const SpectrumReport r = spectrum_covering(g, m, k_max(config), spectrum_options(config));
  for (double k : config.k_list) {
    const A1Margin a = check_a1(k, r, config.a1_constant);
    if (!a.admissible) {
      std::ostringstream s;
      s << "(a1) k = " << k << ": dist(k^2, Sigma) = " << a.dist << " <= " << a.threshold
        << "; nearest admissible k is " << find_admissible_k(r, k, config.a1_constant);
      out.push_back(s.str());
    }
  }
  return out;
}

}  // namespace hlab::cli
