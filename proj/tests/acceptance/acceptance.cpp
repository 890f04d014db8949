// Acceptance run: one PASS/FAIL line per criterion on stdout and in
// <out>/acceptance.txt. Exit status is 0 once all criteria have been
// evaluated; --strict makes any FAIL a nonzero exit.
#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiments.hpp"
#include "hlab/bessel.hpp"
#include "hlab/error.hpp"
#include "hlab/runge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path out;
  std::map<std::string, json> summaries;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const json& run_config(Context& ctx, const std::string& name, const fs::path& dir) {
  const cli::ExperimentConfig c = cli::load_config((fs::path(HLAB_CONFIG_DIR) / (name + ".json")).string());
  ctx.summaries[dir.string()] = cli::run_experiment(c, dir.string()).summary;
  return ctx.summaries[dir.string()];
}

const json& summary(Context& ctx, const std::string& name) {
  const fs::path dir = ctx.out / name;
  auto it = ctx.summaries.find(dir.string());
  if (it != ctx.summaries.end()) return it->second;
  return run_config(ctx, name, dir);
}

// Disk pair B_{1/2} ⊂ B_1 with q = 1, V = 0 at an admissible k near k_target.
struct DiskPair {
  Grid grid;
  Medium medium;
  double k = 0.0;
  std::unique_ptr<ForwardMap> map;

  DiskPair(double k_target, double h)
      : grid(build_grid(DomainSpec::disk(1.0), h)), medium(Medium::constant(grid, 1.0, 0.0, 1.5)) {
    const SpectrumReport r = compute_sigma_below(grid, medium, std::max(2.5 * k_target * k_target, 40.0));
    k = find_admissible_k(r, k_target, 0.01);
    require(check_a1(k, r, 0.01).admissible, ErrorCode::InsufficientAdmissibleK, "no admissible k");
    auto solver = std::make_shared<const DirichletSolver>(assemble(grid, medium, k));
    map = std::make_unique<ForwardMap>(
        build_forward_map(solver, make_trace_space(grid, GammaSpec::full()), ball_mask(grid, {}, 0.5)));
  }
};

Eigen::VectorXd gaussian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> n01;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = n01(rng);
  return v;
}

Outcome adjoint_exactness(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string ks;
  for (double k_target : {2.0, 5.0, 9.0}) {
    const DiskPair pair(k_target, 1.0 / 32);
    ks += (ks.empty() ? "" : ",") + fmt(pair.k);
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(k_target));
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd g = gaussian(rng, pair.map->matrix().cols());
      const Eigen::VectorXd u = gaussian(rng, pair.map->matrix().rows());
      const double lhs = omega1_inner(*pair.map, pair.map->restrict(pair.map->solve_gamma(g)), u);
      const double rhs = gamma_inner(*pair.map->space(), g, adjoint_apply(*pair.map, u));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)));
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-8 && elapsed <= 120.0,
          "max relative gap " + fmt(worst) + " over 3x50 pairs, k = {" + ks + "}, " + fmt(elapsed) +
              " s (<= 1e-8, <= 120 s)"};
}

Outcome svd_identities(Context&) {
  const DiskPair pair(2.0, 1.0 / 32);
  const SvdSystem s = svd(*pair.map);
  const SvdResiduals r = svd_residuals(*pair.map, s, 50);
  const double worst = std::max({r.max_identity, r.max_phi_orthonormality, r.max_psi_orthonormality});
  const double slope = log_decay_slope(s, 50);
  return {worst <= 1e-8 && slope < -0.1,
          "max residual " + fmt(worst) + " (<= 1e-8, relative to ||A||), log mu slope " + fmt(slope) + " (< -0.1)"};
}

Outcome runge_signature(Context& ctx) {
  const json& interior = summary(ctx, "runge_interior");
  const json& boundary = summary(ctx, "runge_boundary");
  const double r2 = interior.at("pooled").at("r_squared");
  const double p = boundary.at("curvature").at("p_value");
  const double curvature = boundary.at("curvature").at("mean");
  return {r2 >= 0.9 && p < 0.05 && curvature > 0.0,
          "interior R^2 " + fmt(r2) + " (>= 0.9); boundary curvature " + fmt(curvature) + ", p = " + fmt(p) +
              " (> 0, < 0.05)"};
}

Outcome convex_k_stability(Context& ctx) {
  const json& s = summary(ctx, "runge_convex");
  const double change = s.at("k_slope_change");
  return {change <= 0.3, "k-slope over [2,8] " + fmt(s.at("k_slope_half")) + ", over [2,16] " +
                             fmt(s.at("k_slope_full")) + ", relative change " + fmt(change) + " (<= 0.3)"};
}

Outcome cutoff_and_valpha(Context& ctx) {
  int violations = 0;
  for (const char* name : {"runge_interior", "runge_boundary", "runge_convex"}) {
    violations += summary(ctx, name).at("cutoff_bound_violations").get<int>();
  }
  const DiskPair pair(2.0, 1.0 / 32);
  const SvdSystem s = svd(*pair.map);
  const Mask tilde = ball_mask(pair.grid, {}, 0.75);
  double worst = 0.0;
  int cells = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GridField v = random_subdomain_solution(pair.grid, pair.medium, pair.k, tilde, seed);
    const double vh1 = norm(v, NormKind::H1, tilde);
    for (double eps : {0.1, 0.03, 0.01, 0.003}) {
      const RungeApproximant a = runge_approximate(*pair.map, s, v, eps, vh1);
      if (a.cost > a.v_l2 / a.alpha * (1 + 1e-12)) ++violations;
      worst = std::max(worst, valpha_identity(*pair.map, a, v).relative_gap());
      ++cells;
    }
  }
  return {violations == 0 && worst <= 1e-6,
          "cutoff bound violations " + std::to_string(violations) + " (== 0); Parseval vs pairing max gap " +
              fmt(worst) + " on " + std::to_string(cells) + " cells (<= 1e-6)"};
}

Outcome resonance_probe(Context& ctx) {
  const json& s = summary(ctx, "solve_resonance");
  const double slope = s.at("slope");
  return {std::abs(slope + 1.0) <= 0.15, "log-log slope " + fmt(slope) + " (-1 +/- 0.15)"};
}

Outcome three_balls(Context& ctx) {
  const json& s = summary(ctx, "three_balls");
  const double alpha = s.at("alpha");
  const double margin = s.at("heldout_min_margin");
  const bool monotone = s.at("log_c_nondecreasing");
  return {alpha > 0.0 && alpha < 1.0 && margin >= 0.0 && monotone,
          "alpha " + fmt(alpha) + " (in (0,1)), held-out min margin " + fmt(margin) +
              " (>= 0), log C(k) nondecreasing " + (monotone ? "yes" : "no")};
}

Outcome carleman_uniformity(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const json& s = summary(ctx, "carleman");
  const double elapsed = seconds_since(t0);
  const double tau = s.at("tau_doubling_spread"), k = s.at("k_doubling_spread");
  const int samples = s.at("samples");
  return {tau <= 2.0 && k <= 2.0 && samples >= 100 && elapsed <= 600.0,
          "tau doubling spread " + fmt(tau) + ", k doubling spread " + fmt(k) + " (<= 2), " +
              std::to_string(samples) + " samples (>= 100), " + fmt(elapsed) + " s (<= 600 s)"};
}

Outcome bessel_engine(Context&) {
  double closed = 0.0;
  for (int i = 1; i <= 2000; ++i) {
    const double x = 0.01 * i * i / 40.0;
    const double exact = std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x);
    closed = std::max(closed, std::abs(bessel_j(0.5, x) - exact));
  }
  std::vector<double> xs;
  for (int i = 1; i <= 9; ++i) xs.push_back(0.1 * i);
  const BesselInequalityReport scan = check_bessel_inequalities({5, 10, 20, 50}, xs);
  double series = 0.0;
  for (int n : {2, 3}) {
    for (int ell : {0, 4, 12, 16, 20}) {
      for (double k : {1.0, 2.0, 4.0}) {
        const double q = radial_l2_squared(n, ell, k, 0.5);
        series = std::max(series, std::abs(radial_l2_series(n, ell, k) - q) / q);
      }
    }
  }
  const int bad = scan.violations + scan.monotonicity_violations;
  return {closed <= 1e-10 && bad == 0 && series <= 1e-8,
          "J_1/2 max error " + fmt(closed) + " (<= 1e-10), scan violations " + std::to_string(bad) +
              " (== 0), series gap " + fmt(series) + " (<= 1e-8)"};
}

Outcome optimality(Context& ctx) {
  const json& s = summary(ctx, "bessel_optimality");
  const double ratio = s.at("min_cost_ratio");
  const double growth = s.at("min_growth_over_2pow_ell");
  return {ratio >= 0.5 && growth >= 1.0, "measured/analytic cost min " + fmt(ratio) +
                                             " (>= 0.5), growth / 2^ell min " + fmt(growth) + " (>= 1)"};
}

Outcome calderon(Context& ctx) {
  const json& s = summary(ctx, "calderon");
  const double ident = s.at("max_alessandrini_relative");
  const double same = s.at("identical_media_delta");
  const bool holds = s.at("uniform_c_holds");
  return {ident <= 1e-6 && same <= 1e-10 && holds,
          "identity gap " + fmt(ident) + " (<= 1e-6), identical-media delta " + fmt(same) +
              " (<= 1e-10), uniform C = " + fmt(s.at("uniform_c")) + (holds ? " holds" : " fails")};
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[e.path().filename().string()] = s.str();
  }
  return out;
}

Outcome determinism(Context& ctx) {
  int compared = 0, differing = 0;
  for (const char* name : {"spectrum_square", "solve_resonance", "runge_interior", "three_balls", "bessel_optimality",
                           "calderon"}) {
    summary(ctx, name);
    run_config(ctx, name, ctx.out / "rerun" / name);
    const auto a = csv_files(ctx.out / name), b = csv_files(ctx.out / "rerun" / name);
    if (a.size() != b.size()) ++differing;
    for (const auto& [file, bytes] : a) {
      ++compared;
      auto it = b.find(file);
      if (it == b.end() || it->second != bytes) ++differing;
    }
  }
  return {differing == 0 && compared > 0,
          std::to_string(compared) + " CSV files compared, " + std::to_string(differing) + " differ (== 0)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_out";
  bool strict = false;
  std::vector<int> only;
  app.add_option("--out", out, "Directory for experiment artifacts");
  app.add_flag("--strict", strict, "Exit nonzero when any criterion fails");
  app.add_option("--only", only, "Evaluate only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  ctx.out = out;
  fs::create_directories(ctx.out);

  const std::vector<std::pair<std::string, std::function<Outcome(Context&)>>> criteria{
      {"adjoint exactness", adjoint_exactness},
      {"singular system identities", svd_identities},
      {"Runge cost signature", runge_signature},
      {"convex k-slope stability", convex_k_stability},
      {"cutoff bound and v_alpha identity", cutoff_and_valpha},
      {"resonance probe", resonance_probe},
      {"three-balls envelope", three_balls},
      {"Carleman uniformity", carleman_uniformity},
      {"Bessel engine", bessel_engine},
      {"optimality cross-check", optimality},
      {"Calderon stability", calderon},
      {"determinism", determinism},
  };
  const std::set<int> selected(only.begin(), only.end());
  std::ofstream report(ctx.out / "acceptance.txt");
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    char line[1024];
    std::snprintf(line, sizeof line, "%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                  o.detail.c_str());
    std::fputs(line, stdout);
    std::fflush(stdout);
    report << line << std::flush;
  }
  return strict && failures > 0 ? 1 : 0;
}
