#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "hlab/assembly.hpp"
#include "hlab/bessel.hpp"
#include "hlab/calderon.hpp"
#include "hlab/runge.hpp"
#include "hlab/spectral.hpp"

using namespace hlab;

static void BM_BesselJY(benchmark::State& state) {
  const double alpha = static_cast<double>(state.range(0));
  double x = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bessel_jy(alpha, x));
    x = x < 900.0 ? x * 1.37 : 0.5;
  }
}
BENCHMARK(BM_BesselJY)->Arg(0)->Arg(20)->Arg(200);

static void BM_DirichletSolve(benchmark::State& state) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / static_cast<double>(state.range(0)));
  const Medium m = Medium::constant(g, 1.0, 0.0, 2.0);
  const DirichletSolver solver(assemble(g, m, 3.1));
  const Eigen::VectorXd f = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.size()));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(f, zero));
  state.counters["nodes"] = static_cast<double>(g.size());
}
BENCHMARK(BM_DirichletSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_Factorize(benchmark::State& state) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / static_cast<double>(state.range(0)));
  const Medium m = Medium::constant(g, 1.0, 0.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(DirichletSolver(assemble(g, m, 3.1)));
}
BENCHMARK(BM_Factorize)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_Spectrum(benchmark::State& state) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / 32);
  const Medium m = Medium::constant(g, 1.0, 0.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(compute_sigma(g, m, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_Spectrum)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_ForwardMapAndSvd(benchmark::State& state) {
  const Grid g = build_grid(DomainSpec::disk(1.0), 1.0 / static_cast<double>(state.range(0)));
  const Medium m = Medium::constant(g, 1.0, 0.0, 2.0);
  auto solver = std::make_shared<const DirichletSolver>(assemble(g, m, 2.0));
  const TraceSpacePtr space = make_trace_space(g, GammaSpec::full());
  const Mask omega1 = ball_mask(g, {}, 0.5);
  for (auto _ : state) {
    const ForwardMap map = build_forward_map(solver, space, omega1);
    benchmark::DoNotOptimize(svd(map));
  }
}
BENCHMARK(BM_ForwardMapAndSvd)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_DtnMap(benchmark::State& state) {
  const Grid g = build_grid(
      DomainSpec::rectangle(Box{{0, 0, 0}, {1, 1, 1}}, 3).with_gamma(GammaSpec::face("z1")),
      1.0 / static_cast<double>(state.range(0)));
  const Medium m = Medium::constant(g, 1.0, 0.0, 2.0);
  const TraceSpacePtr space = make_trace_space(g, g.spec.gamma);
  for (auto _ : state) benchmark::DoNotOptimize(dtn_map(g, m, 2.0, space));
}
BENCHMARK(BM_DtnMap)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
