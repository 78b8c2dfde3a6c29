// Serial reference driver against the OpenMP driver, plus per-step kernel cost.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "gmsde/mc.hpp"
#include "gmsde/schemes.hpp"

using namespace gmsde;

namespace {

RunConfig config(double h, std::uint64_t samples) {
  RunConfig rc;
  rc.scheme = SchemeKind::gm_ode;
  rc.h = h;
  rc.samples = samples;
  rc.slices = 10;
  rc.seed = 7;
  return rc;
}

const char* kProblems[] = {"quad1d", "gbm", "rot2d", "ring6d"};

void BM_WeakErrorSerial(benchmark::State& state) {
  const BuiltinProblem bp = builtin_problem(kProblems[state.range(0)]);
  RunConfig rc = config(1.0 / 16, 20480);
  rc.horizon = bp.horizon;
  for (auto _ : state) benchmark::DoNotOptimize(run_weak_error_serial(bp, rc).estimate);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rc.samples * step_count(rc.horizon, rc.h)));
  state.SetLabel(bp.problem.name);
}

void BM_WeakErrorOpenMP(benchmark::State& state) {
  const BuiltinProblem bp = builtin_problem(kProblems[state.range(0)]);
  RunConfig rc = config(1.0 / 16, 20480);
  rc.horizon = bp.horizon;
  rc.threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(run_weak_error(bp, rc).estimate);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rc.samples * step_count(rc.horizon, rc.h)));
  state.SetLabel(bp.problem.name + " threads=" + std::to_string(rc.threads));
}

void BM_Step(benchmark::State& state) {
  const BuiltinProblem bp = builtin_problem(kProblems[state.range(0)]);
  const auto kind = static_cast<SchemeKind>(state.range(1));
  Stepper stepper(bp.problem, kind);
  RandomStream rng(1, 0);
  std::vector<double> x = bp.x0;
  std::size_t n = 0;
  for (auto _ : state) {
    stepper.step(x, 1.0 / 64, rng);
    // Restart before the state drifts anywhere unusual.
    if (++n % 4096 == 0) x = bp.x0;
    benchmark::DoNotOptimize(x.data());
  }
  state.SetLabel(bp.problem.name + " " + std::string(to_string(kind)));
}

}  // namespace

BENCHMARK(BM_WeakErrorSerial)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeakErrorOpenMP)->ArgsProduct({{0, 1, 2, 3}, {1, 0}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Step)->ArgsProduct({{0, 1, 2, 3}, {0, 1, 2}});

BENCHMARK_MAIN();
