#include <benchmark/benchmark.h>

#include "biot_iga/harness.hpp"

namespace {

using namespace biot;

const MixedDegrees kDegrees{2, 1, 3, 1};

void BM_AssembleBlocks(benchmark::State& state) {
  const GeometryMap geo = unit_square();
  const auto sp = spaces_for_mesh(geo, static_cast<int>(state.range(0)), kDegrees, false);
  const MaterialParams params = default_params(TestId::Test5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_blocks(sp, geo, params));
  }
  state.counters["dofs"] = sp.V.size() + sp.M.size() + sp.W.size() + sp.Q.size();
}
BENCHMARK(BM_AssembleBlocks)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

// One backward Euler step with a fresh factorization, then one that reuses it.
void BM_StepFactorize(benchmark::State& state) {
  const GeometryMap geo = unit_square();
  const auto sp = spaces_for_mesh(geo, static_cast<int>(state.range(0)), kDegrees, false);
  const MaterialParams params = default_params(TestId::Test5);
  const auto ms = builtin_solution(TestId::Test5, params);
  BiotStepper stepper(sp, geo, params, manufactured_problem(ms, geo));
  const BiotState s0 = stepper.initial_state();
  for (auto _ : state) {
    stepper.clear_factorizations();
    benchmark::DoNotOptimize(stepper.backward_euler_step(s0, 0.125));
  }
}
BENCHMARK(BM_StepFactorize)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_StepReuse(benchmark::State& state) {
  const GeometryMap geo = unit_square();
  const auto sp = spaces_for_mesh(geo, static_cast<int>(state.range(0)), kDegrees, false);
  const MaterialParams params = default_params(TestId::Test5);
  const auto ms = builtin_solution(TestId::Test5, params);
  BiotStepper stepper(sp, geo, params, manufactured_problem(ms, geo));
  const BiotState s0 = stepper.initial_state();
  stepper.backward_euler_step(s0, 0.125);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stepper.backward_euler_step(s0, 0.125));
  }
}
BENCHMARK(BM_StepReuse)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
