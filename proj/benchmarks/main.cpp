#include "behc/capacity.hpp"
#include "behc/model.hpp"
#include "behc/program.hpp"
#include "behc/solver.hpp"

#include <benchmark/benchmark.h>

namespace {

void bm_build_program(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const behc::HarvestParam h = behc::make_harvest(0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(behc::build_program(behc::GraphKind::LowerBound, n, h));
  }
}
BENCHMARK(bm_build_program)->Arg(5)->Arg(20)->Arg(60);

void bm_objective(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const behc::ConvexProgram prog =
      behc::build_program(behc::GraphKind::LowerBound, n, behc::make_harvest(0.5));
  const Eigen::VectorXd v =
      behc::policy_to_joint(prog, behc::uniform_policy(behc::GraphKind::LowerBound, n, 0.5));
  for (auto _ : state) {
    benchmark::DoNotOptimize(behc::objective(prog, v));
  }
}
BENCHMARK(bm_objective)->Arg(5)->Arg(20)->Arg(60);

void bm_policy_to_joint(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const behc::ConvexProgram prog =
      behc::build_program(behc::GraphKind::LowerBound, n, behc::make_harvest(0.5));
  const behc::Policy pol = behc::uniform_policy(behc::GraphKind::LowerBound, n, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(behc::policy_to_joint(prog, pol));
  }
}
BENCHMARK(bm_policy_to_joint)->Arg(5)->Arg(20);

void bm_maximize(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const behc::ConvexProgram prog =
      behc::build_program(behc::GraphKind::LowerBound, n, behc::make_harvest(0.5));
  for (auto _ : state) {
    benchmark::DoNotOptimize(behc::maximize(prog));
  }
}
BENCHMARK(bm_maximize)->Arg(3)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
