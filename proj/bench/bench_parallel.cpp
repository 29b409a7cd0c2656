// Serial reference path against the OpenMP path: one binomial cascade over an MLP trajectory
// (stage-internal HVPs in parallel) and one meta-step over a batch of tasks.

#include <benchmark/benchmark.h>

#include "metagrad/adaptation.hpp"
#include "metagrad/estimators.hpp"
#include "metagrad/meta_train.hpp"
#include "metagrad/tasks.hpp"

namespace {

using namespace metagrad;

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

FamilyConfig sinusoid() {
  FamilyConfig cfg;
  cfg.family = TaskFamily::Sinusoid;
  return cfg;
}

void BM_BinomCascade(benchmark::State& state) {
  const FamilyConfig cfg = sinusoid();
  const auto tasks = sample_tasks(cfg, 1, 1);
  const std::size_t k_steps = 10;
  const Trajectory traj = gd_adapt(tasks[0].train, initial_parameters(cfg, 2), 0.01, k_steps);
  const Vector g = validation_gradient(*tasks[0].validation, traj);
  const auto l = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(binom_meta_gradient(traj, 0.01, g, l, false, mode(state)));
  }
  state.SetLabel(mode(state) == Execution::Serial ? "serial" : "parallel");
}
BENCHMARK(BM_BinomCascade)->ArgsProduct({{0, 1}, {2, 5}})->Unit(benchmark::kMillisecond);

void BM_BinomBatched(benchmark::State& state) {
  const FamilyConfig cfg = sinusoid();
  const auto tasks = sample_tasks(cfg, 3, 1);
  const Trajectory traj = gd_adapt(tasks[0].train, initial_parameters(cfg, 4), 0.01, 10);
  const Vector g = validation_gradient(*tasks[0].validation, traj);
  for (auto _ : state) {
    benchmark::DoNotOptimize(binom_meta_gradient_batched(traj, 0.01, g, 5, false, mode(state)));
  }
  state.SetLabel(mode(state) == Execution::Serial ? "serial" : "parallel");
}
BENCHMARK(BM_BinomBatched)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MetaStep(benchmark::State& state) {
  MetaTrainConfig cfg;
  cfg.tasks = sinusoid();
  cfg.alpha = 0.01;
  cfg.estimator.kind = EstimatorKind::Binom;
  cfg.estimator.truncation = 2;
  cfg.estimator.execution = Execution::Serial;
  cfg.execution = mode(state);
  const auto batch = sample_tasks(cfg.tasks, 5, 10);
  const Vector theta = initial_parameters(cfg.tasks, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(meta_step(theta, batch, cfg));
  }
  state.SetLabel(mode(state) == Execution::Serial ? "serial" : "parallel");
}
BENCHMARK(BM_MetaStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
