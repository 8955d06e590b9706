#include <benchmark/benchmark.h>

#include "dapo/env.hpp"
#include "dapo/mirror.hpp"
#include "dapo/trace.hpp"
#include "dapo/verification.hpp"

namespace {

dapo::Rollout make_rollout(int length, dapo::Rng& rng) {
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  dapo::Rollout rollout;
  for (int i = 0; i < length; ++i) {
    dapo::Step step;
    step.state = i % 7;
    step.action = i % 3;
    step.reward = unif(rng);
    step.behavior_prob = unif(rng);
    rollout.steps.push_back(step);
  }
  rollout.bootstrap_state = 0;
  return rollout;
}

void BM_vtrace(benchmark::State& state) {
  dapo::Rng rng(7);
  const int n = static_cast<int>(state.range(0));
  const dapo::Rollout rollout = make_rollout(n, rng);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  std::vector<double> target(n), values(n + 1);
  for (int i = 0; i < n; ++i) target[i] = unif(rng);
  for (int i = 0; i <= n; ++i) values[i] = unif(rng);
  dapo::TraceConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(dapo::vtrace_values(rollout, target, values, cfg));
}
BENCHMARK(BM_vtrace)->Arg(32)->Arg(256);

void BM_value_functions(benchmark::State& state) {
  dapo::Rng rng(11);
  const int s = static_cast<int>(state.range(0));
  const dapo::Mdp mdp = dapo::random_mdp(s, 4, 0.99, rng);
  const dapo::TabularPolicy pi = dapo::uniform_policy(s, 4);
  for (auto _ : state) benchmark::DoNotOptimize(dapo::value_functions(mdp, pi));
}
BENCHMARK(BM_value_functions)->Arg(10)->Arg(50)->Arg(200);

void BM_bregman_project(benchmark::State& state) {
  dapo::Rng rng(13);
  const int s = static_cast<int>(state.range(0));
  const dapo::Mdp mdp = dapo::random_mdp(s, 3, 0.9, rng);
  const dapo::OccupancyMeasure mu = dapo::occupancy(mdp, dapo::uniform_policy(s, 3));
  dapo::LossVector loss;
  loss.g = -mdp.reward;
  const dapo::LegendreFunction f{dapo::LegendreKind::JointNegativeEntropy};
  const dapo::MatrixXd mu_tilde = dapo::mirror_map_step(mu, loss, 0.5, f);
  for (auto _ : state) benchmark::DoNotOptimize(dapo::bregman_project(mdp, mu_tilde, f));
}
BENCHMARK(BM_bregman_project)->Arg(5)->Arg(15)->Arg(40);

}  // namespace

BENCHMARK_MAIN();
