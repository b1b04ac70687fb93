#include <benchmark/benchmark.h>

#include "evcc/analytics.hpp"
#include "evcc/mdp.hpp"
#include "evcc/simulation.hpp"
#include "evcc/traffic.hpp"

namespace {

evcc::DiscreteChain benchmark_chain(int tasks, int vehicles, int slots) {
  evcc::DiscreteChain chain;
  chain.task_count = tasks;
  chain.vehicle_count = vehicles;
  const double mu_delta = evcc::kMaxSlotEventProbability / (vehicles + double(tasks) * vehicles * 5);
  chain.params = {vehicles * mu_delta, 5 * mu_delta, slots};
  return chain;
}

void BM_ValueIteration(benchmark::State& state) {
  const auto chain = benchmark_chain(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 20);
  for (auto _ : state) benchmark::DoNotOptimize(evcc::value_iteration(chain).initial_value());
  state.counters["states"] = static_cast<double>(evcc::state_space_entries(chain));
}
BENCHMARK(BM_ValueIteration)->Args({2, 20})->Args({3, 10})->Args({4, 6})->Unit(benchmark::kMillisecond);

void BM_ContinuousEpisode(benchmark::State& state) {
  const auto model = evcc::SpeedDensityModel::linear(100, 140);
  evcc::SystemConfig base;
  base.road_length = 10;
  base.task_count = 50;
  base.deadline = 80;
  base.rsu_count = 10;
  const auto cfg = evcc::config_at_density(model, base, static_cast<double>(state.range(0)));
  const evcc::PolicyKind policy = evcc::BetaPolicy{};
  std::uint64_t i = 0;
  for (auto _ : state) {
    auto rng = evcc::episode_engine(1, i++);
    benchmark::DoNotOptimize(evcc::simulate_episode_continuous(cfg, policy, rng).violation_ratio());
  }
}
BENCHMARK(BM_ContinuousEpisode)->Arg(30)->Arg(60)->Arg(120);

void BM_DiscreteEpisode(benchmark::State& state) {
  const auto chain = benchmark_chain(2, 20, 20);
  const evcc::PolicyKind policy = evcc::BetaPolicy{};
  std::uint64_t i = 0;
  for (auto _ : state) {
    auto rng = evcc::episode_engine(1, i++);
    benchmark::DoNotOptimize(evcc::simulate_episode_discrete(chain, policy, rng).violation_ratio());
  }
}
BENCHMARK(BM_DiscreteEpisode);

void BM_ViolationBound(benchmark::State& state) {
  evcc::BoundInputs in{12.0, {0.0015873, 0.015873}, 80.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(evcc::violation_bound(in));
    in.deadline += 1e-9;
  }
}
BENCHMARK(BM_ViolationBound);

void BM_OptimalDensityM27(benchmark::State& state) {
  const auto model = evcc::SpeedDensityModel::m27();
  for (auto _ : state) benchmark::DoNotOptimize(evcc::evcc_optimal_density(model));
}
BENCHMARK(BM_OptimalDensityM27);

}  // namespace

BENCHMARK_MAIN();
