#include <benchmark/benchmark.h>

#include "jamnet/agents.hpp"
#include "jamnet/config.hpp"
#include "jamnet/experiment.hpp"
#include "jamnet/fading_channel.hpp"
#include "jamnet/qnet.hpp"
#include "jamnet/random.hpp"

using namespace jamnet;

namespace {

std::vector<TransitionRecord> make_batch(const NetShape& shape, RandomStream& rng, int size) {
  std::vector<TransitionRecord> batch(static_cast<std::size_t>(size));
  for (auto& r : batch) {
    r.width = shape.input;
    r.window.resize(static_cast<std::size_t>((shape.history + 1) * shape.input));
    for (auto& v : r.window) v = rng.uniform(0.0, 6.3);
    r.action = static_cast<int>(rng.index(static_cast<std::size_t>(shape.actions)));
    r.reward = rng.uniform(0.0, 8.0);
  }
  return batch;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const ScenarioConfig config;
  RandomStream rng(1, "bench");
  const auto params = QNetworkParams::random(victim_net_shape(config), rng);
  std::vector<double> history(static_cast<std::size_t>(config.history_len * config.observation_width()));
  for (auto& v : history) v = rng.uniform(0.0, 6.3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, history));
}
BENCHMARK(BM_Forward);

static void BM_TrainStep(benchmark::State& state) {
  const ScenarioConfig config;
  RandomStream rng(2, "bench");
  auto params = QNetworkParams::random(victim_net_shape(config), rng);
  const auto batch = make_batch(params.shape(), rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(train_step(params, batch, 0.9, 1e-4, 5.0));
}
BENCHMARK(BM_TrainStep)->Arg(16)->Arg(64);

static void BM_Evolve(benchmark::State& state) {
  const ScenarioConfig config;
  RandomStream rng(3, "bench");
  auto channel = init_channel(config, rng);
  for (auto _ : state) {
    evolve(channel, rng);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Evolve);

static void BM_RunSlotTraining(benchmark::State& state) {
  const ScenarioConfig config;
  RandomStream rng(4, "bench");
  World world(config, QNetworkParams::random(victim_net_shape(config), rng), "bench");
  world.set_victim_phase(VictimPhase::kTrain);
  world.set_attacker(AttackerType::kDqn, 1);
  for (int i = 0; i < 64; ++i) world.run_slot();
  for (auto _ : state) benchmark::DoNotOptimize(world.run_slot());
}
BENCHMARK(BM_RunSlotTraining);

BENCHMARK_MAIN();
