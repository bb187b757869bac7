#include "jamnet/verify/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jamnet/agents.hpp"
#include "jamnet/config.hpp"
#include "jamnet/ensemble_defense.hpp"
#include "jamnet/fading_channel.hpp"
#include "jamnet/io.hpp"
#include "jamnet/qnet.hpp"
#include "jamnet/random.hpp"
#include "jamnet/verify/oracles.hpp"

namespace jamnet::verify {
namespace {

template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream out;
  out.precision(10);
  (out << ... << args);
  return out.str();
}

CheckResult fail(std::string name, std::string detail) {
  return {std::move(name), false, std::move(detail)};
}

TransitionRecord random_record(const NetShape& shape, RandomStream& rng) {
  TransitionRecord r;
  r.width = shape.input;
  r.window.resize(static_cast<std::size_t>((shape.history + 1) * shape.input));
  for (auto& v : r.window) v = rng.uniform(-2.0, 2.0);
  r.action = static_cast<int>(rng.index(static_cast<std::size_t>(shape.actions)));
  r.reward = rng.uniform(0.0, 8.0);
  return r;
}

}  // namespace

CheckResult check_jakes_fidelity(std::uint64_t seed, std::int64_t slots, int chains) {
  const char* name = "jakes-fidelity";
  ScenarioConfig config;
  const double rho = fading_correlation(config.doppler_hz, config.slot_seconds);
  double lag_num = 0.0, lag_den = 0.0, power = 0.0, samples = 0.0;
  for (int chain = 0; chain < chains; ++chain) {
    RandomStream rng(seed, cat("verify/jakes/", chain));
    ChannelState state = init_channel(config, rng);
    std::vector<ComplexGain> prev(state.gains().begin(), state.gains().end());
    for (std::int64_t t = 0; t < slots; ++t) {
      evolve(state, rng);
      const auto gains = state.gains();
      for (std::size_t i = 0; i < gains.size(); ++i) {
        lag_num += prev[i].real() * gains[i].real() + prev[i].imag() * gains[i].imag();
        lag_den += std::norm(prev[i]);
        power += std::norm(gains[i]);
        prev[i] = gains[i];
      }
      samples += static_cast<double>(gains.size());
    }
  }
  const double lag1 = lag_num / lag_den;
  const double mean_power = power / samples;
  const double expected = reference_j0(2.0 * std::acos(-1.0) * config.doppler_hz *
                                       config.slot_seconds);
  const bool ok = std::abs(lag1 - expected) <= 0.01 && std::abs(mean_power - 1.0) <= 0.02 &&
                  std::abs(rho - expected) <= 1e-12;
  return {name, ok,
          cat("lag1=", lag1, " J0=", expected, " rho=", rho, " power=", mean_power)};
}

CheckResult check_rate_oracle(std::uint64_t seed, int instances) {
  const char* name = "rate-oracle";
  RandomStream rng(seed, "verify/rates");
  double worst = 0.0;
  for (int n = 0; n < instances; ++n) {
    const int victims = 1 + static_cast<int>(rng.index(4));
    const int channels = 1 + static_cast<int>(rng.index(5));
    ChannelState state(victims, channels, 0.9);
    for (auto& g : state.gains()) g = rng.cscg() * rng.uniform(0.1, 3.0);
    TransmitDecision decision;
    for (int k = 0; k < victims; ++k) {
      VictimTransmission tx;
      if (!rng.bernoulli(0.2)) {
        tx.channel = static_cast<int>(rng.index(static_cast<std::size_t>(channels)));
        tx.power = rng.uniform(0.1, 10.0);
      }
      decision.victims.push_back(tx);
    }
    const auto jam_count = rng.index(static_cast<std::size_t>(channels) + 1);
    std::vector<int> all(static_cast<std::size_t>(channels));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng.engine());
    decision.jammed.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(jam_count));
    decision.jam_power = rng.uniform(0.0, 10.0);
    const double noise = rng.uniform(0.1, 2.0);

    const auto report = rates(state, decision, noise);
    const auto expected = reference_rates(state, decision, noise);
    double sum = 0.0;
    for (std::size_t k = 0; k < expected.size(); ++k) {
      worst = std::max(worst, std::abs(report.per_victim[k] - expected[k]));
      sum += expected[k];
    }
    worst = std::max(worst, std::abs(report.sum_rate - sum));
  }
  return {name, worst <= 1e-12, cat("instances=", instances, " max_abs_diff=", worst)};
}

CheckResult check_gradients(std::uint64_t seed, int networks) {
  const char* name = "bptt-gradient";
  const NetShape shape{5, 4, 4, 3, 3};
  double worst = 0.0;
  for (int n = 0; n < networks; ++n) {
    RandomStream rng(seed, cat("verify/gradient/", n));
    const auto params = QNetworkParams::random(shape, rng, 0.5, 1.0);
    std::vector<TransitionRecord> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(random_record(shape, rng));
    std::vector<double> targets(batch.size());
    for (auto& t : targets) t = rng.uniform(-2.0, 2.0);
    std::vector<double> analytic(params.size());
    loss_and_gradient(params, batch, targets, analytic);
    const auto numeric = numeric_gradient(params, batch, targets, 1e-5);
    for (std::size_t i = 0; i < analytic.size(); ++i)
      worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  }
  return {name, worst < 1e-4, cat("networks=", networks, " max_rel_err=", worst)};
}

CheckResult check_transition_machinery(std::uint64_t seed) {
  const char* name = "transition-machinery";
  {
    TransitionMatrix m(4, 16);
    const std::vector<std::optional<int>> hold{0, 0};
    for (int t = 1; t < 3; ++t) accumulate_transition(m, hold, hold, 2.5);
    if (m.at(0, 0, 2) != 4 || m.total() != 4)
      return fail(name, cat("hold example: counts[0,0,2]=", m.at(0, 0, 2), " total=", m.total()));
  }
  {
    TransitionMatrix m(4, 16);
    const std::vector<std::optional<int>> silent{std::nullopt, std::nullopt};
    accumulate_transition(m, silent, silent, 5.0);
    if (m.total() != 0) return fail(name, "silent victims changed the matrix");
    if (m.reward_bin(17.9) != 15) return fail(name, cat("bin(17.9)=", m.reward_bin(17.9)));
  }
  {
    TransitionMatrix a(4, 16), b(4, 16), zero(4, 16);
    a.at(1, 2, 3) = 3;
    b.at(1, 2, 3) = 2;
    if (correlation(a, b) != 6.0 || correlation(a, zero) != 0.0)
      return fail(name, cat("single-cell correlation=", correlation(a, b)));
  }
  {
    std::vector<TransitionMatrix> m(3, TransitionMatrix(2, 2));
    m[0].at(0, 0, 0) = 2;
    m[0].at(0, 1, 0) = 1;
    m[1].at(0, 0, 0) = 1;
    m[1].at(0, 1, 0) = 3;
    m[2].at(1, 1, 1) = 5;
    const auto scores = correlation_scores(m);
    const auto picked = select_lowest_correlation(m, 1);
    if (scores[0] != 5.0 || scores[1] != 5.0 || scores[2] != 0.0 || picked != std::vector<std::size_t>{2})
      return fail(name, cat("disjoint example scores=", scores[0], ",", scores[1], ",", scores[2]));
  }
  RandomStream rng(seed, "verify/transitions");
  {
    const int victims = 2;
    const std::int64_t interval = 500;
    TransitionMatrix m(4, 16);
    std::vector<std::optional<int>> prev(victims), cur(victims);
    double prev_rate = 0.0;
    for (std::int64_t t = 0; t < interval; ++t) {
      for (auto& c : cur) c = static_cast<int>(rng.index(4));
      const double rate = rng.uniform(0.0, 15.99);
      if (t > 0) accumulate_transition(m, prev, cur, prev_rate);
      prev = cur;
      prev_rate = rate;
    }
    const auto expected = static_cast<std::uint64_t>(victims * (interval - 1));
    if (m.total() != expected)
      return fail(name, cat("conservation total=", m.total(), " expected=", expected));
  }
  for (int pair = 0; pair < 100; ++pair) {
    TransitionMatrix a(4, 16), b(4, 16);
    for (auto& v : a.counts()) v = rng.index(50);
    for (auto& v : b.counts()) v = rng.index(50);
    if (correlation(a, b) != correlation(b, a))
      return fail(name, cat("asymmetric correlation on pair ", pair));
  }
  return {name, true, "examples, conservation and symmetry hold"};
}

CheckResult check_action_codecs() {
  const char* name = "action-codecs";
  const VictimActionCodec victim(4, 5, 6.3);
  if (victim.action_count() != 21) return fail(name, cat("victim actions=", victim.action_count()));
  for (int a = 0; a < victim.action_count(); ++a) {
    const auto d = victim.decode(a);
    const bool silent = a == victim.no_transmission();
    if (silent != !d.channel.has_value()) return fail(name, cat("silence mismatch at ", a));
    if (!silent && victim.encode(*d.channel, d.level) != a)
      return fail(name, cat("victim round trip failed at ", a));
  }
  const AttackerActionCodec attacker(4, 2);
  if (attacker.action_count() != 6) return fail(name, cat("attacker actions=", attacker.action_count()));
  for (int a = 0; a < attacker.action_count(); ++a) {
    if (attacker.encode(attacker.decode(a)) != a)
      return fail(name, cat("attacker round trip failed at ", a));
  }
  if (attacker.decode(0) != std::vector<int>{0, 1} || attacker.decode(5) != std::vector<int>{2, 3})
    return fail(name, "attacker subset order is not lexicographic");
  return {name, true, "victim 21 actions, attacker 6 subsets, both bijective"};
}

CheckResult check_replay_fifo() {
  const char* name = "replay-fifo";
  ReplayHistory replay(5);
  for (int i = 0; i < 12; ++i) {
    TransitionRecord r;
    r.width = 1;
    r.window = {0.0, 0.0};
    r.action = i;
    replay.push(r);
    if (replay.size() > replay.capacity()) return fail(name, "capacity exceeded");
  }
  for (std::size_t i = 0; i < replay.size(); ++i) {
    if (replay.at(i).action != static_cast<int>(7 + i))
      return fail(name, cat("slot ", i, " holds action ", replay.at(i).action));
  }
  return {name, true, "oldest-first eviction at capacity 5"};
}

CheckResult check_dueling_identity(std::uint64_t seed) {
  const char* name = "dueling-identity";
  RandomStream rng(seed, "verify/dueling");
  const NetShape shape{5, 20, 10, 21, 10};
  double worst = 0.0;
  for (int n = 0; n < 20; ++n) {
    auto params = QNetworkParams::random(shape, rng, 0.3, 1.0);
    std::vector<double> history(static_cast<std::size_t>(shape.history * shape.input));
    for (auto& v : history) v = rng.uniform(-3.0, 3.0);
    const auto out = forward_dueling(params, history);
    const double mean_adv = std::accumulate(out.advantage.begin(), out.advantage.end(), 0.0) /
                            static_cast<double>(out.advantage.size());
    for (std::size_t a = 0; a < out.q.size(); ++a)
      worst = std::max(worst, std::abs(out.q[a] - (out.value + out.advantage[a] - mean_adv)));
    const auto layout = params.layout();
    for (int a = 0; a < shape.actions; ++a) params.values()[layout.adv_out_b + static_cast<std::size_t>(a)] += 1.75;
    const auto shifted = forward(params, history);
    for (std::size_t a = 0; a < out.q.size(); ++a)
      worst = std::max(worst, std::abs(shifted[a] - out.q[a]));
  }
  return {name, worst <= 1e-12, cat("max_deviation=", worst)};
}

CheckResult check_reload_schedule() {
  const char* name = "reload-schedule";
  const NetShape shape{5, 2, 2, 3, 2};
  std::vector<QNetworkParams> models;
  std::vector<int> intervals;
  for (int i = 0; i < 8; ++i) {
    QNetworkParams p(shape);
    p.values()[0] = i;
    models.push_back(p);
    intervals.push_back(i * 3);
  }
  const EnsembleSchedule schedule(intervals, models, 720000);
  if (schedule.dwell() != 90000) return fail(name, cat("dwell=", schedule.dwell()));
  for (int i = 0; i < 16; ++i) {
    const auto loaded = reload_tick(schedule, 90000LL * i);
    if (!loaded || loaded->get().values()[0] != i % 8)
      return fail(name, cat("reload ", i, " loaded the wrong model"));
    if (reload_tick(schedule, 90000LL * i + 1)) return fail(name, "reload between dwell marks");
  }
  return {name, true, "dwell 90000, sequence 0..7 twice"};
}

CheckResult check_snapshot_round_trip(std::uint64_t seed) {
  const char* name = "snapshot-round-trip";
  RandomStream rng(seed, "verify/snapshot");
  const auto params = QNetworkParams::random(NetShape{5, 20, 10, 21, 10}, rng);
  const auto file = deserialize_params(serialize_params(params, 7, 123456));
  if (!(file.params == params) || file.interval != 7 || file.slot != 123456)
    return fail(name, "decoded snapshot differs");
  return {name, true, cat(params.size(), " parameters bit-identical")};
}

CheckResult check_jam_monotonicity(std::uint64_t seed) {
  const char* name = "jam-monotonicity";
  RandomStream rng(seed, "verify/jam");
  for (int n = 0; n < 200; ++n) {
    ChannelState state(2, 4, 0.9);
    for (auto& g : state.gains()) g = rng.cscg();
    TransmitDecision decision;
    decision.victims = {{0, 6.3}, {static_cast<int>(rng.index(4)), 3.78}};
    decision.jam_power = 6.3;
    const auto clean = rates(state, decision, 1.0);
    decision.jammed = {0};
    const auto on_channel = rates(state, decision, 1.0);
    decision.jammed = {3};
    const auto elsewhere = rates(state, decision, 1.0);
    if (on_channel.per_victim[0] > clean.per_victim[0])
      return fail(name, cat("jamming raised a victim's rate in instance ", n));
    if (*decision.victims[1].channel != 3 && elsewhere.per_victim[0] != clean.per_victim[0])
      return fail(name, cat("off-channel jamming changed a rate in instance ", n));
  }
  return {name, true, "200 instances"};
}

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  return {
      check_jakes_fidelity(seed),   check_rate_oracle(seed),
      check_gradients(seed),        check_transition_machinery(seed),
      check_action_codecs(),        check_replay_fifo(),
      check_dueling_identity(seed), check_reload_schedule(),
      check_snapshot_round_trip(seed), check_jam_monotonicity(seed),
  };
}

}  // namespace jamnet::verify
