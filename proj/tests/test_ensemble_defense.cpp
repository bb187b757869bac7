#include "doctest.h"
#include "jamnet/ensemble_defense.hpp"
#include "jamnet/error.hpp"
#include "jamnet/random.hpp"

using namespace jamnet;

namespace {

using Channels = std::vector<std::optional<int>>;

Snapshot snapshot_with(int interval, const TransitionMatrix& m) {
  QNetworkParams p(NetShape{5, 2, 2, 21, 2});
  p.values()[0] = interval;
  TransitionMatrix copy = m;
  copy.set_interval(interval);
  return Snapshot{interval, 0, p, copy};
}

}  // namespace

TEST_CASE("two victims holding one channel") {
  TransitionMatrix m(4, 16);
  const Channels hold{0, 0};
  accumulate_transition(m, hold, hold, 2.5);
  accumulate_transition(m, hold, hold, 2.5);
  CHECK(m.at(0, 0, 2) == 4);
  CHECK(m.total() == 4);
}

TEST_CASE("silent victims contribute nothing") {
  TransitionMatrix m(4, 16);
  accumulate_transition(m, Channels{std::nullopt, 1}, Channels{2, std::nullopt}, 3.0);
  CHECK(m.total() == 0);
  accumulate_transition(m, Channels{std::nullopt, 1}, Channels{2, 3}, 3.0);
  CHECK(m.at(1, 3, 3) == 1);
  CHECK(m.total() == 1);
}

TEST_CASE("reward bins") {
  const TransitionMatrix m(4, 16);
  CHECK(m.reward_bin(17.9) == 15);
  CHECK(m.reward_bin(0.0) == 0);
  CHECK(m.reward_bin(0.99) == 0);
  CHECK(m.reward_bin(1.0) == 1);
  CHECK(m.reward_bin(8.5) == 8);
}

TEST_CASE("correlation") {
  TransitionMatrix a(4, 16), b(4, 16), zero(4, 16);
  a.at(2, 1, 5) = 3;
  b.at(2, 1, 5) = 2;
  CHECK(correlation(a, b) == 6.0);
  CHECK(correlation(a, zero) == 0.0);
  CHECK_THROWS_AS(correlation(a, TransitionMatrix(3, 16)), std::invalid_argument);

  RandomStream rng(1, "corr");
  for (int i = 0; i < 100; ++i) {
    TransitionMatrix x(4, 16), y(4, 16);
    for (auto& v : x.counts()) v = rng.index(20);
    for (auto& v : y.counts()) v = rng.index(20);
    CHECK(correlation(x, y) == correlation(y, x));
    TransitionMatrix x2 = x;
    for (auto& v : x2.counts()) v *= 2;
    CHECK(correlation(x2, y) == 2.0 * correlation(x, y));
  }
}

TEST_CASE("count conservation on an always-transmitting trace") {
  RandomStream rng(2, "conserve");
  const int interval = 300;
  TransitionMatrix m(4, 16);
  Channels prev(2), cur(2);
  double prev_rate = 0.0;
  for (int t = 0; t < interval; ++t) {
    for (auto& c : cur) c = static_cast<int>(rng.index(4));
    if (t > 0) accumulate_transition(m, prev, cur, prev_rate);
    prev = cur;
    prev_rate = rng.uniform(0.0, 16.0);
  }
  CHECK(m.total() == 2 * (interval - 1));
}

TEST_CASE("disjoint support is selected first") {
  std::vector<TransitionMatrix> m(3, TransitionMatrix(4, 16));
  m[0].at(0, 0, 8) = 5;
  m[0].at(0, 1, 8) = 1;
  m[1].at(0, 0, 8) = 2;
  m[1].at(1, 1, 7) = 4;
  m[2].at(3, 3, 2) = 9;
  const auto scores = correlation_scores(m);
  CHECK(scores == std::vector<double>{10.0, 10.0, 0.0});
  CHECK(select_lowest_correlation(m, 1) == std::vector<std::size_t>{2});
  CHECK(select_lowest_correlation(m, 2) == std::vector<std::size_t>{0, 2});
  CHECK(select_lowest_correlation(m, 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(select_lowest_correlation(m, 4), ConfigError);

  const auto table = correlation_table(m);
  CHECK(table[0 * 3 + 1] == 10.0);
  CHECK(table[1 * 3 + 0] == 10.0);
  CHECK(table[2 * 3 + 0] == 0.0);
}

TEST_CASE("identical matrices tie to the earliest intervals") {
  TransitionMatrix u(4, 16);
  for (auto& v : u.counts()) v = 1;
  const std::vector<TransitionMatrix> m(6, u);
  CHECK(select_lowest_correlation(m, 3) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("selection is invariant under scaling every matrix") {
  RandomStream rng(3, "scale");
  std::vector<TransitionMatrix> m(10, TransitionMatrix(4, 16));
  for (auto& x : m)
    for (auto& v : x.counts()) v = rng.index(30);
  auto scaled = m;
  for (auto& x : scaled)
    for (auto& v : x.counts()) v *= 7;
  CHECK(select_lowest_correlation(m, 4) == select_lowest_correlation(scaled, 4));
}

TEST_CASE("select_ensemble honours exclude_after") {
  SnapshotLibrary library;
  for (int i = 0; i < 6; ++i) {
    TransitionMatrix m(4, 16);
    m.at(i % 4, i % 4, 3) = 10;
    library.push_back(snapshot_with(i, m));
  }
  // Intervals 0 and 4 share support, as do 1 and 5.
  const auto schedule = select_ensemble(library, 2, 3, 8000);
  CHECK(schedule.intervals() == std::vector<int>{0, 1});
  CHECK(schedule.models()[1].values()[0] == 1.0);
  CHECK(schedule.dwell() == 4000);
  CHECK_THROWS_AS(select_ensemble(library, 5, 3, 8000), ConfigError);
}

TEST_CASE("reload ticks cycle the selected models") {
  std::vector<QNetworkParams> models;
  for (int i = 0; i < 8; ++i) {
    QNetworkParams p(NetShape{5, 2, 2, 21, 2});
    p.values()[0] = i;
    models.push_back(p);
  }
  const EnsembleSchedule schedule({0, 1, 2, 3, 4, 5, 6, 7}, models, 720000);
  CHECK(schedule.dwell() == 90000);
  CHECK(reload_tick(schedule, 0)->get().values()[0] == 0.0);
  for (int i = 0; i < 16; ++i) {
    CHECK(schedule.model_at(90000LL * i) == i % 8);
    CHECK(reload_tick(schedule, 90000LL * i)->get().values()[0] == i % 8);
    CHECK(schedule.model_at(90000LL * i + 89999) == i % 8);
  }
  CHECK_FALSE(reload_tick(schedule, 45000).has_value());
}

TEST_CASE("collapse detection") {
  const CollapseThresholds th{0.5, 1.0, 100};
  const int silent = 20;
  std::vector<int> actions(200, 4);
  std::vector<double> rates(100, 8.5);
  CHECK_FALSE(detect_collapse(actions, rates, 2, silent, th));

  std::fill(actions.begin(), actions.end(), silent);
  CHECK(detect_collapse(actions, rates, 2, silent, th));

  std::fill(actions.begin(), actions.end(), 4);
  for (int i = 0; i < 102; ++i) actions[static_cast<std::size_t>(i)] = silent;
  CHECK(detect_collapse(actions, rates, 2, silent, th));
  actions[101] = 4;
  actions[100] = 4;
  CHECK_FALSE(detect_collapse(actions, rates, 2, silent, th));

  std::fill(actions.begin(), actions.end(), 4);
  std::fill(rates.begin(), rates.end(), 0.9);
  CHECK(detect_collapse(actions, rates, 2, silent, th));

  const std::vector<double> short_rates(50, 0.0);
  const std::vector<int> short_actions(100, silent);
  CHECK_FALSE(detect_collapse(short_actions, short_rates, 2, silent, th));
}

TEST_CASE("collapse monitor matches the batch rule") {
  const CollapseThresholds th{0.5, 1.0, 50};
  CollapseMonitor monitor(th, 20);
  RandomStream rng(4, "monitor");
  std::vector<int> actions;
  std::vector<double> rates;
  for (int t = 0; t < 400; ++t) {
    const double p_silent = t < 200 ? 0.2 : 0.8;
    const int slot[2] = {rng.bernoulli(p_silent) ? 20 : 3, rng.bernoulli(p_silent) ? 20 : 7};
    const double r = rng.uniform(0.0, 4.0);
    monitor.record(slot, r);
    actions.insert(actions.end(), slot, slot + 2);
    rates.push_back(r);
    CHECK(monitor.collapsed() == detect_collapse(actions, rates, 2, 20, th));
  }
}
