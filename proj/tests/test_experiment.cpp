#include <cmath>

#include "doctest.h"
#include "jamnet/experiment.hpp"
#include "jamnet/random.hpp"

using namespace jamnet;

namespace {

ScenarioConfig tiny() {
  ScenarioConfig c;
  c.victim_train_slots = 300;
  c.victim_test_slots = 200;
  c.attacker_train_slots = 100;
  c.attack_start = 100;
  c.attack_slots = 400;
  c.retrain_start = 200;
  c.retrain_slots = 400;
  c.num_snapshots = 4;
  c.ensemble_size = 2;
  c.reload_period = 200;
  c.ensemble_slots = 400;
  c.collapse_window = 100;
  c.validate();
  return c;
}

QNetworkParams fresh_victim(const ScenarioConfig& c) {
  RandomStream rng(c.seed, "test/victim");
  return QNetworkParams::random(victim_net_shape(c), rng, c.init_scale, c.forget_bias);
}

}  // namespace

TEST_CASE("moving average") {
  const std::vector<double> constant(50, 3.5);
  for (double v : moving_average(constant, 10)) CHECK(v == doctest::Approx(3.5));
  const std::vector<double> raw{1.0, 4.0, 2.0, 8.0};
  CHECK(moving_average(raw, 1) == raw);
  const auto ma = moving_average(raw, 2);
  CHECK(ma == std::vector<double>{1.0, 2.5, 3.0, 5.0});
  CHECK_THROWS_AS(moving_average(std::vector<double>{}, 3), std::invalid_argument);
}

TEST_CASE("empirical pdf and cdf of a two-value trace") {
  std::vector<double> trace(500, 2.0);
  trace.insert(trace.end(), 500, 4.0);
  const auto h = empirical_pdf_cdf(trace, 0.1);
  REQUIRE(h.pdf.size() == 41);
  CHECK(h.pdf[20] == doctest::Approx(0.5));
  CHECK(h.pdf[40] == doctest::Approx(0.5));
  CHECK(h.cdf[19] == 0.0);
  CHECK(h.cdf[20] == doctest::Approx(0.5));
  CHECK(h.cdf[39] == doctest::Approx(0.5));
  CHECK(h.cdf.back() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(h.bin_lower[20] == doctest::Approx(2.0));

  const std::vector<double> constant(100, 3.0);
  const auto step = empirical_pdf_cdf(constant, 0.1);
  CHECK(step.cdf[29] == 0.0);
  CHECK(step.cdf[30] == doctest::Approx(1.0));
  CHECK_THROWS_AS(empirical_pdf_cdf(trace, 0.1, 1000), std::invalid_argument);
}

TEST_CASE("recorded sum rate matches the logged decision and channel") {
  auto c = tiny();
  World world(c, fresh_victim(c), "test");
  world.set_victim_phase(VictimPhase::kTrain);
  world.set_attacker(AttackerType::kDqn, 20);
  for (int t = 0; t < 200; ++t) {
    const auto rec = world.run_slot();
    const auto again = rates(world.channel(), rec.decision, c.noise_power);
    CHECK(rec.sum_rate == again.sum_rate);
    CHECK(rec.victim_rates == again.per_victim);
    if (rec.jam == JamLabel::kListen) CHECK(rec.decision.jammed.empty());
    if (t < 20) CHECK(rec.jam == JamLabel::kInactive);
  }
}

TEST_CASE("identical seeds replay bit-identically") {
  auto c = tiny();
  World a(c, fresh_victim(c), "test"), b(c, fresh_victim(c), "test");
  for (World* w : {&a, &b}) {
    w->set_victim_phase(VictimPhase::kTrain);
    w->set_attacker(AttackerType::kDqn, 10);
  }
  for (int t = 0; t < 100; ++t) {
    const auto ra = a.run_slot(), rb = b.run_slot();
    CHECK(ra.sum_rate == rb.sum_rate);
    CHECK(ra.victim_actions == rb.victim_actions);
    CHECK(ra.decision.jammed == rb.decision.jammed);
  }
  CHECK(a.victims().central() == b.victims().central());
}

TEST_CASE("attacker choice does not shift the fading realization") {
  auto c = tiny();
  World a(c, fresh_victim(c), "test"), b(c, fresh_victim(c), "test");
  a.set_attacker(AttackerType::kNone, 1);
  b.set_attacker(AttackerType::kRandom, 1);
  for (int t = 0; t < 50; ++t) {
    a.run_slot();
    b.run_slot();
  }
  CHECK(std::equal(a.channel().gains().begin(), a.channel().gains().end(),
                   b.channel().gains().begin()));
}

TEST_CASE("baseline trains then freezes") {
  const auto c = tiny();
  const auto r = scenario_baseline(c);
  CHECK(r.trace.size() == 500);
  CHECK(r.train_end == 300);
  CHECK(r.trace.phase(299) == VictimPhase::kTrain);
  CHECK(r.trace.phase(300) == VictimPhase::kFrozen);
  for (std::size_t i = 0; i < r.trace.size(); ++i) CHECK(r.trace.jam_label(i) == JamLabel::kInactive);
  CHECK(r.params.all_finite());
  CHECK(scenario_baseline(c).trace == r.trace);
}

TEST_CASE("frozen victims never update") {
  auto c = tiny();
  const auto victim = fresh_victim(c);
  World world(c, victim, "test");
  world.set_victim_phase(VictimPhase::kFrozen);
  world.set_attacker(AttackerType::kDqn, 5);
  for (int t = 0; t < 100; ++t) world.run_slot();
  CHECK(world.victims().central() == victim);
}

TEST_CASE("attack scenario respects the activation slot") {
  const auto c = tiny();
  const auto victim = fresh_victim(c);
  for (auto type : {AttackerType::kRandom, AttackerType::kIdeal, AttackerType::kDqn}) {
    auto cfg = c;
    cfg.attacker = type;
    const auto r = scenario_attack(cfg, victim);
    CHECK(r.trace.size() == 400);
    CHECK(r.phases.attack_start == 100);
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      if (i < 100) {
        CHECK(r.trace.jam_label(i) == JamLabel::kInactive);
        CHECK(r.trace.jammed_channels(i).empty());
      } else {
        CHECK(r.trace.jam_label(i) != JamLabel::kInactive);
      }
    }
  }
}

TEST_CASE("ideal attacker jams the victims' channels") {
  auto c = tiny();
  c.attacker = AttackerType::kIdeal;
  const auto r = scenario_attack(c, fresh_victim(c));
  for (std::size_t i = 100; i < r.trace.size(); ++i) {
    const auto jammed = r.trace.jammed_channels(i);
    for (int k = 0; k < 2; ++k) {
      const auto d = r.trace.codec().decode(r.trace.victim_action(i, k));
      if (d.channel) CHECK(std::find(jammed.begin(), jammed.end(), *d.channel) != jammed.end());
    }
  }
}

TEST_CASE("retraining collects one snapshot per interval") {
  auto c = tiny();
  c.collapse_detection = false;
  const auto r = scenario_retrain_collapse(c, fresh_victim(c));
  CHECK(r.library.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(r.library[i].interval == i);
    CHECK(r.library[i].slot == 200 + 100 * (i + 1));
    CHECK(r.library[i].matrix.total() <= 2u * 99u);
  }
  CHECK(r.phases.retrain_start == 200);
  CHECK(r.phases.retrain_end == 600);
  CHECK(r.trace.size() == 600);
  CHECK(r.trace.phase(199) == VictimPhase::kFrozen);
  CHECK(r.trace.phase(200) == VictimPhase::kRetrain);
}

TEST_CASE("ensemble phase reloads only inside the phase") {
  const auto c = tiny();
  const auto r = scenario_ensemble(c, fresh_victim(c));
  REQUIRE(r.phases.ensemble_start > 0);
  CHECK(r.selected_intervals.size() == 2);
  CHECK(r.phases.end == r.phases.ensemble_start + 400);
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const auto slot = r.trace.slot(i);
    if (slot < r.phases.ensemble_start) {
      CHECK(r.trace.ensemble_model(i) == -1);
    } else {
      const auto offset = slot - r.phases.ensemble_start;
      CHECK(r.trace.ensemble_model(i) == static_cast<int>((offset / 100) % 2));
      CHECK(r.trace.phase(i) == VictimPhase::kEnsemble);
    }
  }
  CHECK(scenario_ensemble(c, fresh_victim(c)).trace == r.trace);
}

TEST_CASE("trace statistics") {
  MetricsTrace t(2, 4, 5, 6.3);
  for (int s = 0; s < 10; ++s) {
    SlotRecord rec;
    rec.slot = s;
    rec.victim_actions = {s < 5 ? 20 : 3, 20};
    rec.decision.victims = {{}, {}};
    rec.victim_rates = {0.0, 0.0};
    rec.sum_rate = s;
    t.append(rec);
  }
  CHECK(t.mean_sum_rate(0, 10) == doctest::Approx(4.5));
  CHECK(t.mean_sum_rate(5, 10) == doctest::Approx(7.0));
  CHECK(t.no_transmission_fraction(0, 10) == doctest::Approx(0.75));
  CHECK(t.no_transmission_fraction(5, 10) == doctest::Approx(0.5));
}
