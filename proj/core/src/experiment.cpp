#include "jamnet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "jamnet/error.hpp"

namespace jamnet {

std::string_view to_string(JamLabel label) {
  switch (label) {
    case JamLabel::kInactive: return "inactive";
    case JamLabel::kListen: return "listen";
    case JamLabel::kGreedy: return "greedy";
    case JamLabel::kExplore: return "explore";
    case JamLabel::kRandom: return "random";
    case JamLabel::kIdeal: return "ideal";
  }
  return "inactive";
}

std::string_view to_string(VictimPhase phase) {
  switch (phase) {
    case VictimPhase::kTrain: return "train";
    case VictimPhase::kFrozen: return "frozen";
    case VictimPhase::kRetrain: return "retrain";
    case VictimPhase::kEnsemble: return "ensemble";
  }
  return "frozen";
}

MetricsTrace::MetricsTrace(int num_victims, int num_channels, int num_power_levels,
                           double max_power)
    : num_victims_(num_victims), codec_(num_channels, num_power_levels, max_power) {}

void MetricsTrace::reserve(std::size_t slots) {
  const auto k = static_cast<std::size_t>(num_victims_);
  slots_.reserve(slots);
  sum_rates_.reserve(slots);
  victim_rates_.reserve(slots * k);
  victim_actions_.reserve(slots * k);
  jam_labels_.reserve(slots);
  jam_masks_.reserve(slots);
  ensemble_models_.reserve(slots);
  phases_.reserve(slots);
}

void MetricsTrace::append(const SlotRecord& record) {
  if (record.victim_actions.size() != static_cast<std::size_t>(num_victims_)) {
    throw std::invalid_argument("slot record has the wrong victim count");
  }
  slots_.push_back(record.slot);
  sum_rates_.push_back(record.sum_rate);
  victim_rates_.insert(victim_rates_.end(), record.victim_rates.begin(), record.victim_rates.end());
  victim_actions_.insert(victim_actions_.end(), record.victim_actions.begin(),
                         record.victim_actions.end());
  jam_labels_.push_back(record.jam);
  std::uint32_t mask = 0;
  for (int c : record.decision.jammed) mask |= 1u << c;
  jam_masks_.push_back(mask);
  ensemble_models_.push_back(record.ensemble_model);
  phases_.push_back(record.phase);
}

std::vector<int> MetricsTrace::jammed_channels(std::size_t i) const {
  std::vector<int> out;
  for (int c = 0; c < 32; ++c) {
    if (jam_masks_[i] & (1u << c)) out.push_back(c);
  }
  return out;
}

std::pair<std::size_t, std::size_t> MetricsTrace::index_range(std::int64_t begin_slot,
                                                              std::int64_t end_slot) const {
  const auto lo = std::lower_bound(slots_.begin(), slots_.end(), begin_slot);
  const auto hi = std::lower_bound(slots_.begin(), slots_.end(), end_slot);
  const auto b = static_cast<std::size_t>(lo - slots_.begin());
  const auto e = static_cast<std::size_t>(hi - slots_.begin());
  return {b, std::max(b, e)};
}

double MetricsTrace::mean_sum_rate(std::int64_t begin_slot, std::int64_t end_slot) const {
  const auto [b, e] = index_range(begin_slot, end_slot);
  if (b == e) return 0.0;
  double total = 0.0;
  for (std::size_t i = b; i < e; ++i) total += sum_rates_[i];
  return total / static_cast<double>(e - b);
}

double MetricsTrace::no_transmission_fraction(std::int64_t begin_slot,
                                              std::int64_t end_slot) const {
  const auto [b, e] = index_range(begin_slot, end_slot);
  if (b == e) return 0.0;
  const auto k = static_cast<std::size_t>(num_victims_);
  const auto first = victim_actions_.begin() + static_cast<std::ptrdiff_t>(b * k);
  const auto last = victim_actions_.begin() + static_cast<std::ptrdiff_t>(e * k);
  const auto silent = std::count(first, last, codec_.no_transmission());
  return static_cast<double>(silent) / static_cast<double>((e - b) * k);
}

bool MetricsTrace::operator==(const MetricsTrace& o) const {
  return num_victims_ == o.num_victims_ && slots_ == o.slots_ && sum_rates_ == o.sum_rates_ &&
         victim_rates_ == o.victim_rates_ && victim_actions_ == o.victim_actions_ &&
         jam_labels_ == o.jam_labels_ && jam_masks_ == o.jam_masks_ &&
         ensemble_models_ == o.ensemble_models_ && phases_ == o.phases_;
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (series.empty()) throw std::invalid_argument("moving average of an empty trace");
  if (window == 0) throw std::invalid_argument("moving-average window must be positive");
  std::vector<double> out(series.size());
  double running = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    running += series[i];
    if (i >= window) running -= series[i - window];
    const std::size_t n = std::min(i + 1, window);
    out[i] = running / static_cast<double>(n);
    // Resynchronize periodically to bound drift from the running sum.
    if ((i + 1) % 65536 == 0) {
      running = 0.0;
      for (std::size_t j = i + 1 - n; j <= i; ++j) running += series[j];
    }
  }
  return out;
}

Histogram empirical_pdf_cdf(std::span<const double> series, double bin_width, std::size_t from) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("histogram bin width must be positive");
  if (from >= series.size()) throw std::invalid_argument("histogram of an empty trace");
  const auto samples = series.subspan(from);
  const auto bin_of = [bin_width](double v) {
    // Nudge exact multiples that land just below the edge after division.
    const double b = std::floor(v / bin_width + 1e-9);
    return b < 0.0 ? std::size_t{0} : static_cast<std::size_t>(b);
  };
  const double max_value = *std::max_element(samples.begin(), samples.end());
  const std::size_t bins = bin_of(max_value) + 1;

  Histogram h;
  h.bin_width = bin_width;
  h.bin_lower.resize(bins);
  h.pdf.assign(bins, 0.0);
  h.cdf.assign(bins, 0.0);
  std::vector<std::uint64_t> counts(bins, 0);
  for (double v : samples) ++counts[std::min(bin_of(v), bins - 1)];
  std::uint64_t cumulative = 0;
  const auto n = static_cast<double>(samples.size());
  for (std::size_t b = 0; b < bins; ++b) {
    h.bin_lower[b] = static_cast<double>(b) * bin_width;
    h.pdf[b] = static_cast<double>(counts[b]) / n;
    cumulative += counts[b];
    h.cdf[b] = static_cast<double>(cumulative) / n;
  }
  return h;
}

namespace {

std::string stream_name(std::string_view prefix, std::string_view name) {
  return std::string(prefix) + "/" + std::string(name);
}

}  // namespace

World::World(const ScenarioConfig& config, QNetworkParams victim_params,
             std::string_view prefix)
    : config_(config),
      fading_rng_(config.seed, stream_name(prefix, "fading")),
      victim_explore_rng_(config.seed, stream_name(prefix, "victim-explore")),
      victim_replay_rng_(config.seed, stream_name(prefix, "victim-replay")),
      attacker_mode_rng_(config.seed, stream_name(prefix, "attacker-mode")),
      attacker_explore_rng_(config.seed, stream_name(prefix, "attacker-explore")),
      attacker_replay_rng_(config.seed, stream_name(prefix, "attacker-replay")),
      random_attacker_rng_(config.seed, stream_name(prefix, "random-attacker")),
      channel_(init_channel(config, fading_rng_)),
      victims_(config, std::move(victim_params)) {
  config_.validate();
}

void World::set_victim_phase(VictimPhase phase) {
  phase_ = phase;
  phase_start_ = slot_;
}

void World::set_attacker(AttackerType type, std::int64_t start_slot) {
  attacker_type_ = type;
  attack_start_ = start_slot;
  dqn_.reset();
  if (type == AttackerType::kDqn) {
    RandomStream init_rng(config_.seed, stream_name("attacker", "init"));
    dqn_.emplace(config_, init_rng);
  }
}

void World::start_ensemble(EnsembleSchedule schedule) {
  victims_.distribute(schedule.models().front());
  ensemble_.emplace(std::move(schedule));
  ensemble_start_ = slot_;
  set_victim_phase(VictimPhase::kEnsemble);
}

double World::victim_epsilon() const {
  switch (phase_) {
    case VictimPhase::kTrain:
      return EpsilonSchedule(config_.victim_eps0, config_.victim_eps1,
                             config_.victim_train_slots)
          .value(slot_ - phase_start_);
    case VictimPhase::kFrozen:
      return 0.0;
    case VictimPhase::kRetrain:
    case VictimPhase::kEnsemble:
      return config_.retrain_eps;
  }
  return 0.0;
}

SlotRecord World::run_slot() {
  SlotRecord record;
  record.slot = slot_;
  record.phase = phase_;

  if (ensemble_) {
    const std::int64_t offset = slot_ - ensemble_start_;
    if (auto model = reload_tick(*ensemble_, offset)) {
      victims_.load_all(model->get());
      live_model_ = ensemble_->model_at(offset);
    }
    record.ensemble_model = live_model_;
  }

  // (1) Decisions from slot t-1 information.
  record.victim_actions = victims_.act(victim_epsilon(), victim_explore_rng_);
  auto& decision = record.decision;
  decision.victims.reserve(record.victim_actions.size());
  for (int a : record.victim_actions) decision.victims.push_back(victims_.codec().transmission(a));

  std::optional<DqnAttacker::Choice> choice;
  const bool attacking = attacker_type_ != AttackerType::kNone && slot_ >= attack_start_;
  if (attacking) {
    const AttackerActionCodec codec(config_.num_channels, config_.jammed_channels);
    decision.jam_power = config_.jam_power;
    switch (attacker_type_) {
      case AttackerType::kRandom:
        decision.jammed = codec.decode(random_attacker(codec, random_attacker_rng_));
        record.jam = JamLabel::kRandom;
        break;
      case AttackerType::kIdeal:
        decision.jammed =
            ideal_attacker(decision.victims, config_.num_channels, config_.jammed_channels);
        record.jam = JamLabel::kIdeal;
        break;
      case AttackerType::kDqn:
        choice = dqn_->choose(slot_ - attack_start_, attacker_mode_rng_, attacker_explore_rng_);
        if (choice->action) decision.jammed = codec.decode(*choice->action);
        record.jam = choice->mode == AttackerMode::kListen       ? JamLabel::kListen
                     : choice->mode == AttackerMode::kGreedyAttack ? JamLabel::kGreedy
                                                                   : JamLabel::kExplore;
        break;
      case AttackerType::kNone:
        break;
    }
  }

  // (2) Fading evolves.
  evolve(channel_, fading_rng_);

  // (3) Rates.
  auto report = rates(channel_, decision, config_.noise_power);
  record.victim_rates = std::move(report.per_victim);
  record.sum_rate = report.sum_rate;

  // (4) Observation, replay, training.
  victims_.observe(record.victim_actions, record.victim_rates, record.sum_rate);
  switch (phase_) {
    case VictimPhase::kTrain:
      victims_.train(config_.victim_lr, victim_replay_rng_);
      break;
    case VictimPhase::kRetrain:
    case VictimPhase::kEnsemble:
      victims_.train(config_.retrain_lr, victim_replay_rng_);
      break;
    case VictimPhase::kFrozen:
      break;
  }
  if (choice) {
    std::vector<double> readings;
    if (choice->mode == AttackerMode::kListen) {
      readings = measure_interference(channel_, decision, config_.noise_power);
    }
    dqn_->observe(*choice, record.sum_rate, readings);
    dqn_->train(attacker_replay_rng_);
  }

  ++slot_;
  return record;
}

namespace {

MetricsTrace make_trace(const ScenarioConfig& c, std::int64_t expected) {
  MetricsTrace trace(c.num_victims, c.num_channels, c.num_power_levels, c.max_power);
  trace.reserve(static_cast<std::size_t>(std::max<std::int64_t>(expected, 0)));
  return trace;
}

void tick(const ProgressReporter& progress, std::string_view phase, std::int64_t slot,
          std::int64_t total) {
  if (progress.report && progress.every > 0 && slot % progress.every == 0) {
    progress.report(phase, slot, total);
  }
}

std::vector<std::optional<int>> channels_of(const TransmitDecision& d) {
  std::vector<std::optional<int>> out;
  out.reserve(d.victims.size());
  for (const auto& tx : d.victims) out.push_back(tx.channel);
  return out;
}

struct RetrainOutcome {
  SnapshotLibrary library;
  std::optional<int> collapse_interval;
};

// Frozen victims under attack until retrain_start, then central retraining
// with per-interval snapshots.
RetrainOutcome run_until_retrain_end(World& world, MetricsTrace& trace, PhaseBoundaries& phases,
                                     std::int64_t total, const ProgressReporter& progress) {
  const auto& c = world.config();
  world.set_victim_phase(VictimPhase::kFrozen);
  world.set_attacker(c.attacker, c.attack_start);
  phases.attack_start = c.attacker == AttackerType::kNone ? -1 : c.attack_start;

  while (world.slot() < c.retrain_start) {
    tick(progress, "attack", world.slot(), total);
    trace.append(world.run_slot());
  }

  phases.retrain_start = world.slot();
  world.set_victim_phase(VictimPhase::kRetrain);
  CollapseMonitor monitor({c.collapse_fraction, c.collapse_rate_floor, c.collapse_window},
                          world.victims().codec().no_transmission());

  RetrainOutcome out;
  const std::int64_t interval_len = c.snapshot_interval();
  for (int n = 0; n < c.num_snapshots; ++n) {
    TransitionMatrix matrix(c.num_channels, c.reward_bins, n);
    std::vector<std::optional<int>> prev_channels;
    double prev_sum_rate = 0.0;
    bool stop = false;
    for (std::int64_t s = 0; s < interval_len; ++s) {
      tick(progress, "retrain", world.slot(), total);
      const SlotRecord record = world.run_slot();
      trace.append(record);
      auto channels = channels_of(record.decision);
      if (s > 0) accumulate_transition(matrix, prev_channels, channels, prev_sum_rate);
      prev_channels = std::move(channels);
      prev_sum_rate = record.sum_rate;

      monitor.record(record.victim_actions, record.sum_rate);
      if (phases.collapse_slot < 0 && monitor.collapsed()) {
        phases.collapse_slot = record.slot;
        if (c.collapse_detection) {
          out.collapse_interval = n;
          stop = true;
          break;
        }
      }
    }
    if (stop) break;
    out.library.push_back({n, world.slot(), world.victims().central(), std::move(matrix)});
  }
  phases.retrain_end = world.slot();
  return out;
}

}  // namespace

BaselineResult scenario_baseline(const ScenarioConfig& config, const ProgressReporter& progress) {
  config.validate();
  RandomStream init_rng(config.seed, "baseline/victim-init");
  auto initial = QNetworkParams::random(victim_net_shape(config), init_rng, config.init_scale,
                                        config.forget_bias);
  World world(config, std::move(initial), "baseline");
  const std::int64_t total = config.victim_train_slots + config.victim_test_slots;
  BaselineResult result{world.victims().central(), make_trace(config, total), 0, 0};

  world.set_victim_phase(VictimPhase::kTrain);
  while (world.slot() < config.victim_train_slots) {
    tick(progress, "train", world.slot(), total);
    result.trace.append(world.run_slot());
  }
  result.train_end = world.slot();
  result.params = world.victims().central();
  world.set_victim_phase(VictimPhase::kFrozen);
  while (world.slot() < total) {
    tick(progress, "test", world.slot(), total);
    result.trace.append(world.run_slot());
  }
  result.end = world.slot();
  return result;
}

AttackResult scenario_attack(const ScenarioConfig& config, const QNetworkParams& victim,
                             const ProgressReporter& progress) {
  config.validate();
  World world(config, victim, "attack");
  AttackResult result{make_trace(config, config.attack_slots), {}};
  world.set_victim_phase(VictimPhase::kFrozen);
  world.set_attacker(config.attacker, config.attack_start);
  result.phases.attack_start = config.attacker == AttackerType::kNone ? -1 : config.attack_start;
  while (world.slot() < config.attack_slots) {
    tick(progress, "attack", world.slot(), config.attack_slots);
    result.trace.append(world.run_slot());
  }
  result.phases.end = world.slot();
  return result;
}

RetrainResult scenario_retrain_collapse(const ScenarioConfig& config,
                                        const QNetworkParams& victim,
                                        const ProgressReporter& progress) {
  config.validate();
  World world(config, victim, "attack");
  const std::int64_t total = config.retrain_start + config.retrain_slots;
  RetrainResult result{make_trace(config, total), {}, {}, std::nullopt};
  auto outcome = run_until_retrain_end(world, result.trace, result.phases, total, progress);
  result.library = std::move(outcome.library);
  result.collapse_interval = outcome.collapse_interval;
  result.phases.end = world.slot();
  return result;
}

EnsembleResult scenario_ensemble(const ScenarioConfig& config, const QNetworkParams& victim,
                                 const ProgressReporter& progress) {
  config.validate();
  World world(config, victim, "attack");
  const std::int64_t total = config.retrain_start + config.retrain_slots + config.ensemble_slots;
  EnsembleResult result{make_trace(config, total), {}, {}, std::nullopt, 0, {}};
  auto outcome = run_until_retrain_end(world, result.trace, result.phases, total, progress);
  result.library = std::move(outcome.library);
  result.collapse_interval = outcome.collapse_interval;

  if (result.library.empty()) {
    throw ConfigError("retraining produced no complete snapshot interval");
  }
  result.exclude_after = result.collapse_interval.value_or(result.library.back().interval);
  auto schedule = select_ensemble(result.library, config.ensemble_size, result.exclude_after,
                                  config.reload_period);
  result.selected_intervals = schedule.intervals();

  result.phases.ensemble_start = world.slot();
  world.start_ensemble(std::move(schedule));
  const std::int64_t end = world.slot() + config.ensemble_slots;
  while (world.slot() < end) {
    tick(progress, "ensemble", world.slot(), total);
    result.trace.append(world.run_slot());
  }
  result.phases.end = world.slot();
  return result;
}

}  // namespace jamnet
