#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jamnet/agents.hpp"
#include "jamnet/config.hpp"
#include "jamnet/ensemble_defense.hpp"
#include "jamnet/fading_channel.hpp"
#include "jamnet/qnet.hpp"
#include "jamnet/random.hpp"

namespace jamnet {

// What the jammer did in a slot.
enum class JamLabel : std::uint8_t {
  kInactive,  // attacker absent or not yet activated
  kListen,
  kGreedy,
  kExplore,
  kRandom,
  kIdeal,
};

std::string_view to_string(JamLabel label);

enum class VictimPhase { kTrain, kFrozen, kRetrain, kEnsemble };

std::string_view to_string(VictimPhase phase);

struct SlotRecord {
  std::int64_t slot = 0;
  VictimPhase phase = VictimPhase::kFrozen;
  std::vector<int> victim_actions;
  TransmitDecision decision;
  std::vector<double> victim_rates;
  double sum_rate = 0.0;
  JamLabel jam = JamLabel::kInactive;
  int ensemble_model = -1;  // live ensemble model, -1 outside the ensemble phase
};

// Per-slot metrics in compact column form.
class MetricsTrace {
 public:
  MetricsTrace() = default;
  MetricsTrace(int num_victims, int num_channels, int num_power_levels, double max_power);

  void append(const SlotRecord& record);
  void reserve(std::size_t slots);

  std::size_t size() const { return sum_rates_.size(); }
  bool empty() const { return sum_rates_.empty(); }
  int num_victims() const { return num_victims_; }
  const VictimActionCodec& codec() const { return codec_; }

  std::int64_t slot(std::size_t i) const { return slots_[i]; }
  std::span<const double> sum_rates() const { return sum_rates_; }
  // Slot-major, num_victims entries per slot.
  std::span<const int> victim_actions() const { return victim_actions_; }
  std::span<const double> victim_rates() const { return victim_rates_; }
  int victim_action(std::size_t i, int k) const {
    return victim_actions_[i * static_cast<std::size_t>(num_victims_) + static_cast<std::size_t>(k)];
  }
  JamLabel jam_label(std::size_t i) const { return jam_labels_[i]; }
  std::vector<int> jammed_channels(std::size_t i) const;
  int ensemble_model(std::size_t i) const { return ensemble_models_[i]; }
  VictimPhase phase(std::size_t i) const { return phases_[i]; }

  // Mean sum rate over trace slots [begin, end) (clamped).
  double mean_sum_rate(std::int64_t begin_slot, std::int64_t end_slot) const;
  // Fraction of victim actions that are NO_TRANSMISSION over [begin, end).
  double no_transmission_fraction(std::int64_t begin_slot, std::int64_t end_slot) const;

  bool operator==(const MetricsTrace& other) const;

 private:
  std::pair<std::size_t, std::size_t> index_range(std::int64_t begin_slot,
                                                  std::int64_t end_slot) const;

  int num_victims_ = 0;
  VictimActionCodec codec_{1, 1, 1.0};
  std::vector<std::int64_t> slots_;
  std::vector<double> sum_rates_;
  std::vector<double> victim_rates_;
  std::vector<int> victim_actions_;
  std::vector<JamLabel> jam_labels_;
  std::vector<std::uint32_t> jam_masks_;
  std::vector<int> ensemble_models_;
  std::vector<VictimPhase> phases_;
};

// Trailing moving average; the first window-1 entries average the
// available prefix. Throws std::invalid_argument on an empty series.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

struct Histogram {
  double bin_width = 0.0;
  std::vector<double> bin_lower;
  std::vector<double> pdf;  // probability mass per bin
  std::vector<double> cdf;
};

// Fixed-width bins over [0, max observed] of series[from:]. Throws
// std::invalid_argument when no samples remain.
Histogram empirical_pdf_cdf(std::span<const double> series, double bin_width,
                            std::size_t from = 0);

struct ProgressReporter {
  std::function<void(std::string_view phase, std::int64_t slot, std::int64_t total)> report;
  std::int64_t every = 50000;
};

// One simulated network: channel, victims, jammer and their random
// streams, advanced one slot at a time.
class World {
 public:
  // `stream_prefix` namespaces every random stream of this world.
  World(const ScenarioConfig& config, QNetworkParams victim_params,
        std::string_view stream_prefix);

  const ScenarioConfig& config() const { return config_; }
  std::int64_t slot() const { return slot_; }
  const ChannelState& channel() const { return channel_; }
  const VictimTeam& victims() const { return victims_; }
  VictimTeam& victims() { return victims_; }
  const DqnAttacker* dqn_attacker() const { return dqn_ ? &*dqn_ : nullptr; }

  // Victim behaviour from the current slot on. kTrain decays epsilon from
  // eps0 to eps1 over T_train slots starting now.
  void set_victim_phase(VictimPhase phase);
  VictimPhase victim_phase() const { return phase_; }

  // The jammer acts from `start_slot` on.
  void set_attacker(AttackerType type, std::int64_t start_slot);

  // Starts reload cycling through `schedule` at the current slot; victims
  // switch to local copies.
  void start_ensemble(EnsembleSchedule schedule);

  // Advances one slot: every agent acts on slot t-1 information, the
  // channel evolves, rates are computed, agents observe and train.
  SlotRecord run_slot();

 private:
  double victim_epsilon() const;

  ScenarioConfig config_;
  RandomStream fading_rng_;
  RandomStream victim_explore_rng_;
  RandomStream victim_replay_rng_;
  RandomStream attacker_mode_rng_;
  RandomStream attacker_explore_rng_;
  RandomStream attacker_replay_rng_;
  RandomStream random_attacker_rng_;
  ChannelState channel_;
  VictimTeam victims_;
  VictimPhase phase_ = VictimPhase::kFrozen;
  std::int64_t phase_start_ = 0;
  AttackerType attacker_type_ = AttackerType::kNone;
  std::int64_t attack_start_ = 0;
  std::optional<DqnAttacker> dqn_;
  std::optional<EnsembleSchedule> ensemble_;
  std::int64_t ensemble_start_ = 0;
  int live_model_ = -1;
  std::int64_t slot_ = 0;
};

struct PhaseBoundaries {
  std::int64_t attack_start = -1;
  std::int64_t retrain_start = -1;
  std::int64_t retrain_end = -1;
  std::int64_t ensemble_start = -1;
  std::int64_t collapse_slot = -1;  // first slot the collapse monitor fired
  std::int64_t end = 0;
};

struct BaselineResult {
  QNetworkParams params;  // victim network at the end of training
  MetricsTrace trace;
  std::int64_t train_end = 0;
  std::int64_t end = 0;
};

struct AttackResult {
  MetricsTrace trace;
  PhaseBoundaries phases;
};

struct RetrainResult {
  MetricsTrace trace;
  PhaseBoundaries phases;
  SnapshotLibrary library;
  std::optional<int> collapse_interval;
};

struct EnsembleResult {
  MetricsTrace trace;
  PhaseBoundaries phases;
  SnapshotLibrary library;
  std::optional<int> collapse_interval;
  int exclude_after = 0;
  std::vector<int> selected_intervals;
};

// Trains victims from scratch for T_train slots with linearly decaying
// epsilon, then tests the frozen greedy policy for T_test slots.
BaselineResult scenario_baseline(const ScenarioConfig& config,
                                 const ProgressReporter& progress = {});

// Frozen victims; the configured attacker activates at attack_start; runs
// attack_slots slots.
AttackResult scenario_attack(const ScenarioConfig& config, const QNetworkParams& victim,
                             const ProgressReporter& progress = {});

// As scenario_attack until retrain_start, then central retraining under
// attack for T_retrain slots (or until collapse when detection is on),
// saving one snapshot and transition matrix per interval.
RetrainResult scenario_retrain_collapse(const ScenarioConfig& config,
                                        const QNetworkParams& victim,
                                        const ProgressReporter& progress = {});

// Retraining, then minimum-correlation selection, then ensemble_slots of
// reload cycling with continued local training.
EnsembleResult scenario_ensemble(const ScenarioConfig& config, const QNetworkParams& victim,
                                 const ProgressReporter& progress = {});

}  // namespace jamnet
