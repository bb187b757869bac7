#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jamnet {

enum class AttackerType { kNone, kRandom, kIdeal, kDqn };

std::string_view to_string(AttackerType type);
AttackerType parse_attacker_type(std::string_view text);

// Every parameter that influences a run. Defaults are the full-scale
// values; desk_preset() divides all durations by ten.
struct ScenarioConfig {
  // Channel.
  double doppler_hz = 0.2;        // f_d
  double slot_seconds = 0.02;     // T
  double noise_power = 1.0;       // sigma^2
  int num_victims = 2;            // K
  int num_channels = 4;           // N_c
  double max_power = 6.3;         // P_max, watts
  int num_power_levels = 5;       // N_p

  // Victim network and training.
  double gamma = 0.9;
  double victim_lr = 0.04;
  int lstm_hidden = 20;
  int duel_hidden = 10;
  double victim_eps0 = 1.0;
  double victim_eps1 = 0.1;
  std::int64_t victim_train_slots = 500000;
  std::int64_t victim_test_slots = 200000;

  // Attacker.
  int jammed_channels = 2;        // K_a
  double listen_eps0 = 0.25;
  double listen_eps1 = 0.025;
  double attacker_lr = 0.2;
  double attacker_eps0 = 1.0;
  double attacker_eps1 = 0.1;
  std::int64_t attacker_train_slots = 20000;
  double jam_power = 6.3;

  // Retraining and ensemble.
  double retrain_lr = 0.4;
  double retrain_eps = 0.05;
  std::int64_t retrain_slots = 1450000;
  int num_snapshots = 72;         // N_s
  int ensemble_size = 8;          // N_e
  std::int64_t reload_period = 720000;
  std::int64_t ensemble_slots = 2160000;

  // Implementation defaults.
  int history_len = 10;           // N
  int replay_capacity = 10000;    // B
  int minibatch = 16;             // m
  int reward_bins = 16;
  double collapse_fraction = 0.5; // theta
  double collapse_rate_floor = 1.0;  // phi
  std::int64_t collapse_window = 20000;  // W
  bool collapse_detection = true;
  std::int64_t ma_window = 1000;
  double hist_bin_width = 0.1;
  double grad_clip = 5.0;
  double init_scale = 0.1;
  double forget_bias = 1.0;

  // Run control.
  std::uint64_t seed = 1;
  AttackerType attacker = AttackerType::kDqn;
  std::int64_t attack_start = 50000;
  std::int64_t attack_slots = 200000;    // length of an attack-only run
  std::int64_t retrain_start = 100000;

  // Throws ConfigError naming the offending key.
  void validate() const;

  // Snapshot interval length T_retrain / N_s (remainder discarded).
  std::int64_t snapshot_interval() const { return retrain_slots / num_snapshots; }
  int victim_action_count() const { return num_channels * num_power_levels + 1; }
  int observation_width() const { return 1 + num_channels; }
};

ScenarioConfig desk_preset();

// Parses `key = value` lines ('#' starts a comment). Unknown keys and bad
// values raise ConfigError with the key and line number. `overrides` are
// applied after the file, in order, as `key=value` strings.
ScenarioConfig parse_config(std::string_view text,
                            const std::vector<std::string>& overrides = {},
                            ScenarioConfig base = {});
ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {},
                           ScenarioConfig base = {});

// Sets one key; throws ConfigError on unknown key or unparsable value.
void set_config_value(ScenarioConfig& config, std::string_view key,
                      std::string_view value);

// Ordered (key, value) pairs covering every field; parse_config of the
// rendered text reproduces the config exactly.
std::vector<std::pair<std::string, std::string>> config_entries(
    const ScenarioConfig& config);
std::string render_config(const ScenarioConfig& config);

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

}  // namespace jamnet
