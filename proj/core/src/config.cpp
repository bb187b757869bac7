#include "jamnet/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "jamnet/error.hpp"

namespace jamnet {

namespace {

using Field = std::variant<double ScenarioConfig::*, int ScenarioConfig::*,
                           std::int64_t ScenarioConfig::*,
                           std::uint64_t ScenarioConfig::*,
                           bool ScenarioConfig::*,
                           AttackerType ScenarioConfig::*>;

struct KeySpec {
  std::string_view key;
  Field field;
};

// Order here is the order of the rendered config and manifest.
const std::array kKeys = {
    KeySpec{"f_d", &ScenarioConfig::doppler_hz},
    KeySpec{"T", &ScenarioConfig::slot_seconds},
    KeySpec{"sigma2", &ScenarioConfig::noise_power},
    KeySpec{"K", &ScenarioConfig::num_victims},
    KeySpec{"N_c", &ScenarioConfig::num_channels},
    KeySpec{"P_max", &ScenarioConfig::max_power},
    KeySpec{"N_p", &ScenarioConfig::num_power_levels},
    KeySpec{"gamma", &ScenarioConfig::gamma},
    KeySpec{"victim_lr", &ScenarioConfig::victim_lr},
    KeySpec{"lstm_hidden", &ScenarioConfig::lstm_hidden},
    KeySpec{"duel_hidden", &ScenarioConfig::duel_hidden},
    KeySpec{"eps0", &ScenarioConfig::victim_eps0},
    KeySpec{"eps1", &ScenarioConfig::victim_eps1},
    KeySpec{"T_train", &ScenarioConfig::victim_train_slots},
    KeySpec{"T_test", &ScenarioConfig::victim_test_slots},
    KeySpec{"K_a", &ScenarioConfig::jammed_channels},
    KeySpec{"eps_l0", &ScenarioConfig::listen_eps0},
    KeySpec{"eps_l1", &ScenarioConfig::listen_eps1},
    KeySpec{"attacker_lr", &ScenarioConfig::attacker_lr},
    KeySpec{"attacker_eps0", &ScenarioConfig::attacker_eps0},
    KeySpec{"attacker_eps1", &ScenarioConfig::attacker_eps1},
    KeySpec{"attacker_T_train", &ScenarioConfig::attacker_train_slots},
    KeySpec{"jam_power", &ScenarioConfig::jam_power},
    KeySpec{"retrain_lr", &ScenarioConfig::retrain_lr},
    KeySpec{"retrain_eps", &ScenarioConfig::retrain_eps},
    KeySpec{"T_retrain", &ScenarioConfig::retrain_slots},
    KeySpec{"N_s", &ScenarioConfig::num_snapshots},
    KeySpec{"N_e", &ScenarioConfig::ensemble_size},
    KeySpec{"T_reload", &ScenarioConfig::reload_period},
    KeySpec{"ensemble_slots", &ScenarioConfig::ensemble_slots},
    KeySpec{"N", &ScenarioConfig::history_len},
    KeySpec{"B", &ScenarioConfig::replay_capacity},
    KeySpec{"m", &ScenarioConfig::minibatch},
    KeySpec{"R_bins", &ScenarioConfig::reward_bins},
    KeySpec{"collapse_theta", &ScenarioConfig::collapse_fraction},
    KeySpec{"collapse_phi", &ScenarioConfig::collapse_rate_floor},
    KeySpec{"collapse_W", &ScenarioConfig::collapse_window},
    KeySpec{"collapse_detection", &ScenarioConfig::collapse_detection},
    KeySpec{"ma_window", &ScenarioConfig::ma_window},
    KeySpec{"bin_width", &ScenarioConfig::hist_bin_width},
    KeySpec{"grad_clip", &ScenarioConfig::grad_clip},
    KeySpec{"init_scale", &ScenarioConfig::init_scale},
    KeySpec{"forget_bias", &ScenarioConfig::forget_bias},
    KeySpec{"seed", &ScenarioConfig::seed},
    KeySpec{"attacker", &ScenarioConfig::attacker},
    KeySpec{"attack_start", &ScenarioConfig::attack_start},
    KeySpec{"attack_slots", &ScenarioConfig::attack_slots},
    KeySpec{"retrain_start", &ScenarioConfig::retrain_start},
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

const KeySpec* find_key(std::string_view key) {
  for (const auto& spec : kKeys) {
    if (spec.key == key) return &spec;
  }
  return nullptr;
}

void assign(ScenarioConfig& config, const KeySpec& spec, std::string_view value) {
  const auto bad = [&](std::string_view what) {
    return ConfigError("invalid value '" + std::string(value) + "' for key '" +
                       std::string(spec.key) + "': expected " + std::string(what));
  };
  std::visit(
      [&](auto member) {
        using T = std::remove_cvref_t<decltype(config.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") {
            config.*member = true;
          } else if (value == "false" || value == "0") {
            config.*member = false;
          } else {
            throw bad("true or false");
          }
        } else if constexpr (std::is_same_v<T, AttackerType>) {
          config.*member = parse_attacker_type(value);
        } else if constexpr (std::is_same_v<T, double>) {
          if (!parse_number(value, config.*member)) throw bad("a real number");
        } else {
          if (!parse_number(value, config.*member)) throw bad("an integer");
        }
      },
      spec.field);
}

void require(bool ok, std::string_view key, std::string_view message) {
  if (!ok) {
    throw ConfigError("configuration error for '" + std::string(key) + "': " +
                      std::string(message));
  }
}

}  // namespace

std::string_view to_string(AttackerType type) {
  switch (type) {
    case AttackerType::kNone: return "none";
    case AttackerType::kRandom: return "random";
    case AttackerType::kIdeal: return "ideal";
    case AttackerType::kDqn: return "dqn";
  }
  return "none";
}

AttackerType parse_attacker_type(std::string_view text) {
  if (text == "none") return AttackerType::kNone;
  if (text == "random") return AttackerType::kRandom;
  if (text == "ideal") return AttackerType::kIdeal;
  if (text == "dqn") return AttackerType::kDqn;
  throw ConfigError("invalid value '" + std::string(text) +
                    "' for key 'attacker': expected none, random, ideal or dqn");
}

void ScenarioConfig::validate() const {
  require(doppler_hz >= 0.0, "f_d", "must be >= 0");
  require(slot_seconds > 0.0, "T", "must be > 0");
  require(noise_power > 0.0, "sigma2", "must be > 0");
  require(num_victims >= 1, "K", "must be >= 1");
  require(num_channels >= 1, "N_c", "must be >= 1");
  require(max_power > 0.0, "P_max", "must be > 0");
  require(num_power_levels >= 1, "N_p", "must be >= 1");
  require(gamma >= 0.0 && gamma < 1.0, "gamma", "must lie in [0, 1)");
  require(victim_lr > 0.0, "victim_lr", "must be > 0");
  require(lstm_hidden >= 1, "lstm_hidden", "must be >= 1");
  require(duel_hidden >= 1, "duel_hidden", "must be >= 1");
  require(victim_eps0 >= 0.0 && victim_eps0 <= 1.0, "eps0", "must lie in [0, 1]");
  require(victim_eps1 >= 0.0 && victim_eps1 <= 1.0, "eps1", "must lie in [0, 1]");
  require(victim_train_slots > 0, "T_train", "must be > 0");
  require(victim_test_slots > 0, "T_test", "must be > 0");
  require(jammed_channels >= 1, "K_a", "must be >= 1");
  require(jammed_channels <= num_channels, "K_a", "K_a exceeds N_c");
  require(listen_eps0 >= 0.0 && listen_eps0 <= 1.0, "eps_l0", "must lie in [0, 1]");
  require(listen_eps1 >= 0.0 && listen_eps1 <= 1.0, "eps_l1", "must lie in [0, 1]");
  require(attacker_lr > 0.0, "attacker_lr", "must be > 0");
  require(attacker_eps0 >= 0.0 && attacker_eps0 <= 1.0, "attacker_eps0",
          "must lie in [0, 1]");
  require(attacker_eps1 >= 0.0 && attacker_eps1 <= 1.0, "attacker_eps1",
          "must lie in [0, 1]");
  require(attacker_train_slots > 0, "attacker_T_train", "must be > 0");
  require(jam_power > 0.0, "jam_power", "must be > 0");
  require(retrain_lr > 0.0, "retrain_lr", "must be > 0");
  require(retrain_eps >= 0.0 && retrain_eps <= 1.0, "retrain_eps", "must lie in [0, 1]");
  require(retrain_slots > 0, "T_retrain", "must be > 0");
  require(num_snapshots >= 1, "N_s", "must be >= 1");
  require(num_snapshots <= retrain_slots, "N_s", "exceeds T_retrain");
  require(ensemble_size >= 1, "N_e", "must be >= 1");
  require(ensemble_size <= num_snapshots, "N_e", "N_e exceeds N_s");
  require(reload_period >= ensemble_size, "T_reload", "must be >= N_e");
  require(reload_period < retrain_slots, "T_reload", "must be < T_retrain");
  require(ensemble_slots > 0, "ensemble_slots", "must be > 0");
  require(history_len >= 1, "N", "must be >= 1");
  require(minibatch >= 1, "m", "must be >= 1");
  require(replay_capacity >= minibatch, "B", "must be >= m");
  require(reward_bins >= 1, "R_bins", "must be >= 1");
  require(collapse_fraction >= 0.0 && collapse_fraction <= 1.0, "collapse_theta",
          "must lie in [0, 1]");
  require(collapse_window >= 1, "collapse_W", "must be >= 1");
  require(ma_window >= 1, "ma_window", "must be >= 1");
  require(hist_bin_width > 0.0, "bin_width", "must be > 0");
  require(grad_clip > 0.0, "grad_clip", "must be > 0");
  require(init_scale >= 0.0, "init_scale", "must be >= 0");
  require(attack_start > 0, "attack_start", "must be > 0");
  require(attack_slots > attack_start, "attack_slots", "must exceed attack_start");
  require(retrain_start > attack_start, "retrain_start", "must exceed attack_start");
}

ScenarioConfig desk_preset() {
  ScenarioConfig c;
  c.victim_train_slots /= 10;
  c.victim_test_slots /= 10;
  c.attacker_train_slots /= 10;
  c.retrain_slots /= 10;
  c.reload_period /= 10;
  c.ensemble_slots /= 10;
  c.attack_start /= 10;
  c.attack_slots /= 10;
  c.retrain_start /= 10;
  return c;
}

void set_config_value(ScenarioConfig& config, std::string_view key,
                      std::string_view value) {
  const KeySpec* spec = find_key(key);
  if (spec == nullptr) throw ConfigError("unknown key '" + std::string(key) + "'");
  assign(config, *spec, value);
}

ScenarioConfig parse_config(std::string_view text,
                            const std::vector<std::string>& overrides,
                            ScenarioConfig config) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    const auto where = " (line " + std::to_string(line_no) + ")";
    if (eq == std::string_view::npos) {
      throw ConfigError("expected 'key = value'" + where);
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what() + where);
    }
  }
  for (const auto& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + entry + "' is not of the form key=value");
    }
    set_config_value(config, trim(std::string_view(entry).substr(0, eq)),
                     trim(std::string_view(entry).substr(eq + 1)));
  }
  config.validate();
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides,
                           ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), overrides, std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(
    const ScenarioConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(kKeys.size());
  for (const auto& spec : kKeys) {
    std::string value = std::visit(
        [&](auto member) -> std::string {
          using T = std::remove_cvref_t<decltype(config.*member)>;
          if constexpr (std::is_same_v<T, bool>) {
            return config.*member ? "true" : "false";
          } else if constexpr (std::is_same_v<T, AttackerType>) {
            return std::string(to_string(config.*member));
          } else if constexpr (std::is_same_v<T, double>) {
            return shortest(config.*member);
          } else {
            return std::to_string(config.*member);
          }
        },
        spec.field);
    out.emplace_back(std::string(spec.key), std::move(value));
  }
  return out;
}

std::string render_config(const ScenarioConfig& config) {
  std::string out;
  for (const auto& [key, value] : config_entries(config)) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return config_entries(a) == config_entries(b);
}

}  // namespace jamnet
