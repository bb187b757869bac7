#include "jamnet/agents.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace jamnet {

VictimActionCodec::VictimActionCodec(int num_channels, int num_power_levels, double max_power)
    : num_channels_(num_channels), num_power_levels_(num_power_levels), max_power_(max_power) {
  if (num_channels < 1 || num_power_levels < 1) {
    throw std::invalid_argument("victim action space needs N_c >= 1 and N_p >= 1");
  }
}

int VictimActionCodec::encode(int channel, int level) const {
  if (channel < 0 || channel >= num_channels_ || level < 0 || level >= num_power_levels_) {
    throw std::invalid_argument("victim channel/level out of range");
  }
  return channel * num_power_levels_ + level;
}

VictimActionCodec::Decoded VictimActionCodec::decode(int action) const {
  if (action < 0 || action > no_transmission()) {
    throw std::invalid_argument("victim action out of range");
  }
  if (action == no_transmission()) return {};
  return {action / num_power_levels_, action % num_power_levels_};
}

double VictimActionCodec::power_of_level(int level) const {
  return (level + 1) * max_power_ / num_power_levels_;
}

VictimTransmission VictimActionCodec::transmission(int action) const {
  const auto d = decode(action);
  if (!d.channel) return {};
  return {d.channel, power_of_level(d.level)};
}

AttackerActionCodec::AttackerActionCodec(int num_channels, int jammed_channels)
    : num_channels_(num_channels), jammed_(jammed_channels) {
  if (jammed_channels < 1 || jammed_channels > num_channels) {
    throw std::invalid_argument("K_a exceeds N_c");
  }
  // Lexicographic enumeration of combinations.
  std::vector<int> current(static_cast<std::size_t>(jammed_channels));
  std::iota(current.begin(), current.end(), 0);
  while (true) {
    subsets_.push_back(current);
    int i = jammed_channels - 1;
    while (i >= 0 && current[static_cast<std::size_t>(i)] == num_channels - jammed_channels + i) --i;
    if (i < 0) break;
    ++current[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < jammed_channels; ++j) {
      current[static_cast<std::size_t>(j)] = current[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
}

const std::vector<int>& AttackerActionCodec::decode(int action) const {
  if (action < 0 || action >= action_count()) {
    throw std::invalid_argument("attacker action out of range");
  }
  return subsets_[static_cast<std::size_t>(action)];
}

int AttackerActionCodec::encode(std::span<const int> channels) const {
  std::vector<int> sorted(channels.begin(), channels.end());
  std::sort(sorted.begin(), sorted.end());
  const auto it = std::lower_bound(subsets_.begin(), subsets_.end(), sorted);
  if (it == subsets_.end() || *it != sorted) {
    throw std::invalid_argument("channel set is not a valid K_a-subset");
  }
  return static_cast<int>(it - subsets_.begin());
}

std::vector<double> victim_observation(double rate, const VictimTransmission& tx,
                                       int num_channels) {
  std::vector<double> obs(static_cast<std::size_t>(1 + num_channels), 0.0);
  obs[0] = rate;
  if (tx.channel) obs[static_cast<std::size_t>(1 + *tx.channel)] = tx.power;
  return obs;
}

std::vector<double> attacker_observation(double sum_rate, std::span<const int> jammed,
                                         int num_channels) {
  std::vector<double> obs(static_cast<std::size_t>(1 + num_channels), 0.0);
  obs[0] = sum_rate;
  for (int c : jammed) obs[static_cast<std::size_t>(1 + c)] = 1.0;
  return obs;
}

EpsilonSchedule::EpsilonSchedule(double start, double end, std::int64_t horizon)
    : start_(start), end_(end), horizon_(horizon) {
  if (horizon <= 0) throw std::invalid_argument("schedule horizon must be positive");
}

double EpsilonSchedule::value(std::int64_t slot) const {
  if (slot <= 0) return start_;
  if (slot >= horizon_) return end_;
  const double frac = static_cast<double>(slot) / static_cast<double>(horizon_);
  return start_ + (end_ - start_) * frac;
}

int victim_act(const QNetworkParams& params, std::span<const double> history, double epsilon,
               RandomStream& rng) {
  const auto actions = static_cast<std::size_t>(params.shape().actions);
  if (rng.bernoulli(epsilon)) return static_cast<int>(rng.index(actions));
  return argmax(forward(params, history));
}

std::string_view to_string(AttackerMode mode) {
  switch (mode) {
    case AttackerMode::kListen: return "listen";
    case AttackerMode::kGreedyAttack: return "greedy";
    case AttackerMode::kExploreAttack: return "explore";
  }
  return "listen";
}

AttackerMode attacker_mode_select(double listen_epsilon, double epsilon,
                                  std::optional<AttackerMode> last_mode, RandomStream& rng) {
  const bool may_listen = last_mode != AttackerMode::kListen;
  if (may_listen && rng.bernoulli(listen_epsilon)) return AttackerMode::kListen;
  return rng.bernoulli(epsilon) ? AttackerMode::kExploreAttack : AttackerMode::kGreedyAttack;
}

int attacker_act_attacking(const QNetworkParams& params, std::span<const double> history,
                           AttackerMode mode, const AttackerActionCodec& codec,
                           RandomStream& rng) {
  switch (mode) {
    case AttackerMode::kExploreAttack:
      return static_cast<int>(rng.index(static_cast<std::size_t>(codec.action_count())));
    case AttackerMode::kGreedyAttack:
      return argmax(forward(params, history));
    case AttackerMode::kListen:
      break;
  }
  throw std::invalid_argument("attacker_act_attacking called in listening mode");
}

ListenOutcome attacker_listen(std::span<const double> measurements, double sum_rate,
                              const AttackerActionCodec& codec) {
  std::vector<int> order(measurements.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return measurements[static_cast<std::size_t>(a)] > measurements[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(codec.jammed_per_action()));
  ListenOutcome out;
  out.pseudo_action = codec.encode(order);
  out.pseudo_reward = 0.0;
  out.observation = attacker_observation(sum_rate, {}, static_cast<int>(measurements.size()));
  return out;
}

int random_attacker(const AttackerActionCodec& codec, RandomStream& rng) {
  return static_cast<int>(rng.index(static_cast<std::size_t>(codec.action_count())));
}

std::vector<int> ideal_attacker(std::span<const VictimTransmission> victims,
                                int num_channels, int jammed_channels) {
  std::vector<bool> used(static_cast<std::size_t>(num_channels), false);
  for (const auto& tx : victims) {
    if (tx.channel) used[static_cast<std::size_t>(*tx.channel)] = true;
  }
  std::vector<int> jam;
  for (int c = 0; c < num_channels && static_cast<int>(jam.size()) < jammed_channels; ++c) {
    if (used[static_cast<std::size_t>(c)]) jam.push_back(c);
  }
  for (int c = 0; c < num_channels && static_cast<int>(jam.size()) < jammed_channels; ++c) {
    if (!used[static_cast<std::size_t>(c)]) jam.push_back(c);
  }
  std::sort(jam.begin(), jam.end());
  return jam;
}

NetShape victim_net_shape(const ScenarioConfig& config) {
  return {config.observation_width(), config.lstm_hidden, config.duel_hidden,
          config.victim_action_count(), config.history_len};
}

NetShape attacker_net_shape(const ScenarioConfig& config) {
  const AttackerActionCodec codec(config.num_channels, config.jammed_channels);
  return {config.observation_width(), config.lstm_hidden, config.duel_hidden,
          codec.action_count(), config.history_len};
}

VictimTeam::VictimTeam(const ScenarioConfig& config, QNetworkParams initial)
    : config_(config),
      codec_(config.num_channels, config.num_power_levels, config.max_power),
      central_(std::move(initial)),
      central_replay_(static_cast<std::size_t>(config.replay_capacity)) {
  if (!(central_.shape() == victim_net_shape(config))) {
    throw std::invalid_argument("victim network shape does not match the scenario");
  }
  histories_.assign(static_cast<std::size_t>(config.num_victims),
                    ObservationHistory(config.history_len, config.observation_width()));
}

void VictimTeam::distribute(const QNetworkParams& params) {
  local_.assign(histories_.size(), params);
  local_replay_.assign(histories_.size(),
                       ReplayHistory(static_cast<std::size_t>(config_.replay_capacity)));
}

void VictimTeam::load_all(const QNetworkParams& params) {
  if (local_.empty()) {
    central_ = params;
    return;
  }
  for (auto& p : local_) p = params;
}

const QNetworkParams& VictimTeam::network_of(int victim) const {
  return local_.empty() ? central_ : local_[static_cast<std::size_t>(victim)];
}

std::vector<int> VictimTeam::act(double epsilon, RandomStream& rng) const {
  std::vector<int> actions(histories_.size());
  for (std::size_t k = 0; k < histories_.size(); ++k) {
    actions[k] = victim_act(network_of(static_cast<int>(k)), histories_[k].data(), epsilon, rng);
  }
  return actions;
}

void VictimTeam::observe(std::span<const int> actions, std::span<const double> rates,
                         double sum_rate) {
  for (std::size_t k = 0; k < histories_.size(); ++k) {
    const auto obs = victim_observation(rates[k], codec_.transmission(actions[k]),
                                        config_.num_channels);
    TransitionRecord record{histories_[k].window_with(obs), actions[k], sum_rate,
                            config_.observation_width()};
    if (local_.empty()) {
      central_replay_.push(std::move(record));
    } else {
      local_replay_[k].push(std::move(record));
    }
    histories_[k].push(obs);
  }
}

void VictimTeam::train(double learning_rate, RandomStream& rng) {
  const auto m = static_cast<std::size_t>(config_.minibatch);
  if (local_.empty()) {
    if (central_replay_.size() < m) return;
    const auto batch = sample_minibatch(central_replay_, m, rng);
    train_step(central_, batch, config_.gamma, learning_rate, config_.grad_clip);
    return;
  }
  for (std::size_t k = 0; k < local_.size(); ++k) {
    if (local_replay_[k].size() < m) continue;
    const auto batch = sample_minibatch(local_replay_[k], m, rng);
    train_step(local_[k], batch, config_.gamma, learning_rate, config_.grad_clip);
  }
}

DqnAttacker::DqnAttacker(const ScenarioConfig& config, RandomStream& init_rng)
    : config_(config),
      codec_(config.num_channels, config.jammed_channels),
      params_(QNetworkParams::random(attacker_net_shape(config), init_rng, config.init_scale,
                                     config.forget_bias)),
      replay_(static_cast<std::size_t>(config.replay_capacity)),
      history_(config.history_len, config.observation_width()),
      listen_schedule_(config.listen_eps0, config.listen_eps1, config.attacker_train_slots),
      explore_schedule_(config.attacker_eps0, config.attacker_eps1,
                        config.attacker_train_slots) {}

DqnAttacker::Choice DqnAttacker::choose(std::int64_t elapsed, RandomStream& mode_rng,
                                        RandomStream& explore_rng) {
  Choice choice;
  choice.mode = attacker_mode_select(listen_epsilon(elapsed), epsilon(elapsed), last_mode_,
                                     mode_rng);
  if (choice.mode != AttackerMode::kListen) {
    choice.action = attacker_act_attacking(params_, history_.data(), choice.mode, codec_,
                                           explore_rng);
  }
  last_mode_ = choice.mode;
  return choice;
}

void DqnAttacker::observe(const Choice& choice, double sum_rate,
                          std::span<const double> measurements) {
  if (choice.mode == AttackerMode::kListen) {
    auto outcome = attacker_listen(measurements, sum_rate, codec_);
    replay_.push({history_.window_with(outcome.observation), outcome.pseudo_action,
                  outcome.pseudo_reward, config_.observation_width()});
    history_.push(outcome.observation);
    return;
  }
  const auto obs = attacker_observation(sum_rate, codec_.decode(*choice.action),
                                        config_.num_channels);
  replay_.push({history_.window_with(obs), *choice.action, attacker_reward(sum_rate),
                config_.observation_width()});
  history_.push(obs);
}

void DqnAttacker::train(RandomStream& rng) {
  const auto m = static_cast<std::size_t>(config_.minibatch);
  if (replay_.size() < m) return;
  const auto batch = sample_minibatch(replay_, m, rng);
  train_step(params_, batch, config_.gamma, config_.attacker_lr, config_.grad_clip);
}

}  // namespace jamnet
