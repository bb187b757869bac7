#include "jamnet/fading_channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "jamnet/error.hpp"

namespace jamnet {

double bessel_j0(double x) {
  // sum_k (-1)^k (x^2/4)^k / (k!)^2
  const double q = -0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (k >= 10 && std::abs(term) < 1e-17 * std::max(1.0, std::abs(sum))) break;
  }
  return sum;
}

double fading_correlation(double doppler_hz, double slot_seconds) {
  return bessel_j0(2.0 * std::numbers::pi * doppler_hz * slot_seconds);
}

ChannelState::ChannelState(int num_victims, int num_channels, double rho)
    : num_victims_(num_victims),
      num_channels_(num_channels),
      rho_(rho),
      gains_(static_cast<std::size_t>(num_victims + 1) *
             static_cast<std::size_t>(num_victims + 1) *
             static_cast<std::size_t>(num_channels)) {}

bool TransmitDecision::channel_jammed(int channel) const {
  return std::find(jammed.begin(), jammed.end(), channel) != jammed.end();
}

void validate_decision(const TransmitDecision& decision, const ScenarioConfig& config) {
  if (decision.victims.size() != static_cast<std::size_t>(config.num_victims)) {
    throw std::invalid_argument("decision has wrong victim count");
  }
  const double step = config.max_power / config.num_power_levels;
  for (const auto& tx : decision.victims) {
    if (!tx.channel) {
      if (tx.power != 0.0) throw std::invalid_argument("silent victim with nonzero power");
      continue;
    }
    if (*tx.channel < 0 || *tx.channel >= config.num_channels) {
      throw std::invalid_argument("victim channel out of range");
    }
    const double level = tx.power / step;
    const double rounded = std::round(level);
    if (rounded < 1.0 || rounded > config.num_power_levels ||
        std::abs(level - rounded) > 1e-9) {
      throw std::invalid_argument("victim power not on the power grid");
    }
  }
  if (!decision.jammed.empty()) {
    if (decision.jammed.size() != static_cast<std::size_t>(config.jammed_channels)) {
      throw std::invalid_argument("jam set size must be 0 or K_a");
    }
    auto sorted = decision.jammed;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("jam set has duplicate channels");
    }
    if (sorted.front() < 0 || sorted.back() >= config.num_channels) {
      throw std::invalid_argument("jammed channel out of range");
    }
  }
}

ChannelState init_channel(const ScenarioConfig& config, RandomStream& rng) {
  if (config.num_victims < 1 || config.num_channels < 1) {
    throw ConfigError("channel needs K >= 1 and N_c >= 1");
  }
  ChannelState state(config.num_victims, config.num_channels,
                     fading_correlation(config.doppler_hz, config.slot_seconds));
  for (auto& g : state.gains()) g = rng.cscg();
  return state;
}

void evolve(ChannelState& state, RandomStream& rng) {
  const double rho = state.rho();
  const double innovation_scale = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  for (auto& g : state.gains()) g = rho * g + innovation_scale * rng.cscg();
  state.advance_slot();
}

std::optional<double> sinr(const ChannelState& state, const TransmitDecision& decision,
                           int victim, double noise_power) {
  const auto& self = decision.victims[static_cast<std::size_t>(victim)];
  if (!self.channel) return std::nullopt;
  const int c = *self.channel;

  double denominator = noise_power;
  for (int j = 0; j < static_cast<int>(decision.victims.size()); ++j) {
    const auto& other = decision.victims[static_cast<std::size_t>(j)];
    if (j == victim || other.channel != c) continue;
    denominator += other.power * state.power_gain(victim, j, c);
  }
  if (decision.channel_jammed(c)) {
    denominator += decision.jam_power * state.power_gain(victim, state.attacker_index(), c);
  }
  return self.power * state.power_gain(victim, victim, c) / denominator;
}

RateReport rates(const ChannelState& state, const TransmitDecision& decision,
                 double noise_power) {
  RateReport report;
  report.per_victim.resize(decision.victims.size(), 0.0);
  for (int k = 0; k < static_cast<int>(decision.victims.size()); ++k) {
    if (const auto s = sinr(state, decision, k, noise_power)) {
      report.per_victim[static_cast<std::size_t>(k)] = std::log2(1.0 + *s);
    }
  }
  for (double r : report.per_victim) report.sum_rate += r;
  return report;
}

std::vector<double> measure_interference(const ChannelState& state,
                                         const TransmitDecision& decision,
                                         double noise_power) {
  std::vector<double> reading(static_cast<std::size_t>(state.num_channels()), noise_power);
  const int receiver = state.attacker_index();
  for (int j = 0; j < static_cast<int>(decision.victims.size()); ++j) {
    const auto& tx = decision.victims[static_cast<std::size_t>(j)];
    if (!tx.channel) continue;
    reading[static_cast<std::size_t>(*tx.channel)] +=
        tx.power * state.power_gain(receiver, j, *tx.channel);
  }
  return reading;
}

}  // namespace jamnet
