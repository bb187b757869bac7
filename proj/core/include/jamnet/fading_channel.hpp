#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "jamnet/config.hpp"
#include "jamnet/random.hpp"

namespace jamnet {

using ComplexGain = std::complex<double>;

// J0 by truncated power series. Accurate to ~1e-15 for |x| <= 2, adequate
// (1e-10) up to |x| ~ 8, which covers every slot-duration/Doppler pair the
// simulator is configured with.
double bessel_j0(double x);

// Gauss-Markov correlation coefficient rho = J0(2 pi f_d T).
double fading_correlation(double doppler_hz, double slot_seconds);

// Fading gains for every (receiver, transmitter, channel) triple. Index K
// on either axis is the attacker's receiver / transmitter.
class ChannelState {
 public:
  ChannelState(int num_victims, int num_channels, double rho);

  int num_victims() const { return num_victims_; }
  int num_channels() const { return num_channels_; }
  int attacker_index() const { return num_victims_; }
  double rho() const { return rho_; }
  std::uint64_t slot() const { return slot_; }

  ComplexGain& gain(int receiver, int transmitter, int channel) {
    return gains_[offset(receiver, transmitter, channel)];
  }
  const ComplexGain& gain(int receiver, int transmitter, int channel) const {
    return gains_[offset(receiver, transmitter, channel)];
  }
  double power_gain(int receiver, int transmitter, int channel) const {
    return std::norm(gain(receiver, transmitter, channel));
  }

  std::span<ComplexGain> gains() { return gains_; }
  std::span<const ComplexGain> gains() const { return gains_; }

  void advance_slot() { ++slot_; }

 private:
  std::size_t offset(int receiver, int transmitter, int channel) const {
    const auto nodes = static_cast<std::size_t>(num_victims_ + 1);
    return (static_cast<std::size_t>(receiver) * nodes +
            static_cast<std::size_t>(transmitter)) *
               static_cast<std::size_t>(num_channels_) +
           static_cast<std::size_t>(channel);
  }

  int num_victims_;
  int num_channels_;
  double rho_;
  std::uint64_t slot_ = 0;
  std::vector<ComplexGain> gains_;
};

struct VictimTransmission {
  std::optional<int> channel;  // nullopt: no transmission
  double power = 0.0;          // watts; zero when silent
};

struct TransmitDecision {
  std::vector<VictimTransmission> victims;
  std::vector<int> jammed;     // empty (idle/listening) or exactly K_a channels
  double jam_power = 0.0;

  bool channel_jammed(int channel) const;
};

// Checks the decision against the scenario's channel count, power grid and
// jam-set size. Throws std::invalid_argument.
void validate_decision(const TransmitDecision& decision, const ScenarioConfig& config);

ChannelState init_channel(const ScenarioConfig& config, RandomStream& rng);

// One Gauss-Markov step for every gain: h <- rho h + sqrt(1 - rho^2) e.
void evolve(ChannelState& state, RandomStream& rng);

// SINR of victim k, or nullopt when k does not transmit.
std::optional<double> sinr(const ChannelState& state, const TransmitDecision& decision,
                           int victim, double noise_power);

struct RateReport {
  std::vector<double> per_victim;
  double sum_rate = 0.0;
};

RateReport rates(const ChannelState& state, const TransmitDecision& decision,
                 double noise_power);

// Interference plus noise seen at the attacker's receiver on every channel.
std::vector<double> measure_interference(const ChannelState& state,
                                         const TransmitDecision& decision,
                                         double noise_power);

}  // namespace jamnet
