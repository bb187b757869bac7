#include "jamnet/verify/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace jamnet::verify {

double reference_j0(double x) { return std::cyl_bessel_j(0.0, std::abs(x)); }

std::vector<double> reference_rates(const ChannelState& state, const TransmitDecision& decision,
                                    double noise_power) {
  const int victims = state.num_victims();
  const int attacker = state.attacker_index();
  std::vector<double> out(static_cast<std::size_t>(victims), 0.0);
  for (int k = 0; k < victims; ++k) {
    const auto& me = decision.victims[static_cast<std::size_t>(k)];
    if (!me.channel.has_value()) continue;
    const int c = *me.channel;
    const auto h_kk = state.gain(k, k, c);
    const double signal = me.power * (h_kk.real() * h_kk.real() + h_kk.imag() * h_kk.imag());
    double denominator = noise_power;
    for (int j = 0; j < victims; ++j) {
      if (j == k) continue;
      const auto& other = decision.victims[static_cast<std::size_t>(j)];
      if (!other.channel.has_value() || *other.channel != c) continue;
      const auto h = state.gain(k, j, c);
      denominator += other.power * (h.real() * h.real() + h.imag() * h.imag());
    }
    bool jammed = false;
    for (int jc : decision.jammed) jammed = jammed || jc == c;
    if (jammed) {
      const auto h = state.gain(k, attacker, c);
      denominator += decision.jam_power * (h.real() * h.real() + h.imag() * h.imag());
    }
    out[static_cast<std::size_t>(k)] = std::log(1.0 + signal / denominator) / std::log(2.0);
  }
  return out;
}

std::vector<double> numeric_gradient(const QNetworkParams& params,
                                     std::span<const TransitionRecord> batch,
                                     std::span<const double> targets, double step) {
  QNetworkParams probe = params;
  std::vector<double> scratch(params.size());
  std::vector<double> out(params.size());
  auto values = probe.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double up = loss_and_gradient(probe, batch, targets, scratch);
    values[i] = saved - step;
    const double down = loss_and_gradient(probe, batch, targets, scratch);
    values[i] = saved;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace jamnet::verify
