#pragma once

#include <span>
#include <vector>

#include "jamnet/fading_channel.hpp"
#include "jamnet/qnet.hpp"

namespace jamnet::verify {

// J0 from the standard library's cylindrical Bessel function.
double reference_j0(double x);

// Straight-line per-victim rates: explicit loops over every transmitter,
// recomputing powers and channel indicators from the raw decision.
std::vector<double> reference_rates(const ChannelState& state, const TransmitDecision& decision,
                                    double noise_power);

// Central differences of loss_and_gradient's loss with the targets held fixed.
std::vector<double> numeric_gradient(const QNetworkParams& params,
                                     std::span<const TransitionRecord> batch,
                                     std::span<const double> targets, double step);

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor = 1e-6);

}  // namespace jamnet::verify
