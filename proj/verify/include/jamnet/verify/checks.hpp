#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jamnet::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Lag-1 autocorrelation of evolved gains against J0(2 pi f_d T) within
// 0.01, and mean |h|^2 within 0.02 of one. Gains are pooled over
// `chains` independent channels of `slots` slots each.
CheckResult check_jakes_fidelity(std::uint64_t seed, std::int64_t slots = 100000,
                                 int chains = 32);

// rates() against reference_rates() on random instances, within 1e-12.
CheckResult check_rate_oracle(std::uint64_t seed, int instances = 1000);

// BPTT against central differences (step 1e-5) on small random networks
// (3 actions, N = 3, H = 4); max relative error below 1e-4.
CheckResult check_gradients(std::uint64_t seed, int networks = 20);

// Hand-computed matrices, correlations and selections; count conservation
// on an always-transmitting trace; symmetry on random pairs.
CheckResult check_transition_machinery(std::uint64_t seed);

CheckResult check_action_codecs();
CheckResult check_replay_fifo();
CheckResult check_dueling_identity(std::uint64_t seed);
CheckResult check_reload_schedule();
CheckResult check_snapshot_round_trip(std::uint64_t seed);
CheckResult check_jam_monotonicity(std::uint64_t seed);

// Everything above, in a fixed order.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed);

}  // namespace jamnet::verify
