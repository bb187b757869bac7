#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "jamnet/config.hpp"
#include "jamnet/fading_channel.hpp"
#include "jamnet/qnet.hpp"
#include "jamnet/random.hpp"

namespace jamnet {

// Victim action index a in [0, N_c * N_p]: a = channel * N_p + level for a
// transmission at power (level + 1) * P_max / N_p, and a = N_c * N_p for
// no transmission.
class VictimActionCodec {
 public:
  VictimActionCodec(int num_channels, int num_power_levels, double max_power);

  int action_count() const { return num_channels_ * num_power_levels_ + 1; }
  int no_transmission() const { return num_channels_ * num_power_levels_; }
  int encode(int channel, int level) const;

  struct Decoded {
    std::optional<int> channel;
    int level = -1;  // -1 when silent
  };
  Decoded decode(int action) const;

  double power_of_level(int level) const;
  VictimTransmission transmission(int action) const;

 private:
  int num_channels_;
  int num_power_levels_;
  double max_power_;
};

// Lexicographically ordered K_a-subsets of the channels.
class AttackerActionCodec {
 public:
  AttackerActionCodec(int num_channels, int jammed_channels);

  int action_count() const { return static_cast<int>(subsets_.size()); }
  int jammed_per_action() const { return jammed_; }
  const std::vector<int>& decode(int action) const;
  // Throws std::invalid_argument if `channels` is not a valid K_a-subset.
  int encode(std::span<const int> channels) const;

 private:
  int num_channels_;
  int jammed_;
  std::vector<std::vector<int>> subsets_;
};

// Own rate followed by the transmit power on each channel (zero elsewhere).
std::vector<double> victim_observation(double rate, const VictimTransmission& tx,
                                       int num_channels);

// Victims' sum rate followed by a 0/1 jam indicator per channel.
std::vector<double> attacker_observation(double sum_rate, std::span<const int> jammed,
                                         int num_channels);

// Linear decay from `start` to `end` over `horizon` slots, constant after.
class EpsilonSchedule {
 public:
  EpsilonSchedule(double start, double end, std::int64_t horizon);

  double value(std::int64_t slot) const;
  double start() const { return start_; }
  double end() const { return end_; }
  std::int64_t horizon() const { return horizon_; }

 private:
  double start_;
  double end_;
  std::int64_t horizon_;
};

// Epsilon-greedy over all actions; greedy ties go to the lowest index.
int victim_act(const QNetworkParams& params, std::span<const double> history, double epsilon,
               RandomStream& rng);

enum class AttackerMode { kListen, kGreedyAttack, kExploreAttack };

std::string_view to_string(AttackerMode mode);

// Two-level exploration: listen with probability `listen_epsilon` (never
// twice in a row), otherwise explore with probability `epsilon` and act
// greedily otherwise.
AttackerMode attacker_mode_select(double listen_epsilon, double epsilon,
                                  std::optional<AttackerMode> last_mode, RandomStream& rng);

int attacker_act_attacking(const QNetworkParams& params, std::span<const double> history,
                           AttackerMode mode, const AttackerActionCodec& codec,
                           RandomStream& rng);

struct ListenOutcome {
  int pseudo_action = 0;
  double pseudo_reward = 0.0;
  std::vector<double> observation;
};

// Turns a listening slot into a pseudo-labelled transition: the K_a
// loudest channels (ties to the lower index) become the action, the reward
// is zero and the recorded observation has all jam indicators cleared.
ListenOutcome attacker_listen(std::span<const double> measurements, double sum_rate,
                              const AttackerActionCodec& codec);

int random_attacker(const AttackerActionCodec& codec, RandomStream& rng);

// Jams the channels the victims picked this slot, padded with the
// lowest-index unused channels up to K_a. Returns the sorted channel set.
std::vector<int> ideal_attacker(std::span<const VictimTransmission> victims,
                                int num_channels, int jammed_channels);

inline double attacker_reward(double sum_rate) { return -sum_rate; }

// The victims' DQN: a central network trained on all victims' transitions,
// or one local copy per victim once the ensemble is distributed.
class VictimTeam {
 public:
  VictimTeam(const ScenarioConfig& config, QNetworkParams initial);

  const VictimActionCodec& codec() const { return codec_; }
  int size() const { return static_cast<int>(histories_.size()); }

  // Central (shared) network.
  const QNetworkParams& central() const { return central_; }
  QNetworkParams& central() { return central_; }

  // Switch to one local copy per victim, each with its own replay.
  void distribute(const QNetworkParams& params);
  bool distributed() const { return !local_.empty(); }
  // Overwrite every local copy (ensemble reload).
  void load_all(const QNetworkParams& params);
  const QNetworkParams& network_of(int victim) const;

  // One epsilon-greedy action per victim from its own history.
  std::vector<int> act(double epsilon, RandomStream& rng) const;

  // Appends slot feedback to every history and pushes each victim's
  // transition (reward = sum rate) to the central replay, or to its local
  // replay when distributed.
  void observe(std::span<const int> actions, std::span<const double> rates, double sum_rate);

  // One train step on the central network, or one per local copy. Skipped
  // while the relevant replay holds fewer than m records.
  void train(double learning_rate, RandomStream& rng);

  const ReplayHistory& central_replay() const { return central_replay_; }
  const ObservationHistory& history(int victim) const {
    return histories_[static_cast<std::size_t>(victim)];
  }

 private:
  ScenarioConfig config_;
  VictimActionCodec codec_;
  QNetworkParams central_;
  ReplayHistory central_replay_;
  std::vector<QNetworkParams> local_;
  std::vector<ReplayHistory> local_replay_;
  std::vector<ObservationHistory> histories_;
};

// The DQN jammer with its attacking/listening modes and replay.
class DqnAttacker {
 public:
  DqnAttacker(const ScenarioConfig& config, RandomStream& init_rng);

  const AttackerActionCodec& codec() const { return codec_; }
  const QNetworkParams& params() const { return params_; }

  struct Choice {
    AttackerMode mode = AttackerMode::kListen;
    std::optional<int> action;  // set in attacking modes
  };

  // `elapsed` counts slots since the attacker activated.
  Choice choose(std::int64_t elapsed, RandomStream& mode_rng, RandomStream& explore_rng);

  // Records the slot outcome: a real transition when attacking, a pseudo
  // transition built from the interference readings when listening.
  void observe(const Choice& choice, double sum_rate, std::span<const double> measurements);

  void train(RandomStream& rng);

  double listen_epsilon(std::int64_t elapsed) const { return listen_schedule_.value(elapsed); }
  double epsilon(std::int64_t elapsed) const { return explore_schedule_.value(elapsed); }
  const ReplayHistory& replay() const { return replay_; }

 private:
  ScenarioConfig config_;
  AttackerActionCodec codec_;
  QNetworkParams params_;
  ReplayHistory replay_;
  ObservationHistory history_;
  EpsilonSchedule listen_schedule_;
  EpsilonSchedule explore_schedule_;
  std::optional<AttackerMode> last_mode_;
};

NetShape victim_net_shape(const ScenarioConfig& config);
NetShape attacker_net_shape(const ScenarioConfig& config);

}  // namespace jamnet
