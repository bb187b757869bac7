#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "jamnet/qnet.hpp"

namespace jamnet {

// Counts of (previous channel, current channel, quantized previous sum
// rate) over one snapshot interval, summed over victims.
class TransitionMatrix {
 public:
  TransitionMatrix(int num_channels, int reward_bins, int interval = 0);

  int num_channels() const { return num_channels_; }
  int reward_bins() const { return reward_bins_; }
  int interval() const { return interval_; }
  void set_interval(int interval) { interval_ = interval; }

  std::uint64_t& at(int prev_channel, int cur_channel, int reward_bin) {
    return counts_[offset(prev_channel, cur_channel, reward_bin)];
  }
  std::uint64_t at(int prev_channel, int cur_channel, int reward_bin) const {
    return counts_[offset(prev_channel, cur_channel, reward_bin)];
  }

  std::span<std::uint64_t> counts() { return counts_; }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::uint64_t total() const;

  // floor(sum_rate) clamped to [0, reward_bins - 1].
  int reward_bin(double sum_rate) const;

  bool operator==(const TransitionMatrix&) const = default;

 private:
  std::size_t offset(int a1, int a2, int r) const {
    return (static_cast<std::size_t>(a1) * static_cast<std::size_t>(num_channels_) +
            static_cast<std::size_t>(a2)) *
               static_cast<std::size_t>(reward_bins_) +
           static_cast<std::size_t>(r);
  }

  int num_channels_;
  int reward_bins_;
  int interval_;
  std::vector<std::uint64_t> counts_;
};

// Adds one slot of transitions: every victim transmitting in both slots
// contributes one count at (prev channel, current channel, bin of the
// previous slot's sum rate). Silent victims contribute nothing.
void accumulate_transition(TransitionMatrix& matrix,
                           std::span<const std::optional<int>> prev_channels,
                           std::span<const std::optional<int>> cur_channels,
                           double prev_sum_rate);

// Grand sum of the elementwise product. Throws std::invalid_argument on a
// dimension mismatch.
double correlation(const TransitionMatrix& a, const TransitionMatrix& b);

struct Snapshot {
  int interval = 0;
  std::int64_t slot = 0;  // slot at which the parameters were saved
  QNetworkParams params;
  TransitionMatrix matrix;
};

using SnapshotLibrary = std::vector<Snapshot>;

// Symmetric table of pairwise correlations, row-major N x N.
std::vector<double> correlation_table(std::span<const TransitionMatrix> matrices);

// Score of each candidate: summed correlation with every other candidate.
std::vector<double> correlation_scores(std::span<const TransitionMatrix> matrices);

class EnsembleSchedule {
 public:
  EnsembleSchedule(std::vector<int> intervals, std::vector<QNetworkParams> models,
                   std::int64_t reload_period);

  const std::vector<int>& intervals() const { return intervals_; }
  const std::vector<QNetworkParams>& models() const { return models_; }
  std::int64_t reload_period() const { return reload_period_; }
  std::int64_t dwell() const { return reload_period_ / static_cast<std::int64_t>(models_.size()); }
  // Which model is live at `offset` slots into the ensemble phase.
  int model_at(std::int64_t offset) const;

 private:
  std::vector<int> intervals_;
  std::vector<QNetworkParams> models_;
  std::int64_t reload_period_;
};

// Indices (into `matrices`) of the `count` lowest-score candidates, ties to
// the earlier index, returned in ascending order. Throws ConfigError when
// fewer than `count` candidates exist.
std::vector<std::size_t> select_lowest_correlation(std::span<const TransitionMatrix> matrices,
                                                   std::size_t count);

// Candidates are the snapshots with interval <= exclude_after.
EnsembleSchedule select_ensemble(const SnapshotLibrary& library, int ensemble_size,
                                 int exclude_after, std::int64_t reload_period);

// Model to load at `offset` slots into the ensemble phase, if a reload
// falls on this slot.
std::optional<std::reference_wrapper<const QNetworkParams>> reload_tick(
    const EnsembleSchedule& schedule, std::int64_t offset);

struct CollapseThresholds {
  double no_transmission_fraction = 0.5;  // theta
  double sum_rate_floor = 1.0;            // phi
  std::int64_t window = 20000;            // W
};

// `actions` holds K victim actions per slot, slot-major; `sum_rates` one
// entry per slot. Uses the trailing `window` slots. Returns false when
// fewer than `window` slots are available.
bool detect_collapse(std::span<const int> actions, std::span<const double> sum_rates,
                     int victims_per_slot, int no_transmission_action,
                     const CollapseThresholds& thresholds);

// Incremental form of detect_collapse over a sliding window.
class CollapseMonitor {
 public:
  CollapseMonitor(CollapseThresholds thresholds, int no_transmission_action);

  void record(std::span<const int> victim_actions, double sum_rate);
  bool collapsed() const;
  double no_transmission_fraction() const;
  double mean_sum_rate() const;
  std::size_t slots() const { return slots_.size(); }

 private:
  struct SlotSummary {
    int silent = 0;
    int victims = 0;
    double sum_rate = 0.0;
  };
  CollapseThresholds thresholds_;
  int no_transmission_;
  std::deque<SlotSummary> slots_;
  std::int64_t silent_total_ = 0;
  std::int64_t victim_total_ = 0;
};

}  // namespace jamnet
