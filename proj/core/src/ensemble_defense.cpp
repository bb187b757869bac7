#include "jamnet/ensemble_defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "jamnet/error.hpp"

namespace jamnet {

TransitionMatrix::TransitionMatrix(int num_channels, int reward_bins, int interval)
    : num_channels_(num_channels),
      reward_bins_(reward_bins),
      interval_(interval),
      counts_(static_cast<std::size_t>(num_channels) * static_cast<std::size_t>(num_channels) *
                  static_cast<std::size_t>(reward_bins),
              0) {
  if (num_channels < 1 || reward_bins < 1) {
    throw std::invalid_argument("transition matrix dimensions must be positive");
  }
}

std::uint64_t TransitionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

int TransitionMatrix::reward_bin(double sum_rate) const {
  if (!(sum_rate > 0.0)) return 0;
  const double bin = std::floor(sum_rate);
  if (bin >= reward_bins_ - 1) return reward_bins_ - 1;
  return static_cast<int>(bin);
}

void accumulate_transition(TransitionMatrix& matrix,
                           std::span<const std::optional<int>> prev_channels,
                           std::span<const std::optional<int>> cur_channels,
                           double prev_sum_rate) {
  if (prev_channels.size() != cur_channels.size()) {
    throw std::invalid_argument("victim count mismatch between slots");
  }
  const int bin = matrix.reward_bin(prev_sum_rate);
  for (std::size_t k = 0; k < prev_channels.size(); ++k) {
    if (!prev_channels[k] || !cur_channels[k]) continue;
    ++matrix.at(*prev_channels[k], *cur_channels[k], bin);
  }
}

double correlation(const TransitionMatrix& a, const TransitionMatrix& b) {
  if (a.num_channels() != b.num_channels() || a.reward_bins() != b.reward_bins()) {
    throw std::invalid_argument("transition matrices differ in shape");
  }
  const auto ca = a.counts();
  const auto cb = b.counts();
  double sum = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    sum += static_cast<double>(ca[i]) * static_cast<double>(cb[i]);
  }
  return sum;
}

std::vector<double> correlation_table(std::span<const TransitionMatrix> matrices) {
  const std::size_t n = matrices.size();
  std::vector<double> table(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double r = correlation(matrices[i], matrices[j]);
      table[i * n + j] = r;
      table[j * n + i] = r;
    }
  }
  return table;
}

std::vector<double> correlation_scores(std::span<const TransitionMatrix> matrices) {
  const std::size_t n = matrices.size();
  const auto table = correlation_table(matrices);
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) scores[i] += table[i * n + j];
    }
  }
  return scores;
}

std::vector<std::size_t> select_lowest_correlation(std::span<const TransitionMatrix> matrices,
                                                   std::size_t count) {
  if (count > matrices.size()) {
    throw ConfigError("ensemble of " + std::to_string(count) + " models requested but only " +
                      std::to_string(matrices.size()) + " intervals are eligible");
  }
  const auto scores = correlation_scores(matrices);
  std::vector<std::size_t> order(matrices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

EnsembleSchedule::EnsembleSchedule(std::vector<int> intervals,
                                   std::vector<QNetworkParams> models,
                                   std::int64_t reload_period)
    : intervals_(std::move(intervals)), models_(std::move(models)), reload_period_(reload_period) {
  if (models_.empty() || models_.size() != intervals_.size()) {
    throw std::invalid_argument("ensemble needs one interval per model");
  }
  if (reload_period_ < static_cast<std::int64_t>(models_.size())) {
    throw std::invalid_argument("reload period shorter than the ensemble");
  }
}

int EnsembleSchedule::model_at(std::int64_t offset) const {
  const auto n = static_cast<std::int64_t>(models_.size());
  return static_cast<int>((offset / dwell()) % n);
}

EnsembleSchedule select_ensemble(const SnapshotLibrary& library, int ensemble_size,
                                 int exclude_after, std::int64_t reload_period) {
  std::vector<TransitionMatrix> matrices;
  std::vector<const Snapshot*> candidates;
  for (const auto& snap : library) {
    if (snap.interval > exclude_after) continue;
    matrices.push_back(snap.matrix);
    candidates.push_back(&snap);
  }
  const auto chosen =
      select_lowest_correlation(matrices, static_cast<std::size_t>(std::max(ensemble_size, 0)));
  std::vector<int> intervals;
  std::vector<QNetworkParams> models;
  for (std::size_t idx : chosen) {
    intervals.push_back(candidates[idx]->interval);
    models.push_back(candidates[idx]->params);
  }
  return EnsembleSchedule(std::move(intervals), std::move(models), reload_period);
}

std::optional<std::reference_wrapper<const QNetworkParams>> reload_tick(
    const EnsembleSchedule& schedule, std::int64_t offset) {
  if (offset < 0 || offset % schedule.dwell() != 0) return std::nullopt;
  return std::cref(schedule.models()[static_cast<std::size_t>(schedule.model_at(offset))]);
}

bool detect_collapse(std::span<const int> actions, std::span<const double> sum_rates,
                     int victims_per_slot, int no_transmission_action,
                     const CollapseThresholds& thresholds) {
  const auto window = static_cast<std::size_t>(thresholds.window);
  if (sum_rates.size() < window || window == 0) return false;
  const auto per_slot = static_cast<std::size_t>(victims_per_slot);
  if (actions.size() != sum_rates.size() * per_slot) {
    throw std::invalid_argument("action trace does not match the sum-rate trace");
  }
  const auto rates = sum_rates.last(window);
  const auto acts = actions.last(window * per_slot);
  const auto silent = std::count(acts.begin(), acts.end(), no_transmission_action);
  const double fraction = static_cast<double>(silent) / static_cast<double>(acts.size());
  const double mean_rate =
      std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(window);
  return fraction > thresholds.no_transmission_fraction || mean_rate < thresholds.sum_rate_floor;
}

CollapseMonitor::CollapseMonitor(CollapseThresholds thresholds, int no_transmission_action)
    : thresholds_(thresholds), no_transmission_(no_transmission_action) {}

void CollapseMonitor::record(std::span<const int> victim_actions, double sum_rate) {
  SlotSummary s;
  s.victims = static_cast<int>(victim_actions.size());
  s.silent = static_cast<int>(
      std::count(victim_actions.begin(), victim_actions.end(), no_transmission_));
  s.sum_rate = sum_rate;
  slots_.push_back(s);
  silent_total_ += s.silent;
  victim_total_ += s.victims;
  if (static_cast<std::int64_t>(slots_.size()) > thresholds_.window) {
    const auto& old = slots_.front();
    silent_total_ -= old.silent;
    victim_total_ -= old.victims;
    slots_.pop_front();
  }
}

double CollapseMonitor::no_transmission_fraction() const {
  return victim_total_ == 0 ? 0.0
                            : static_cast<double>(silent_total_) / static_cast<double>(victim_total_);
}

double CollapseMonitor::mean_sum_rate() const {
  // Recomputed rather than using the running total so the result matches
  // detect_collapse exactly.
  double total = 0.0;
  for (const auto& s : slots_) total += s.sum_rate;
  return slots_.empty() ? 0.0 : total / static_cast<double>(slots_.size());
}

bool CollapseMonitor::collapsed() const {
  if (static_cast<std::int64_t>(slots_.size()) < thresholds_.window) return false;
  return no_transmission_fraction() > thresholds_.no_transmission_fraction ||
         mean_sum_rate() < thresholds_.sum_rate_floor;
}

}  // namespace jamnet
