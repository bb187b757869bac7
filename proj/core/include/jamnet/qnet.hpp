#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "jamnet/random.hpp"

namespace jamnet {

// Dimensions of a recurrent dueling Q-network.
struct NetShape {
  int input = 0;        // observation width I
  int hidden = 20;      // LSTM units H
  int duel_hidden = 10; // hidden units D in each dueling head
  int actions = 0;      // A
  int history = 10;     // sequence length N

  bool operator==(const NetShape&) const = default;
};

// All weights of the network in one flat buffer. Tensors are stored in this
// fixed order (row-major, gate order input/forget/cell/output):
//
//   lstm_input      [4H x I]
//   lstm_recurrent  [4H x H]
//   lstm_bias       [4H]
//   value_hidden_w  [D x H]
//   value_hidden_b  [D]
//   value_out_w     [D]
//   value_out_b     [1]
//   adv_hidden_w    [D x H]
//   adv_hidden_b    [D]
//   adv_out_w       [A x D]
//   adv_out_b       [A]
//
// The snapshot format serializes exactly this buffer.
class QNetworkParams {
 public:
  struct Layout {
    std::size_t lstm_input, lstm_recurrent, lstm_bias;
    std::size_t value_hidden_w, value_hidden_b, value_out_w, value_out_b;
    std::size_t adv_hidden_w, adv_hidden_b, adv_out_w, adv_out_b;
    std::size_t total;
  };

  // Zero-initialized network. Throws std::invalid_argument on a
  // non-positive dimension.
  explicit QNetworkParams(NetShape shape);

  // Uniform weights in [-init_scale, init_scale], zero biases except the
  // forget gate, which starts at forget_bias.
  static QNetworkParams random(NetShape shape, RandomStream& rng, double init_scale = 0.1,
                               double forget_bias = 1.0);

  static Layout layout_for(const NetShape& shape);

  const NetShape& shape() const { return shape_; }
  const Layout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;

  bool operator==(const QNetworkParams& other) const {
    return shape_ == other.shape_ && values_ == other.values_;
  }

 private:
  NetShape shape_;
  Layout layout_;
  std::vector<double> values_;
};

// The last N observations, oldest first, stored as one N x I block.
class ObservationHistory {
 public:
  ObservationHistory(int length, int width);

  int length() const { return length_; }
  int width() const { return width_; }

  // Drops the oldest observation and appends `observation` as the newest.
  void push(std::span<const double> observation);
  // The N + 1 observations formed by appending `observation` without
  // mutating the history; this is the storage unit of TransitionRecord.
  std::vector<double> window_with(std::span<const double> observation) const;

  std::span<const double> data() const { return data_; }

 private:
  int length_;
  int width_;
  std::vector<double> data_;
};

// One replayed transition. `window` holds N + 1 observations; the state is
// the first N and the successor state the last N, so the successor is the
// state shifted by one slot by construction.
struct TransitionRecord {
  std::vector<double> window;
  int action = 0;
  double reward = 0.0;
  int width = 0;

  std::span<const double> history() const {
    return std::span<const double>(window).first(window.size() - static_cast<std::size_t>(width));
  }
  std::span<const double> next_history() const {
    return std::span<const double>(window).subspan(static_cast<std::size_t>(width));
  }
};

// Bounded FIFO of transitions; evicts the oldest record once full.
class ReplayHistory {
 public:
  explicit ReplayHistory(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  void push(TransitionRecord record);
  void clear();
  // i = 0 is the oldest retained record.
  const TransitionRecord& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // position of the oldest record once full
  std::vector<TransitionRecord> records_;
};

// Uniform sampling with replacement. Throws std::invalid_argument on an
// empty replay.
std::vector<TransitionRecord> sample_minibatch(const ReplayHistory& replay, std::size_t count,
                                               RandomStream& rng);

// Q(history, .) for every action. LSTM starts from zero hidden/cell state;
// the final hidden state feeds both dueling heads and
// Q(a) = V + Adv(a) - mean(Adv).
std::vector<double> forward(const QNetworkParams& params, std::span<const double> history);

// Value and advantage outputs behind forward(); exposed for tests.
struct DuelingOutput {
  double value = 0.0;
  std::vector<double> advantage;
  std::vector<double> q;
};
DuelingOutput forward_dueling(const QNetworkParams& params, std::span<const double> history);

// Bootstrap targets y = r + gamma * max_a' Q(next, a') under `params`.
std::vector<double> q_targets(const QNetworkParams& params,
                              std::span<const TransitionRecord> batch, double gamma);

// Mean squared error between Q(history, action) and the fixed targets;
// `gradient` (size params.size()) receives dLoss/dparams, overwritten.
double loss_and_gradient(const QNetworkParams& params, std::span<const TransitionRecord> batch,
                         std::span<const double> targets, std::span<double> gradient);

struct TrainStats {
  double loss = 0.0;
  double grad_norm = 0.0;  // before clipping
};

// One Q-learning step: targets from the current parameters with the
// gradient stopped, then a plain gradient-descent update with the gradient
// norm clipped to `grad_clip`. Throws TrainingDivergence on a non-finite
// loss or update; `params` is left untouched in that case.
TrainStats train_step(QNetworkParams& params, std::span<const TransitionRecord> batch,
                      double gamma, double learning_rate, double grad_clip);

// Lowest index among the maxima.
int argmax(std::span<const double> values);

}  // namespace jamnet
