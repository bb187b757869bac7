#include "jamnet/qnet.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "jamnet/error.hpp"

namespace jamnet {

namespace {

using Matrix = Eigen::MatrixXd;
using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MutRowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

// Activations of a batch of sequences (one column per sequence), kept for
// backpropagation. Index 0 of cell/hidden is the zero initial state.
struct BatchCache {
  int batch = 0;
  std::vector<Matrix> inputs;        // N x [I x B]
  std::vector<Matrix> gates;         // N x [4H x B], post-activation i, f, g, o
  std::vector<Matrix> cell;          // (N+1) x [H x B]
  std::vector<Matrix> cell_tanh;     // N x [H x B]
  std::vector<Matrix> hidden;        // (N+1) x [H x B]
  Matrix value_pre, value_act;       // D x B
  Matrix adv_pre, adv_act;           // D x B
  Matrix advantage;                  // A x B
  Eigen::RowVectorXd value;          // 1 x B
  Matrix q;                          // A x B
};

struct Weights {
  RowMajorMap wx, wh;
  VecMap b;
  RowMajorMap wv1;
  VecMap bv1, wv2;
  double bv2;
  RowMajorMap wa1;
  VecMap ba1;
  RowMajorMap wa2;
  VecMap ba2;

  explicit Weights(const QNetworkParams& p)
      : wx(p.values().data() + p.layout().lstm_input, 4 * p.shape().hidden, p.shape().input),
        wh(p.values().data() + p.layout().lstm_recurrent, 4 * p.shape().hidden, p.shape().hidden),
        b(p.values().data() + p.layout().lstm_bias, 4 * p.shape().hidden),
        wv1(p.values().data() + p.layout().value_hidden_w, p.shape().duel_hidden, p.shape().hidden),
        bv1(p.values().data() + p.layout().value_hidden_b, p.shape().duel_hidden),
        wv2(p.values().data() + p.layout().value_out_w, p.shape().duel_hidden),
        bv2(p.values()[p.layout().value_out_b]),
        wa1(p.values().data() + p.layout().adv_hidden_w, p.shape().duel_hidden, p.shape().hidden),
        ba1(p.values().data() + p.layout().adv_hidden_b, p.shape().duel_hidden),
        wa2(p.values().data() + p.layout().adv_out_w, p.shape().actions, p.shape().duel_hidden),
        ba2(p.values().data() + p.layout().adv_out_b, p.shape().actions) {}
};

struct Gradients {
  MutRowMajorMap wx, wh;
  MutVecMap b;
  MutRowMajorMap wv1;
  MutVecMap bv1, wv2;
  double& bv2;
  MutRowMajorMap wa1;
  MutVecMap ba1;
  MutRowMajorMap wa2;
  MutVecMap ba2;

  Gradients(const QNetworkParams& p, double* g)
      : wx(g + p.layout().lstm_input, 4 * p.shape().hidden, p.shape().input),
        wh(g + p.layout().lstm_recurrent, 4 * p.shape().hidden, p.shape().hidden),
        b(g + p.layout().lstm_bias, 4 * p.shape().hidden),
        wv1(g + p.layout().value_hidden_w, p.shape().duel_hidden, p.shape().hidden),
        bv1(g + p.layout().value_hidden_b, p.shape().duel_hidden),
        wv2(g + p.layout().value_out_w, p.shape().duel_hidden),
        bv2(g[p.layout().value_out_b]),
        wa1(g + p.layout().adv_hidden_w, p.shape().duel_hidden, p.shape().hidden),
        ba1(g + p.layout().adv_hidden_b, p.shape().duel_hidden),
        wa2(g + p.layout().adv_out_w, p.shape().actions, p.shape().duel_hidden),
        ba2(g + p.layout().adv_out_b, p.shape().actions) {}
};

void check_history(const NetShape& s, std::span<const double> history) {
  if (history.size() != static_cast<std::size_t>(s.history) * static_cast<std::size_t>(s.input)) {
    throw std::invalid_argument("history size " + std::to_string(history.size()) +
                                " does not match network N x I = " +
                                std::to_string(s.history) + " x " + std::to_string(s.input));
  }
}

// Lays the sequences out as N input matrices of shape I x B.
void load_inputs(const NetShape& s, std::span<const std::span<const double>> sequences,
                 BatchCache& cache) {
  const int B = static_cast<int>(sequences.size());
  cache.batch = B;
  cache.inputs.resize(static_cast<std::size_t>(s.history));
  for (int t = 0; t < s.history; ++t) {
    auto& x = cache.inputs[static_cast<std::size_t>(t)];
    x.resize(s.input, B);
    for (int b = 0; b < B; ++b) {
      const auto& seq = sequences[static_cast<std::size_t>(b)];
      check_history(s, seq);
      x.col(b) = VecMap(seq.data() + static_cast<std::ptrdiff_t>(t) * s.input, s.input);
    }
  }
}

void run_forward(const QNetworkParams& params, BatchCache& cache) {
  const NetShape& s = params.shape();
  const Weights w(params);
  const int H = s.hidden, B = cache.batch;
  const auto N = static_cast<std::size_t>(s.history);

  cache.gates.resize(N);
  cache.cell_tanh.resize(N);
  cache.cell.resize(N + 1);
  cache.hidden.resize(N + 1);
  cache.cell[0].setZero(H, B);
  cache.hidden[0].setZero(H, B);

  for (std::size_t t = 0; t < N; ++t) {
    Matrix& z = cache.gates[t];
    z.noalias() = w.wx * cache.inputs[t];
    z.noalias() += w.wh * cache.hidden[t];
    z.colwise() += w.b;
    auto sig = [](auto block) { block = (1.0 + (-block.array()).exp()).inverse().matrix(); };
    sig(z.topRows(2 * H));
    z.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
    sig(z.bottomRows(H));

    const auto ig = z.topRows(H).array();
    const auto fg = z.middleRows(H, H).array();
    const auto gg = z.middleRows(2 * H, H).array();
    const auto og = z.bottomRows(H).array();
    cache.cell[t + 1] = (fg * cache.cell[t].array() + ig * gg).matrix();
    cache.cell_tanh[t] = cache.cell[t + 1].array().tanh().matrix();
    cache.hidden[t + 1] = (og * cache.cell_tanh[t].array()).matrix();
  }

  const Matrix& hN = cache.hidden[N];
  cache.value_pre.noalias() = w.wv1 * hN;
  cache.value_pre.colwise() += w.bv1;
  cache.value_act = cache.value_pre.cwiseMax(0.0);
  cache.adv_pre.noalias() = w.wa1 * hN;
  cache.adv_pre.colwise() += w.ba1;
  cache.adv_act = cache.adv_pre.cwiseMax(0.0);

  cache.value.noalias() = w.wv2.transpose() * cache.value_act;
  cache.value.array() += w.bv2;
  cache.advantage.noalias() = w.wa2 * cache.adv_act;
  cache.advantage.colwise() += w.ba2;

  const Eigen::RowVectorXd mean = cache.advantage.colwise().mean();
  cache.q = cache.advantage;
  cache.q.rowwise() += cache.value - mean;
}

// Accumulates sum_b dq(:, b) . dQ(:, b)/dparams into grad.
void run_backward(const QNetworkParams& params, const BatchCache& cache, const Matrix& dq,
                  double* grad) {
  const NetShape& s = params.shape();
  const Weights w(params);
  Gradients g(params, grad);
  const int H = s.hidden;
  const auto N = static_cast<std::size_t>(s.history);
  const Matrix& hN = cache.hidden[N];

  const Eigen::RowVectorXd dvalue = dq.colwise().sum();
  Matrix dadv = dq;
  dadv.rowwise() -= dvalue / static_cast<double>(s.actions);

  // Advantage head.
  g.ba2 += dadv.rowwise().sum();
  g.wa2.noalias() += dadv * cache.adv_act.transpose();
  Matrix dadv_pre = (w.wa2.transpose() * dadv).cwiseProduct(
      (cache.adv_pre.array() > 0.0).cast<double>().matrix());
  g.ba1 += dadv_pre.rowwise().sum();
  g.wa1.noalias() += dadv_pre * hN.transpose();
  Matrix dh = w.wa1.transpose() * dadv_pre;

  // Value head.
  g.bv2 += dvalue.sum();
  g.wv2.noalias() += cache.value_act * dvalue.transpose();
  Matrix dvalue_pre = (w.wv2 * dvalue).cwiseProduct(
      (cache.value_pre.array() > 0.0).cast<double>().matrix());
  g.bv1 += dvalue_pre.rowwise().sum();
  g.wv1.noalias() += dvalue_pre * hN.transpose();
  dh.noalias() += w.wv1.transpose() * dvalue_pre;

  // Backpropagation through time.
  Matrix dc = Matrix::Zero(H, cache.batch);
  Matrix dz(4 * H, cache.batch);
  for (std::size_t t = N; t-- > 0;) {
    const Matrix& z = cache.gates[t];
    const auto ig = z.topRows(H).array();
    const auto fg = z.middleRows(H, H).array();
    const auto gg = z.middleRows(2 * H, H).array();
    const auto og = z.bottomRows(H).array();
    const auto tc = cache.cell_tanh[t].array();

    dc.array() += dh.array() * og * (1.0 - tc.square());
    dz.topRows(H) = (dc.array() * gg * ig * (1.0 - ig)).matrix();
    dz.middleRows(H, H) = (dc.array() * cache.cell[t].array() * fg * (1.0 - fg)).matrix();
    dz.middleRows(2 * H, H) = (dc.array() * ig * (1.0 - gg.square())).matrix();
    dz.bottomRows(H) = (dh.array() * tc * og * (1.0 - og)).matrix();
    dc.array() *= fg;

    g.b += dz.rowwise().sum();
    g.wx.noalias() += dz * cache.inputs[t].transpose();
    g.wh.noalias() += dz * cache.hidden[t].transpose();
    dh.noalias() = w.wh.transpose() * dz;
  }
}

BatchCache& scratch_cache() {
  thread_local BatchCache cache;
  return cache;
}

std::vector<double> column(const Matrix& m, int col) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (int r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, col);
  return out;
}

}  // namespace

QNetworkParams::Layout QNetworkParams::layout_for(const NetShape& s) {
  const auto I = static_cast<std::size_t>(s.input);
  const auto H = static_cast<std::size_t>(s.hidden);
  const auto D = static_cast<std::size_t>(s.duel_hidden);
  const auto A = static_cast<std::size_t>(s.actions);
  Layout l{};
  std::size_t at = 0;
  const auto take = [&at](std::size_t n) {
    const std::size_t start = at;
    at += n;
    return start;
  };
  l.lstm_input = take(4 * H * I);
  l.lstm_recurrent = take(4 * H * H);
  l.lstm_bias = take(4 * H);
  l.value_hidden_w = take(D * H);
  l.value_hidden_b = take(D);
  l.value_out_w = take(D);
  l.value_out_b = take(1);
  l.adv_hidden_w = take(D * H);
  l.adv_hidden_b = take(D);
  l.adv_out_w = take(A * D);
  l.adv_out_b = take(A);
  l.total = at;
  return l;
}

QNetworkParams::QNetworkParams(NetShape shape) : shape_(shape) {
  if (shape.input < 1 || shape.hidden < 1 || shape.duel_hidden < 1 || shape.actions < 1 ||
      shape.history < 1) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  layout_ = layout_for(shape);
  values_.assign(layout_.total, 0.0);
}

QNetworkParams QNetworkParams::random(NetShape shape, RandomStream& rng, double init_scale,
                                      double forget_bias) {
  QNetworkParams p(shape);
  const auto& L = p.layout_;
  const auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) p.values_[i] = rng.uniform(-init_scale, init_scale);
  };
  fill(L.lstm_input, L.lstm_bias);
  fill(L.value_hidden_w, L.value_hidden_b);
  fill(L.value_out_w, L.value_out_b);
  fill(L.adv_hidden_w, L.adv_hidden_b);
  fill(L.adv_out_w, L.adv_out_b);
  const auto H = static_cast<std::size_t>(shape.hidden);
  for (std::size_t u = 0; u < H; ++u) p.values_[L.lstm_bias + H + u] = forget_bias;
  return p;
}

bool QNetworkParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ObservationHistory::ObservationHistory(int length, int width)
    : length_(length),
      width_(width),
      data_(static_cast<std::size_t>(length) * static_cast<std::size_t>(width), 0.0) {}

void ObservationHistory::push(std::span<const double> observation) {
  if (observation.size() != static_cast<std::size_t>(width_)) {
    throw std::invalid_argument("observation width mismatch");
  }
  std::copy(data_.begin() + width_, data_.end(), data_.begin());
  std::copy(observation.begin(), observation.end(), data_.end() - width_);
}

std::vector<double> ObservationHistory::window_with(std::span<const double> observation) const {
  if (observation.size() != static_cast<std::size_t>(width_)) {
    throw std::invalid_argument("observation width mismatch");
  }
  std::vector<double> window(data_.size() + observation.size());
  std::copy(data_.begin(), data_.end(), window.begin());
  std::copy(observation.begin(), observation.end(),
            window.begin() + static_cast<std::ptrdiff_t>(data_.size()));
  return window;
}

ReplayHistory::ReplayHistory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  records_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayHistory::push(TransitionRecord record) {
  if (records_.size() < capacity_) {
    records_.push_back(std::move(record));
    return;
  }
  records_[head_] = std::move(record);
  head_ = (head_ + 1) % capacity_;
}

void ReplayHistory::clear() {
  records_.clear();
  head_ = 0;
}

const TransitionRecord& ReplayHistory::at(std::size_t i) const {
  if (i >= records_.size()) throw std::out_of_range("replay index out of range");
  return records_[(head_ + i) % records_.size()];
}

std::vector<TransitionRecord> sample_minibatch(const ReplayHistory& replay, std::size_t count,
                                               RandomStream& rng) {
  if (replay.empty()) throw std::invalid_argument("cannot sample from an empty replay");
  std::vector<TransitionRecord> batch;
  batch.reserve(count);
  for (std::size_t i = 0; i < count; ++i) batch.push_back(replay.at(rng.index(replay.size())));
  return batch;
}

std::vector<double> forward(const QNetworkParams& params, std::span<const double> history) {
  auto& cache = scratch_cache();
  const std::array<std::span<const double>, 1> seqs{history};
  load_inputs(params.shape(), seqs, cache);
  run_forward(params, cache);
  return column(cache.q, 0);
}

DuelingOutput forward_dueling(const QNetworkParams& params, std::span<const double> history) {
  auto& cache = scratch_cache();
  const std::array<std::span<const double>, 1> seqs{history};
  load_inputs(params.shape(), seqs, cache);
  run_forward(params, cache);
  DuelingOutput out;
  out.value = cache.value(0);
  out.advantage = column(cache.advantage, 0);
  out.q = column(cache.q, 0);
  return out;
}

std::vector<double> q_targets(const QNetworkParams& params,
                              std::span<const TransitionRecord> batch, double gamma) {
  std::vector<double> targets(batch.size());
  if (batch.empty()) return targets;
  if (gamma == 0.0) {
    for (std::size_t i = 0; i < batch.size(); ++i) targets[i] = batch[i].reward;
    return targets;
  }
  std::vector<std::span<const double>> seqs;
  seqs.reserve(batch.size());
  for (const auto& record : batch) seqs.push_back(record.next_history());
  auto& cache = scratch_cache();
  load_inputs(params.shape(), seqs, cache);
  run_forward(params, cache);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    targets[i] = batch[i].reward + gamma * cache.q.col(static_cast<int>(i)).maxCoeff();
  }
  return targets;
}

double loss_and_gradient(const QNetworkParams& params, std::span<const TransitionRecord> batch,
                         std::span<const double> targets, std::span<double> gradient) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  if (targets.size() != batch.size()) throw std::invalid_argument("target count mismatch");
  if (gradient.size() != params.size()) throw std::invalid_argument("gradient size mismatch");
  std::fill(gradient.begin(), gradient.end(), 0.0);

  const int A = params.shape().actions;
  std::vector<std::span<const double>> seqs;
  seqs.reserve(batch.size());
  for (const auto& record : batch) {
    if (record.action < 0 || record.action >= A) {
      throw std::invalid_argument("transition action out of range");
    }
    seqs.push_back(record.history());
  }
  auto& cache = scratch_cache();
  load_inputs(params.shape(), seqs, cache);
  run_forward(params, cache);

  const double scale = 1.0 / static_cast<double>(batch.size());
  Matrix dq = Matrix::Zero(A, static_cast<int>(batch.size()));
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int col = static_cast<int>(i);
    const double error = cache.q(batch[i].action, col) - targets[i];
    loss += error * error * scale;
    dq(batch[i].action, col) = 2.0 * error * scale;
  }
  run_backward(params, cache, dq, gradient.data());
  return loss;
}

TrainStats train_step(QNetworkParams& params, std::span<const TransitionRecord> batch,
                      double gamma, double learning_rate, double grad_clip) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");

  const auto targets = q_targets(params, batch, gamma);
  thread_local std::vector<double> gradient;
  gradient.resize(params.size());
  TrainStats stats;
  stats.loss = loss_and_gradient(params, batch, targets, gradient);

  double norm_sq = 0.0;
  for (double g : gradient) norm_sq += g * g;
  stats.grad_norm = std::sqrt(norm_sq);
  if (!std::isfinite(stats.loss) || !std::isfinite(stats.grad_norm)) {
    throw TrainingDivergence("non-finite loss during Q-learning update (loss=" +
                             std::to_string(stats.loss) + ")");
  }
  double step = learning_rate;
  if (grad_clip > 0.0 && stats.grad_norm > grad_clip) step *= grad_clip / stats.grad_norm;
  auto values = params.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= step * gradient[i];
  return stats;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace jamnet
