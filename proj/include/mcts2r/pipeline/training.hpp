#ifndef MCTS2R_PIPELINE_TRAINING_HPP
#define MCTS2R_PIPELINE_TRAINING_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "mcts2r/data/dataset.hpp"
#include "mcts2r/errors.hpp"
#include "mcts2r/nn/adam.hpp"
#include "mcts2r/nn/loss.hpp"
#include "mcts2r/nn/network.hpp"
#include "mcts2r/random.hpp"
#include "mcts2r/schedule.hpp"

namespace mcts2r::pipeline {

// Which of the two peer networks.
enum class Peer { p = 0, q = 1 };

// Optional hooks for observing selections and updates. Row arguments are
// dataset rows (TrainingSet::indices()), not positions.
struct Observer {
  std::function<void(Peer, std::span<const std::size_t> rows)> on_select;
  std::function<void(Peer, std::span<const std::size_t> rows)> on_update;
};

struct EpochLog {
  double mean_loss = 0.0;                  // mean CE of the tracked network over full mini-batches
  std::vector<std::size_t> selected_rows;  // tracked network's small-loss picks, in visit order
  std::vector<int> selected_labels;        // labels those picks were trained/scored with
};

// Mean CE gradient over the rows of `trace` listed in `positions`; other rows
// contribute nothing.
inline nn::Gradients backward_on(const nn::Network& net, const nn::Trace& trace, std::span<const int> labels,
                                 std::span<const std::size_t> positions) {
  const Tensor& logits = trace.logits();
  Tensor grad(logits.shape());
  const double scale = 1.0 / static_cast<double>(positions.size());
  for (const std::size_t r : positions) {
    const auto p = nn::softmax(logits.row(r));
    auto g = grad.row(r);
    for (std::size_t k = 0; k < p.size(); ++k) g[k] = p[k] * scale;
    g[static_cast<std::size_t>(labels[r])] -= scale;
  }
  return net.backward_from(trace, grad);
}

namespace detail {

inline std::vector<std::size_t> shuffled_positions(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

inline void record(EpochLog& log, const data::TrainingSet& train, std::span<const std::size_t> batch_positions,
                   std::span<const std::size_t> picked) {
  for (const std::size_t r : picked) {
    log.selected_rows.push_back(train.indices()[batch_positions[r]]);
    log.selected_labels.push_back(train.labels()[batch_positions[r]]);
  }
}

inline std::vector<std::size_t> rows_of(const data::TrainingSet& train, std::span<const std::size_t> batch_positions,
                                        std::span<const std::size_t> picked) {
  std::vector<std::size_t> rows;
  rows.reserve(picked.size());
  for (const std::size_t r : picked) rows.push_back(train.indices()[batch_positions[r]]);
  return rows;
}

}  // namespace detail

// One co-teaching epoch. Per mini-batch both networks rank the batch by their
// own loss and keep the num_keep(b, keep_fraction) smallest; then p is updated
// on q's picks and q on p's picks. Both selections are made before either
// network changes. The log tracks `tracked`.
inline EpochLog coteach_epoch(nn::Network& p, nn::Network& q, nn::AdamState& adam_p, nn::AdamState& adam_q,
                              const data::TrainingSet& train, double keep_fraction, std::size_t batch_size,
                              Rng& shuffle_rng, Peer tracked = Peer::p, const Observer* observer = nullptr) {
  const auto order = detail::shuffled_positions(train.size(), shuffle_rng);
  EpochLog log;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::span<const std::size_t> positions(order.data() + start, std::min(batch_size, order.size() - start));
    const Tensor x = train.batch(positions);
    const std::vector<int> y = train.batch_labels(positions);

    const nn::Trace trace_p = p.forward_trace(x);
    const nn::Trace trace_q = q.forward_trace(x);
    const auto loss_p = nn::per_sample_cross_entropy(trace_p.logits(), y);
    const auto loss_q = nn::per_sample_cross_entropy(trace_q.logits(), y);
    const LossSplit pick_p = select_small_loss(loss_p, keep_fraction);
    const LossSplit pick_q = select_small_loss(loss_q, keep_fraction);

    const auto& tracked_loss = tracked == Peer::p ? loss_p : loss_q;
    for (const double l : tracked_loss) loss_sum += l;
    detail::record(log, train, positions, tracked == Peer::p ? pick_p.small : pick_q.small);
    if (observer && observer->on_select) {
      observer->on_select(Peer::p, detail::rows_of(train, positions, pick_p.small));
      observer->on_select(Peer::q, detail::rows_of(train, positions, pick_q.small));
    }
    if (observer && observer->on_update) {
      observer->on_update(Peer::p, detail::rows_of(train, positions, pick_q.small));
      observer->on_update(Peer::q, detail::rows_of(train, positions, pick_p.small));
    }

    const nn::Gradients grad_p = backward_on(p, trace_p, y, pick_q.small);
    const nn::Gradients grad_q = backward_on(q, trace_q, y, pick_p.small);
    nn::adam_step(p, grad_p, adam_p);
    nn::adam_step(q, grad_q, adam_q);
  }
  log.mean_loss = train.size() ? loss_sum / static_cast<double>(train.size()) : 0.0;
  return log;
}

// Small-loss pick within one mini-batch where some members bypass selection:
// the unexempt members are ranked and num_keep(count, keep_fraction) of them
// kept; every exempt member is kept. Result is in ascending-loss order.
inline std::vector<std::size_t> select_with_exemptions(std::span<const double> losses, const std::vector<bool>& exempt,
                                                       double keep_fraction) {
  if (exempt.size() != losses.size()) throw InvalidInput("exemption mask size mismatch");
  std::vector<std::size_t> open, out;
  std::vector<double> open_losses;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!exempt[i]) {
      open.push_back(i);
      open_losses.push_back(losses[i]);
    }
  }
  std::vector<bool> take(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) take[i] = exempt[i];
  if (!open.empty()) {
    for (const std::size_t j : select_small_loss(open_losses, keep_fraction).small) take[open[j]] = true;
  }
  for (const std::size_t i : loss_order(losses)) {
    if (take[i]) out.push_back(i);
  }
  return out;
}

// One epoch of single-network small-loss training: each mini-batch keeps the
// network's own num_keep(b, keep_fraction) lowest-loss samples and updates on
// them. keep_fraction = 1 is plain mini-batch training. Members flagged in
// `exempt` (by position, optional) are always kept and do not count towards b.
inline EpochLog small_loss_epoch(nn::Network& net, nn::AdamState& adam, const data::TrainingSet& train,
                                 double keep_fraction, std::size_t batch_size, Rng& shuffle_rng,
                                 const Observer* observer = nullptr, const std::vector<bool>* exempt = nullptr) {
  if (exempt && exempt->size() != train.size()) throw InvalidInput("exemption mask size mismatch");
  const auto order = detail::shuffled_positions(train.size(), shuffle_rng);
  EpochLog log;
  double loss_sum = 0.0;
  std::vector<bool> batch_exempt;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::span<const std::size_t> positions(order.data() + start, std::min(batch_size, order.size() - start));
    const Tensor x = train.batch(positions);
    const std::vector<int> y = train.batch_labels(positions);
    const nn::Trace trace = net.forward_trace(x);
    const auto losses = nn::per_sample_cross_entropy(trace.logits(), y);
    LossSplit pick;
    if (!exempt) {
      pick = select_small_loss(losses, keep_fraction);
    } else {
      batch_exempt.assign(positions.size(), false);
      for (std::size_t i = 0; i < positions.size(); ++i) batch_exempt[i] = (*exempt)[positions[i]];
      pick.small = select_with_exemptions(losses, batch_exempt, keep_fraction);
    }
    for (const double l : losses) loss_sum += l;
    detail::record(log, train, positions, pick.small);
    if (observer && observer->on_select) observer->on_select(Peer::p, detail::rows_of(train, positions, pick.small));
    if (observer && observer->on_update) observer->on_update(Peer::p, detail::rows_of(train, positions, pick.small));
    nn::adam_step(net, backward_on(net, trace, y, pick.small), adam);
  }
  log.mean_loss = train.size() ? loss_sum / static_cast<double>(train.size()) : 0.0;
  return log;
}

// Plain supervised training on every sample: no selection machinery at all.
inline void train_supervised(nn::Network& net, nn::AdamState& adam, const data::TrainingSet& train,
                             std::size_t epochs, std::size_t batch_size, Rng& shuffle_rng) {
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto order = detail::shuffled_positions(train.size(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::span<const std::size_t> positions(order.data() + start,
                                                   std::min(batch_size, order.size() - start));
      const Tensor x = train.batch(positions);
      const std::vector<int> y = train.batch_labels(positions);
      const nn::Trace trace = net.forward_trace(x);
      nn::adam_step(net, net.backward(trace, y), adam);
    }
  }
}

struct SampleScores {
  std::vector<double> losses;
  Tensor features;  // [n, feature_dim]
};

// Per-sample loss and features for every member of `train`, in member order,
// computed in fixed-size chunks.
inline SampleScores score_samples(const nn::Network& net, const data::TrainingSet& train, std::size_t chunk = 512) {
  SampleScores out;
  out.losses.reserve(train.size());
  out.features = Tensor({train.size(), net.feature_dim()});
  std::vector<std::size_t> positions;
  for (std::size_t start = 0; start < train.size(); start += chunk) {
    positions.clear();
    for (std::size_t i = start; i < std::min(train.size(), start + chunk); ++i) positions.push_back(i);
    const nn::ForwardResult fr = net.forward(train.batch(positions));
    const auto losses = nn::per_sample_cross_entropy(fr.logits, train.batch_labels(positions));
    out.losses.insert(out.losses.end(), losses.begin(), losses.end());
    std::copy(fr.features.values().begin(), fr.features.values().end(),
              out.features.data() + start * net.feature_dim());
  }
  return out;
}

inline std::vector<int> predict(const nn::Network& net, const Tensor& images, std::size_t chunk = 1000) {
  std::vector<int> out;
  out.reserve(images.rows());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < images.rows(); start += chunk) {
    rows.clear();
    for (std::size_t r = start; r < std::min(images.rows(), start + chunk); ++r) rows.push_back(r);
    const Tensor logits = net.forward(images.gather_rows(rows)).logits;
    for (std::size_t i = 0; i < rows.size(); ++i) out.push_back(static_cast<int>(nn::argmax(logits.row(i))));
  }
  return out;
}

// Accuracy against true labels. Evaluation only.
inline double accuracy(const nn::Network& net, const data::Dataset& eval) {
  const auto predicted = predict(net, eval.images());
  const auto truth = eval.true_labels();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == truth[i];
  return predicted.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(predicted.size());
}

}  // namespace mcts2r::pipeline

#endif  // MCTS2R_PIPELINE_TRAINING_HPP
