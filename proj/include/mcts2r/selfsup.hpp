#ifndef MCTS2R_SELFSUP_HPP
#define MCTS2R_SELFSUP_HPP

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "mcts2r/errors.hpp"
#include "mcts2r/nn/adam.hpp"
#include "mcts2r/nn/loss.hpp"
#include "mcts2r/nn/network.hpp"
#include "mcts2r/random.hpp"
#include "mcts2r/tensor.hpp"

namespace mcts2r::selfsup {

inline constexpr std::size_t kRotations = 4;

// Counter-clockwise rotation of a [c, h, w] image by 90 * k degrees.
// out(y, x) = in(x, w - 1 - y) for k = 1.
inline Tensor rotate_image(const Tensor& img, int k) {
  if (img.rank() != 3) throw InvalidInput("rotate_image expects [c, h, w], got " + shape_string(img.shape()));
  const std::size_t c = img.extent(0), h = img.extent(1), w = img.extent(2);
  if (h != w) throw InvalidInput("rotate_image needs square images, got " + shape_string(img.shape()));
  const int turns = ((k % 4) + 4) % 4;
  Tensor out(img.shape());
  const std::size_t n = h;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = img.data() + ch * n * n;
    double* dst = out.data() + ch * n * n;
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        std::size_t sy = y, sx = x;
        switch (turns) {
          case 1: sy = x; sx = n - 1 - y; break;
          case 2: sy = n - 1 - y; sx = n - 1 - x; break;
          case 3: sy = n - 1 - x; sx = y; break;
          default: break;
        }
        dst[y * n + x] = src[sy * n + sx];
      }
    }
  }
  return out;
}

struct RotationBatch {
  Tensor images;            // [4 b, c, h, w]
  std::vector<int> labels;  // rotation index 0..3 (0, 90, 180, 270 degrees)
};

// All four rotations of every image, grouped per source image.
inline RotationBatch make_rotation_batch(const Tensor& images) {
  if (images.rank() != 4) throw InvalidInput("rotation batch expects [b, c, h, w], got " + shape_string(images.shape()));
  const std::size_t b = images.rows();
  Shape out_shape = images.shape();
  out_shape[0] = kRotations * b;
  RotationBatch batch{Tensor(out_shape), std::vector<int>(kRotations * b)};
  const Shape sample = images.row_shape();
  const std::size_t stride = images.row_size();
  for (std::size_t i = 0; i < b; ++i) {
    const Tensor src(sample, std::vector<double>(images.row(i).begin(), images.row(i).end()));
    for (std::size_t k = 0; k < kRotations; ++k) {
      const Tensor rotated = rotate_image(src, static_cast<int>(k));
      std::copy(rotated.values().begin(), rotated.values().end(), batch.images.data() + (kRotations * i + k) * stride);
      batch.labels[kRotations * i + k] = static_cast<int>(k);
    }
  }
  return batch;
}

struct PretextOptions {
  std::size_t epochs = 25;
  std::size_t batch_size = 128;  // rotated images per step
  nn::AdamConfig adam{};
};

struct PretextEpoch {
  double mean_loss = 0.0;
  double rotation_accuracy = 0.0;
};

// Trains `net` (4-way head) to predict which rotation was applied. Receives
// images only, so labels of any kind are out of reach.
inline std::vector<PretextEpoch> pretrain_rotnet(nn::Network& net, const Tensor& images, const PretextOptions& opt,
                                                 std::uint64_t seed) {
  if (net.num_classes() != kRotations) throw ConfigError("pretext network needs a 4-way head");
  const std::size_t per_step = std::max<std::size_t>(1, opt.batch_size / kRotations);
  Rng rng(seed);
  nn::AdamState adam = nn::AdamState::for_network(net, opt.adam);
  std::vector<std::size_t> order(images.rows());
  std::vector<PretextEpoch> history;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    for (std::size_t start = 0; start < order.size(); start += per_step) {
      const std::size_t end = std::min(order.size(), start + per_step);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const RotationBatch batch = make_rotation_batch(images.gather_rows(rows));
      const nn::Trace trace = net.forward_trace(batch.images);
      const auto losses = nn::per_sample_cross_entropy(trace.logits(), batch.labels);
      for (std::size_t i = 0; i < losses.size(); ++i) {
        loss_sum += losses[i];
        correct += nn::argmax(trace.logits().row(i)) == static_cast<std::size_t>(batch.labels[i]);
      }
      seen += losses.size();
      nn::adam_step(net, net.backward(trace, batch.labels), adam);
    }
    history.push_back({loss_sum / static_cast<double>(seen), static_cast<double>(correct) / static_cast<double>(seen)});
  }
  return history;
}

// Fraction of rotated copies whose rotation `net` predicts correctly.
inline double rotation_accuracy(const nn::Network& net, const Tensor& images, std::size_t chunk = 256) {
  std::size_t correct = 0, total = 0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < images.rows(); start += chunk) {
    rows.clear();
    for (std::size_t r = start; r < std::min(images.rows(), start + chunk); ++r) rows.push_back(r);
    const RotationBatch batch = make_rotation_batch(images.gather_rows(rows));
    const Tensor logits = net.forward(batch.images).logits;
    for (std::size_t i = 0; i < batch.labels.size(); ++i) {
      correct += nn::argmax(logits.row(i)) == static_cast<std::size_t>(batch.labels[i]);
    }
    total += batch.labels.size();
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

// Copies the parameters of the first `depth` trainable layers of `pretrained`
// into `target`; everything else in `target` is left as initialized.
inline void transfer_weights(const nn::Network& pretrained, nn::Network& target, std::size_t depth) {
  const auto src = pretrained.trainable_layers();
  const auto dst = target.trainable_layers();
  if (depth > src.size() || depth > dst.size()) {
    throw ConfigError("transfer depth " + std::to_string(depth) + " exceeds trainable layer count");
  }
  for (std::size_t i = 0; i < depth; ++i) {
    const nn::Layer& from = pretrained.layers()[src[i]];
    const nn::Layer& to = target.layers()[dst[i]];
    const bool compatible = from.index() == to.index() && [&] {
      if (const auto* a = std::get_if<nn::Dense>(&from)) {
        const auto& b = std::get<nn::Dense>(to);
        return a->weight.shape() == b.weight.shape();
      }
      const auto& a = std::get<nn::Conv2D>(from);
      const auto& b = std::get<nn::Conv2D>(to);
      return a.weight.shape() == b.weight.shape() && a.stride == b.stride && a.pad == b.pad;
    }();
    if (!compatible) {
      throw ConfigError("cannot transfer layer " + std::to_string(i) + ": " + nn::describe(from) + " vs " +
                        nn::describe(to));
    }
  }
  for (std::size_t i = 0; i < depth; ++i) target.layers()[dst[i]] = pretrained.layers()[src[i]];
}

}  // namespace mcts2r::selfsup

#endif  // MCTS2R_SELFSUP_HPP
