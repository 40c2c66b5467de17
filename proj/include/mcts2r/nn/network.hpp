#ifndef MCTS2R_NN_NETWORK_HPP
#define MCTS2R_NN_NETWORK_HPP

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mcts2r/errors.hpp"
#include "mcts2r/nn/layers.hpp"
#include "mcts2r/nn/loss.hpp"
#include "mcts2r/random.hpp"
#include "mcts2r/tensor.hpp"

namespace mcts2r::nn {

struct ForwardResult {
  Tensor logits;    // [batch, K]
  Tensor features;  // [batch, feature_dim]
};

// Activations kept from a forward pass for the backward pass.
// activations[0] is the input, activations[i + 1] the output of layer i.
struct Trace {
  std::vector<Tensor> activations;

  const Tensor& logits() const { return activations.back(); }
};

// One tensor per parameter, in Network::parameters() order.
struct Gradients {
  std::vector<Tensor> tensors;
};

// Ordered layer stack ending in a Dense head. The output of layer
// `feature_tap` (flattened) is the feature vector f.
class Network {
 public:
  Network() = default;

  Network(Shape input_shape, std::vector<Layer> layers, std::size_t feature_tap)
      : input_shape_(std::move(input_shape)), layers_(std::move(layers)), feature_tap_(feature_tap) {
    if (layers_.empty() || !std::holds_alternative<Dense>(layers_.back())) {
      throw ConfigError("network must end with a Dense head");
    }
    if (feature_tap_ + 1 >= layers_.size()) throw ConfigError("feature tap must precede the head");
    shapes_.push_back(input_shape_);
    for (const Layer& layer : layers_) {
      try {
        shapes_.push_back(output_shape(layer, shapes_.back()));
      } catch (const InvalidInput& e) {
        throw ConfigError(std::string("layer shapes do not compose: ") + e.what());
      }
    }
  }

  const Shape& input_shape() const noexcept { return input_shape_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  std::size_t feature_tap() const noexcept { return feature_tap_; }
  std::size_t num_classes() const { return std::get<Dense>(layers_.back()).out; }
  std::size_t feature_dim() const { return shape_volume(shapes_[feature_tap_ + 1]); }

  // Indices into layers() of Dense/Conv2D layers, in order.
  std::vector<std::size_t> trainable_layers() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (is_trainable(layers_[i])) idx.push_back(i);
    }
    return idx;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.size();
    return n;
  }

  // Weight then bias for each trainable layer.
  std::vector<std::span<double>> parameters() {
    std::vector<std::span<double>> out;
    for (Layer& layer : layers_) {
      if (auto* d = std::get_if<Dense>(&layer)) {
        out.push_back(d->weight.values());
        out.push_back(d->bias.values());
      } else if (auto* c = std::get_if<Conv2D>(&layer)) {
        out.push_back(c->weight.values());
        out.push_back(c->bias.values());
      }
    }
    return out;
  }

  std::vector<std::span<const double>> parameters() const {
    std::vector<std::span<const double>> out;
    for (const Layer& layer : layers_) {
      if (const auto* d = std::get_if<Dense>(&layer)) {
        out.push_back(d->weight.values());
        out.push_back(d->bias.values());
      } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
        out.push_back(c->weight.values());
        out.push_back(c->bias.values());
      }
    }
    return out;
  }

  void initialize(Rng& rng) {
    for (Layer& layer : layers_) nn::initialize(layer, rng);
  }

  Trace forward_trace(const Tensor& batch) const {
    check_batch(batch);
    Trace trace;
    trace.activations.reserve(layers_.size() + 1);
    trace.activations.push_back(batch);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      trace.activations.push_back(layer_forward(layers_[i], trace.activations.back(), shapes_[i]));
    }
    return trace;
  }

  ForwardResult forward(const Tensor& batch) const {
    check_batch(batch);
    ForwardResult result;
    Tensor current = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      current = layer_forward(layers_[i], current, shapes_[i]);
      if (i == feature_tap_) result.features = current.reshaped({batch.rows(), feature_dim()});
    }
    result.logits = std::move(current);
    return result;
  }

  Tensor features(const Trace& trace) const {
    return trace.activations[feature_tap_ + 1].reshaped({trace.activations[0].rows(), feature_dim()});
  }

  // Gradients for an arbitrary upstream gradient on the logits.
  Gradients backward_from(const Trace& trace, const Tensor& grad_logits) const {
    Gradients grads;
    std::vector<std::size_t> slot(layers_.size(), 0);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (const auto* d = std::get_if<Dense>(&layers_[i])) {
        slot[i] = grads.tensors.size();
        grads.tensors.emplace_back(d->weight.shape());
        grads.tensors.emplace_back(d->bias.shape());
      } else if (const auto* c = std::get_if<Conv2D>(&layers_[i])) {
        slot[i] = grads.tensors.size();
        grads.tensors.emplace_back(c->weight.shape());
        grads.tensors.emplace_back(c->bias.shape());
      }
    }
    Tensor grad = grad_logits;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      Tensor* gw = is_trainable(layers_[i]) ? &grads.tensors[slot[i]] : nullptr;
      Tensor* gb = is_trainable(layers_[i]) ? &grads.tensors[slot[i] + 1] : nullptr;
      grad = layer_backward(layers_[i], trace.activations[i], shapes_[i], grad, gw, gb);
    }
    return grads;
  }

  // Gradient of the batch-mean cross-entropy.
  Gradients backward(const Trace& trace, std::span<const int> labels) const {
    return backward_from(trace, cross_entropy_grad(trace.logits(), labels));
  }

  friend bool operator==(const Network& a, const Network& b) {
    return a.input_shape_ == b.input_shape_ && a.feature_tap_ == b.feature_tap_ && a.parameters_equal(b);
  }

  bool parameters_equal(const Network& other) const {
    const auto mine = parameters();
    const auto theirs = other.parameters();
    if (mine.size() != theirs.size()) return false;
    for (std::size_t i = 0; i < mine.size(); ++i) {
      if (!std::equal(mine[i].begin(), mine[i].end(), theirs[i].begin(), theirs[i].end())) return false;
    }
    return true;
  }

 private:
  void check_batch(const Tensor& batch) const {
    if (batch.rank() == 0 || batch.row_shape() != input_shape_) {
      throw InvalidInput("batch of per-sample shape " + shape_string(batch.row_shape()) +
                         " does not match network input " + shape_string(input_shape_));
    }
  }

  Shape input_shape_;
  std::vector<Layer> layers_;
  std::size_t feature_tap_ = 0;
  std::vector<Shape> shapes_;
};

}  // namespace mcts2r::nn

#endif  // MCTS2R_NN_NETWORK_HPP
