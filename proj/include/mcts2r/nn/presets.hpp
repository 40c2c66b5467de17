#ifndef MCTS2R_NN_PRESETS_HPP
#define MCTS2R_NN_PRESETS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "mcts2r/errors.hpp"
#include "mcts2r/nn/network.hpp"
#include "mcts2r/random.hpp"

namespace mcts2r::nn {

enum class Preset { mlp, small_cnn };

inline Preset parse_preset(const std::string& name) {
  if (name == "mlp") return Preset::mlp;
  if (name == "cnn" || name == "small-cnn") return Preset::small_cnn;
  throw ConfigError("unknown architecture preset '" + name + "' (expected mlp or cnn)");
}

inline std::string to_string(Preset p) { return p == Preset::mlp ? "mlp" : "cnn"; }

struct ArchitectureOptions {
  std::vector<std::size_t> mlp_hidden = {256, 128};
  std::vector<std::size_t> cnn_channels = {16, 32, 32};
  std::size_t feature_dim = 128;
  double slope = 0.01;
};

// input -> [Flatten] -> Dense(h1) -> LReLU -> ... -> Dense(hn) -> LReLU -> Dense(K).
// The last hidden activation is the feature tap.
inline Network make_mlp(const Shape& input_shape, std::size_t num_classes, const ArchitectureOptions& opt = {}) {
  if (opt.mlp_hidden.empty()) throw ConfigError("mlp needs at least one hidden layer");
  std::vector<Layer> layers;
  if (input_shape.size() != 1) layers.emplace_back(Flatten{});
  std::size_t width = shape_volume(input_shape);
  for (const std::size_t h : opt.mlp_hidden) {
    layers.emplace_back(Dense(width, h));
    layers.emplace_back(LeakyReLU{opt.slope});
    width = h;
  }
  const std::size_t tap = layers.size() - 1;
  layers.emplace_back(Dense(width, num_classes));
  return Network(input_shape, std::move(layers), tap);
}

// Three conv blocks (3x3; strides 1, 2, 2; pad 1) followed by a feature dense
// layer and the head.
inline Network make_small_cnn(const Shape& input_shape, std::size_t num_classes,
                              const ArchitectureOptions& opt = {}) {
  if (input_shape.size() != 3) throw ConfigError("cnn preset needs [channels, height, width] input");
  if (opt.cnn_channels.size() != 3) throw ConfigError("cnn preset needs exactly 3 channel widths");
  std::vector<Layer> layers;
  std::size_t channels = input_shape[0];
  const std::size_t strides[3] = {1, 2, 2};
  for (std::size_t i = 0; i < 3; ++i) {
    layers.emplace_back(Conv2D(channels, opt.cnn_channels[i], 3, strides[i], 1));
    layers.emplace_back(LeakyReLU{opt.slope});
    channels = opt.cnn_channels[i];
  }
  Shape s = input_shape;
  for (const Layer& l : layers) s = output_shape(l, s);
  layers.emplace_back(Flatten{});
  layers.emplace_back(Dense(shape_volume(s), opt.feature_dim));
  layers.emplace_back(LeakyReLU{opt.slope});
  const std::size_t tap = layers.size() - 1;
  layers.emplace_back(Dense(opt.feature_dim, num_classes));
  return Network(input_shape, std::move(layers), tap);
}

inline Network make_network(Preset preset, const Shape& input_shape, std::size_t num_classes,
                            const ArchitectureOptions& opt = {}) {
  return preset == Preset::mlp ? make_mlp(input_shape, num_classes, opt)
                               : make_small_cnn(input_shape, num_classes, opt);
}

inline std::size_t default_transfer_depth(Preset preset) { return preset == Preset::small_cnn ? 3 : 1; }

}  // namespace mcts2r::nn

#endif  // MCTS2R_NN_PRESETS_HPP
