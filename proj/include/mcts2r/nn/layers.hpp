#ifndef MCTS2R_NN_LAYERS_HPP
#define MCTS2R_NN_LAYERS_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "mcts2r/errors.hpp"
#include "mcts2r/random.hpp"
#include "mcts2r/tensor.hpp"

namespace mcts2r::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// y = x W^T + b, W is [out, in].
struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  Tensor weight;
  Tensor bias;

  Dense() = default;
  Dense(std::size_t in_features, std::size_t out_features)
      : in(in_features), out(out_features), weight({out_features, in_features}), bias({out_features}) {}

  static Dense identity(std::size_t n) {
    Dense d(n, n);
    for (std::size_t i = 0; i < n; ++i) d.weight[i * n + i] = 1.0;
    return d;
  }
};

// Cross-correlation over [channels, height, width] inputs, weight is
// [out_channels, in_channels, kernel, kernel].
struct Conv2D {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  Tensor weight;
  Tensor bias;

  Conv2D() = default;
  Conv2D(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t s = 1, std::size_t p = 0)
      : in_channels(in_ch), out_channels(out_ch), kernel(k), stride(s), pad(p),
        weight({out_ch, in_ch, k, k}), bias({out_ch}) {}

  std::size_t patch_size() const { return in_channels * kernel * kernel; }
};

struct LeakyReLU {
  double slope = 0.01;
};

struct Flatten {};

using Layer = std::variant<Dense, Conv2D, LeakyReLU, Flatten>;

inline bool is_trainable(const Layer& layer) {
  return std::holds_alternative<Dense>(layer) || std::holds_alternative<Conv2D>(layer);
}

inline std::string describe(const Layer& layer) {
  struct {
    std::string operator()(const Dense& d) const {
      return "Dense(" + std::to_string(d.in) + "," + std::to_string(d.out) + ")";
    }
    std::string operator()(const Conv2D& c) const {
      return "Conv2D(" + std::to_string(c.in_channels) + "," + std::to_string(c.out_channels) + ",k" +
             std::to_string(c.kernel) + ",s" + std::to_string(c.stride) + ",p" + std::to_string(c.pad) + ")";
    }
    std::string operator()(const LeakyReLU& a) const { return "LeakyReLU(" + std::to_string(a.slope) + ")"; }
    std::string operator()(const Flatten&) const { return "Flatten"; }
  } visitor;
  return std::visit(visitor, layer);
}

// Per-sample output shape, or InvalidInput when the layer cannot accept `in`.
inline Shape output_shape(const Layer& layer, const Shape& in) {
  struct {
    const Shape& in;
    Shape operator()(const Dense& d) const {
      if (in.size() != 1 || in[0] != d.in) {
        throw InvalidInput("Dense expects [" + std::to_string(d.in) + "], got " + shape_string(in));
      }
      return {d.out};
    }
    Shape operator()(const Conv2D& c) const {
      if (in.size() != 3 || in[0] != c.in_channels) {
        throw InvalidInput("Conv2D expects [" + std::to_string(c.in_channels) + ",h,w], got " + shape_string(in));
      }
      if (c.kernel == 0 || c.stride == 0) throw InvalidInput("Conv2D kernel and stride must be positive");
      if (in[1] + 2 * c.pad < c.kernel || in[2] + 2 * c.pad < c.kernel) {
        throw InvalidInput("Conv2D kernel larger than padded input " + shape_string(in));
      }
      return {c.out_channels, (in[1] + 2 * c.pad - c.kernel) / c.stride + 1,
              (in[2] + 2 * c.pad - c.kernel) / c.stride + 1};
    }
    Shape operator()(const LeakyReLU&) const { return in; }
    Shape operator()(const Flatten&) const { return {shape_volume(in)}; }
  } visitor{in};
  return std::visit(visitor, layer);
}

namespace detail {

// col is [patch_size, oh*ow] for one sample.
inline void im2col(const Conv2D& c, const double* image, std::size_t h, std::size_t w, std::size_t oh,
                   std::size_t ow, double* col) {
  const std::size_t positions = oh * ow;
  for (std::size_t ch = 0; ch < c.in_channels; ++ch) {
    for (std::size_t ky = 0; ky < c.kernel; ++ky) {
      for (std::size_t kx = 0; kx < c.kernel; ++kx) {
        double* dst = col + ((ch * c.kernel + ky) * c.kernel + kx) * positions;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * c.stride + ky) - static_cast<std::ptrdiff_t>(c.pad);
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * c.stride + kx) - static_cast<std::ptrdiff_t>(c.pad);
            const bool inside = y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(h) &&
                                x < static_cast<std::ptrdiff_t>(w);
            dst[oy * ow + ox] = inside ? image[(ch * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)]
                                       : 0.0;
          }
        }
      }
    }
  }
}

inline void col2im_add(const Conv2D& c, const double* col, std::size_t h, std::size_t w, std::size_t oh,
                       std::size_t ow, double* image) {
  const std::size_t positions = oh * ow;
  for (std::size_t ch = 0; ch < c.in_channels; ++ch) {
    for (std::size_t ky = 0; ky < c.kernel; ++ky) {
      for (std::size_t kx = 0; kx < c.kernel; ++kx) {
        const double* src = col + ((ch * c.kernel + ky) * c.kernel + kx) * positions;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * c.stride + ky) - static_cast<std::ptrdiff_t>(c.pad);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * c.stride + kx) - static_cast<std::ptrdiff_t>(c.pad);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) continue;
            image[(ch * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)] += src[oy * ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

// Forward for a batch whose rows have per-sample shape `in`.
inline Tensor layer_forward(const Layer& layer, const Tensor& x, const Shape& in) {
  const std::size_t batch = x.rows();
  Shape out_sample = output_shape(layer, in);
  Shape out_shape{batch};
  out_shape.insert(out_shape.end(), out_sample.begin(), out_sample.end());
  Tensor y(out_shape);

  if (const auto* d = std::get_if<Dense>(&layer)) {
    ConstMatrixMap X(x.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(d->in));
    ConstMatrixMap W(d->weight.data(), static_cast<Eigen::Index>(d->out), static_cast<Eigen::Index>(d->in));
    Eigen::Map<const Eigen::RowVectorXd> b(d->bias.data(), static_cast<Eigen::Index>(d->out));
    MatrixMap Y(y.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(d->out));
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b;
  } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
    const std::size_t oh = out_sample[1], ow = out_sample[2], positions = oh * ow;
    RowMatrix col(static_cast<Eigen::Index>(c->patch_size()), static_cast<Eigen::Index>(positions));
    ConstMatrixMap W(c->weight.data(), static_cast<Eigen::Index>(c->out_channels),
                     static_cast<Eigen::Index>(c->patch_size()));
    Eigen::Map<const Eigen::VectorXd> b(c->bias.data(), static_cast<Eigen::Index>(c->out_channels));
    for (std::size_t s = 0; s < batch; ++s) {
      detail::im2col(*c, x.row(s).data(), in[1], in[2], oh, ow, col.data());
      MatrixMap Y(y.row(s).data(), static_cast<Eigen::Index>(c->out_channels), static_cast<Eigen::Index>(positions));
      Y.noalias() = W * col;
      Y.colwise() += b;
    }
  } else if (const auto* a = std::get_if<LeakyReLU>(&layer)) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : a->slope * x[i];
  } else {
    std::copy(x.values().begin(), x.values().end(), y.values().begin());
  }
  return y;
}

// Given dL/dy, accumulates parameter gradients into (grad_weight, grad_bias)
// when the layer is trainable and returns dL/dx.
inline Tensor layer_backward(const Layer& layer, const Tensor& x, const Shape& in, const Tensor& grad_y,
                             Tensor* grad_weight, Tensor* grad_bias) {
  const std::size_t batch = x.rows();
  Tensor grad_x(x.shape());

  if (const auto* d = std::get_if<Dense>(&layer)) {
    const auto B = static_cast<Eigen::Index>(batch);
    const auto I = static_cast<Eigen::Index>(d->in);
    const auto O = static_cast<Eigen::Index>(d->out);
    ConstMatrixMap X(x.data(), B, I);
    ConstMatrixMap W(d->weight.data(), O, I);
    ConstMatrixMap G(grad_y.data(), B, O);
    MatrixMap(grad_weight->data(), O, I).noalias() += G.transpose() * X;
    Eigen::Map<Eigen::RowVectorXd>(grad_bias->data(), O) += G.colwise().sum();
    MatrixMap(grad_x.data(), B, I).noalias() = G * W;
  } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
    const Shape out_sample = output_shape(layer, in);
    const std::size_t oh = out_sample[1], ow = out_sample[2], positions = oh * ow;
    const auto P = static_cast<Eigen::Index>(c->patch_size());
    const auto O = static_cast<Eigen::Index>(c->out_channels);
    const auto Q = static_cast<Eigen::Index>(positions);
    RowMatrix col(P, Q);
    RowMatrix grad_col(P, Q);
    ConstMatrixMap W(c->weight.data(), O, P);
    MatrixMap GW(grad_weight->data(), O, P);
    Eigen::Map<Eigen::VectorXd> Gb(grad_bias->data(), O);
    for (std::size_t s = 0; s < batch; ++s) {
      detail::im2col(*c, x.row(s).data(), in[1], in[2], oh, ow, col.data());
      ConstMatrixMap G(grad_y.row(s).data(), O, Q);
      GW.noalias() += G * col.transpose();
      Gb += G.rowwise().sum();
      grad_col.noalias() = W.transpose() * G;
      detail::col2im_add(*c, grad_col.data(), in[1], in[2], oh, ow, grad_x.row(s).data());
    }
  } else if (const auto* a = std::get_if<LeakyReLU>(&layer)) {
    for (std::size_t i = 0; i < x.size(); ++i) grad_x[i] = x[i] > 0.0 ? grad_y[i] : a->slope * grad_y[i];
  } else {
    std::copy(grad_y.values().begin(), grad_y.values().end(), grad_x.values().begin());
  }
  return grad_x;
}

// Uniform fan-in scaled initialization, bound sqrt(6 / fan_in); biases start at 0.
inline void initialize(Layer& layer, Rng& rng) {
  auto fill = [&rng](Tensor& w, Tensor& b, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
    for (double& v : b.values()) v = 0.0;
  };
  if (auto* d = std::get_if<Dense>(&layer)) {
    fill(d->weight, d->bias, d->in);
  } else if (auto* c = std::get_if<Conv2D>(&layer)) {
    fill(c->weight, c->bias, c->patch_size());
  }
}

}  // namespace mcts2r::nn

#endif  // MCTS2R_NN_LAYERS_HPP
