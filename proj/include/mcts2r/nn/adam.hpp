#ifndef MCTS2R_NN_ADAM_HPP
#define MCTS2R_NN_ADAM_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mcts2r/errors.hpp"
#include "mcts2r/nn/network.hpp"

namespace mcts2r::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : config(cfg) {}

  static AdamState for_network(const Network& net, AdamConfig cfg = {}) {
    AdamState s(cfg);
    for (const auto& p : net.parameters()) {
      s.m.emplace_back(p.size(), 0.0);
      s.v.emplace_back(p.size(), 0.0);
    }
    return s;
  }
};

// Bias-corrected Adam. Moments are allocated lazily on the first step.
inline void adam_step(std::span<const std::span<double>> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size()) throw InvalidInput("parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw InvalidInput("optimizer state does not match parameters");

  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    const auto g = grads[i].values();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (g.size() != p.size() || m.size() != p.size()) throw InvalidInput("gradient shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

inline void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  const auto params = net.parameters();
  adam_step(std::span<const std::span<double>>(params), std::span<const Tensor>(grads.tensors), state);
}

}  // namespace mcts2r::nn

#endif  // MCTS2R_NN_ADAM_HPP
