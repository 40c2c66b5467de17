#ifndef MCTS2R_NN_LOSS_HPP
#define MCTS2R_NN_LOSS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mcts2r/errors.hpp"
#include "mcts2r/tensor.hpp"

namespace mcts2r::nn {

inline double log_sum_exp(std::span<const double> u) {
  const double peak = *std::max_element(u.begin(), u.end());
  double sum = 0.0;
  for (const double x : u) sum += std::exp(x - peak);
  return peak + std::log(sum);
}

inline std::vector<double> softmax(std::span<const double> u) {
  std::vector<double> p(u.size());
  if (u.empty()) return p;
  const double peak = *std::max_element(u.begin(), u.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    p[k] = std::exp(u[k] - peak);
    sum += p[k];
  }
  for (double& x : p) x /= sum;
  return p;
}

// -log(exp(u[label]) / sum_k exp(u[k])), evaluated with a max shift.
inline double cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw InvalidInput("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(logits.size()) + ")");
  }
  const double loss = log_sum_exp(logits) - logits[static_cast<std::size_t>(label)];
  return loss < 0.0 ? 0.0 : loss;
}

// One loss per row of a [batch, K] logit tensor.
inline std::vector<double> per_sample_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw InvalidInput("label count does not match batch size");
  std::vector<double> losses(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) losses[i] = cross_entropy(logits.row(i), labels[i]);
  return losses;
}

// d(mean CE)/d(logits): (softmax(u) - onehot(label)) / batch.
inline Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw InvalidInput("label count does not match batch size");
  Tensor grad(logits.shape());
  const double scale = 1.0 / static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto p = softmax(logits.row(i));
    auto g = grad.row(i);
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= p.size()) {
      throw InvalidInput("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(p.size()) + ")");
    }
    for (std::size_t k = 0; k < p.size(); ++k) g[k] = p[k] * scale;
    g[static_cast<std::size_t>(labels[i])] -= scale;
  }
  return grad;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace mcts2r::nn

#endif  // MCTS2R_NN_LOSS_HPP
