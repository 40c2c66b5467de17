#ifndef MCTS2R_NN_GRAD_CHECK_HPP
#define MCTS2R_NN_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "mcts2r/nn/loss.hpp"
#include "mcts2r/nn/network.hpp"

namespace mcts2r::nn {

inline double mean_cross_entropy(const Network& net, const Tensor& batch, std::span<const int> labels) {
  const auto losses = per_sample_cross_entropy(net.forward(batch).logits, labels);
  double sum = 0.0;
  for (const double l : losses) sum += l;
  return sum / static_cast<double>(losses.size());
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t parameters_checked = 0;
};

// Compares backward() against a five-point central difference of the mean
// cross-entropy for every parameter. Relative error per parameter is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
inline GradCheckResult grad_check_detailed(Network net, const Tensor& batch, std::span<const int> labels,
                                           double h = 1e-4) {
  const Gradients analytic = net.backward(net.forward_trace(batch), labels);
  GradCheckResult result;
  auto params = net.parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t j = 0; j < params[t].size(); ++j) {
      double& w = params[t][j];
      const double original = w;
      auto loss_at = [&](double offset) {
        w = original + offset;
        return mean_cross_entropy(net, batch, labels);
      };
      const double numeric =
          (8.0 * (loss_at(h) - loss_at(-h)) - (loss_at(2.0 * h) - loss_at(-2.0 * h))) / (12.0 * h);
      w = original;
      const double a = analytic.tensors[t][j];
      const double abs_err = std::abs(a - numeric);
      const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), 1e-8});
      result.max_relative_error = std::max(result.max_relative_error, rel_err);
      result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
      ++result.parameters_checked;
    }
  }
  return result;
}

inline double grad_check(const Network& net, const Tensor& batch, std::span<const int> labels, double h = 1e-4) {
  return grad_check_detailed(net, batch, labels, h).max_relative_error;
}

}  // namespace mcts2r::nn

#endif  // MCTS2R_NN_GRAD_CHECK_HPP
