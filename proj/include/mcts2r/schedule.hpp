#ifndef MCTS2R_SCHEDULE_HPP
#define MCTS2R_SCHEDULE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mcts2r/errors.hpp"

namespace mcts2r {

struct Schedule {
  double noise_rate = 0.5;  // assumed corruption rate used by the schedule
  std::size_t ramp_epochs = 10;
  std::size_t update_epoch = 30;
  std::size_t max_epochs = 200;

  // Rate and ramp only; enough for runs that never re-label.
  void validate_ramp() const {
    if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw ConfigError("schedule noise rate must lie in [0, 1)");
    if (ramp_epochs < 1) throw ConfigError("ramp epochs T_k must be >= 1");
  }

  void validate() const {
    validate_ramp();
    if (update_epoch < ramp_epochs) throw ConfigError("T_update must be >= T_k");
    if (update_epoch >= max_epochs) throw ConfigError("T_update must be < T_max");
  }
};

// Fraction of each mini-batch kept for the update at epoch T:
// 1 - min(T / T_k * rate, rate).
inline double forget_rate(double epoch, double noise_rate, double ramp_epochs) {
  return 1.0 - std::min(epoch / ramp_epochs * noise_rate, noise_rate);
}

inline double forget_rate(std::size_t epoch, const Schedule& s) {
  return forget_rate(static_cast<double>(epoch), s.noise_rate, static_cast<double>(s.ramp_epochs));
}

// ceil(R * batch), clamped to [1, batch].
inline std::size_t num_keep(std::size_t batch_size, double keep_fraction) {
  if (batch_size == 0) return 0;
  const double raw = std::ceil(keep_fraction * static_cast<double>(batch_size) - 1e-9);
  const auto n = static_cast<std::size_t>(std::max(raw, 1.0));
  return std::min(n, batch_size);
}

struct LossSplit {
  std::vector<std::size_t> small;  // ascending loss
  std::vector<std::size_t> large;  // ascending loss
  std::size_t epoch = 0;
};

// Ascending-loss order, ties broken by ascending index.
inline std::vector<std::size_t> loss_order(std::span<const double> losses) {
  for (const double l : losses) {
    if (std::isnan(l)) throw InvalidInput("NaN loss passed to small-loss selection");
  }
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  return order;
}

inline LossSplit select_small_loss(std::span<const double> losses, double keep_fraction, std::size_t epoch = 0) {
  const auto order = loss_order(losses);
  const std::size_t keep = num_keep(losses.size(), keep_fraction);
  LossSplit split;
  split.epoch = epoch;
  split.small.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  split.large.assign(order.begin() + static_cast<std::ptrdiff_t>(keep), order.end());
  return split;
}

}  // namespace mcts2r

#endif  // MCTS2R_SCHEDULE_HPP
