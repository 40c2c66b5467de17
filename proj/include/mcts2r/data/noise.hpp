#ifndef MCTS2R_DATA_NOISE_HPP
#define MCTS2R_DATA_NOISE_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mcts2r/data/dataset.hpp"
#include "mcts2r/errors.hpp"
#include "mcts2r/random.hpp"
#include "mcts2r/tensor.hpp"

namespace mcts2r::data {

enum class NoiseKind { symmetric, pairflip };

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "symmetric" || s == "symmetry") return NoiseKind::symmetric;
  if (s == "pairflip" || s == "pair") return NoiseKind::pairflip;
  throw ConfigError("unknown noise kind '" + s + "' (expected symmetric or pairflip)");
}

inline std::string to_string(NoiseKind k) { return k == NoiseKind::symmetric ? "symmetric" : "pairflip"; }

// Row-stochastic K x K matrix; entry (i, j) is the probability that a sample of
// true class i is observed with label j.
struct NoiseMatrix {
  NoiseKind kind = NoiseKind::symmetric;
  double rate = 0.0;
  std::size_t num_classes = 0;
  Tensor probabilities;

  double operator()(std::size_t i, std::size_t j) const { return probabilities[i * num_classes + j]; }
};

// symmetric: diagonal 1 - rate, rate / (K - 1) elsewhere.
// pairflip:  diagonal 1 - rate, rate on (i, (i + 1) mod K).
inline NoiseMatrix build_noise_matrix(NoiseKind kind, double rate, std::size_t num_classes) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("noise rate must lie in [0, 1), got " + std::to_string(rate));
  if (num_classes < 2) throw ConfigError("noise matrix needs K >= 2");
  NoiseMatrix m{kind, rate, num_classes, Tensor({num_classes, num_classes})};
  const std::size_t K = num_classes;
  for (std::size_t i = 0; i < K; ++i) {
    if (kind == NoiseKind::symmetric) {
      const double off = rate / static_cast<double>(K - 1);
      for (std::size_t j = 0; j < K; ++j) m.probabilities[i * K + j] = off;
    }
    m.probabilities[i * K + i] = 1.0 - rate;
    if (kind == NoiseKind::pairflip) m.probabilities[i * K + (i + 1) % K] = rate;
  }
  return m;
}

// Draws each observed label from row P[true label]. Only train splits are
// accepted; images and true labels are shared unchanged.
inline Dataset corrupt_labels(const Dataset& dataset, const NoiseMatrix& noise, std::uint64_t seed) {
  if (dataset.num_classes() != noise.num_classes) {
    throw InvalidInput("noise matrix is " + std::to_string(noise.num_classes) + "x" +
                       std::to_string(noise.num_classes) + " but dataset has K=" +
                       std::to_string(dataset.num_classes()));
  }
  if (dataset.split() == Split::test) throw InvalidInput("test split is never corrupted");
  Rng rng(seed);
  const auto truth = dataset.true_labels();
  const std::size_t K = noise.num_classes;
  std::vector<int> given(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto row = static_cast<std::size_t>(truth[i]);
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t pick = K - 1;
    for (std::size_t j = 0; j < K; ++j) {
      cumulative += noise(row, j);
      if (u < cumulative) {
        pick = j;
        break;
      }
    }
    // Zero-probability columns can only be reached through rounding in the
    // last bucket; fall back to the last column with positive mass.
    while (noise(row, pick) == 0.0 && pick > 0) --pick;
    given[i] = static_cast<int>(pick);
  }
  return dataset.with_given_labels(std::move(given));
}

}  // namespace mcts2r::data

#endif  // MCTS2R_DATA_NOISE_HPP
