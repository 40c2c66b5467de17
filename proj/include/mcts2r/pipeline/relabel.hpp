#ifndef MCTS2R_PIPELINE_RELABEL_HPP
#define MCTS2R_PIPELINE_RELABEL_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mcts2r/data/dataset.hpp"
#include "mcts2r/errors.hpp"
#include "mcts2r/nn/loss.hpp"
#include "mcts2r/nn/network.hpp"
#include "mcts2r/pipeline/training.hpp"
#include "mcts2r/schedule.hpp"
#include "mcts2r/tensor.hpp"

namespace mcts2r::pipeline {

// Whole-set loss split of one network. Indices are positions in the
// TrainingSet that was scored.
struct LossCollection {
  LossSplit split;
  SampleScores scores;
};

// Scores every member in one deterministic pass and splits the whole set with
// the epoch-level keep fraction.
inline LossCollection collect_loss_split(const nn::Network& net, const data::TrainingSet& train,
                                         double keep_fraction, std::size_t epoch = 0) {
  LossCollection out;
  out.scores = score_samples(net, train);
  out.split = select_small_loss(out.scores.losses, keep_fraction, epoch);
  return out;
}

struct MeanSet {
  Tensor means;                       // [K, feature_dim]; rows of absent classes are zero
  std::vector<std::size_t> support;   // samples averaged per class
  std::vector<bool> present;          // class has a mean
  std::vector<bool> fallback;         // mean taken from the whole set, not the small-loss set

  std::size_t num_classes() const { return support.size(); }
  std::vector<std::size_t> fallback_classes() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < fallback.size(); ++k) {
      if (fallback[k]) out.push_back(k);
    }
    return out;
  }
};

// Per class k, the mean feature of the first (lowest-loss) `top_n` small-loss
// samples labelled k. A class with no small-loss member falls back to its
// `top_n` lowest-loss samples over the whole set (small then large order); a
// class with no samples at all has no mean.
inline MeanSet class_means(const Tensor& features, std::span<const int> labels, const LossSplit& split,
                           std::size_t top_n, std::size_t num_classes) {
  if (top_n == 0) throw ConfigError("top-N for class means must be >= 1");
  if (features.rows() != labels.size()) throw InvalidInput("feature/label count mismatch");
  const std::size_t dim = features.row_size();
  MeanSet m{Tensor({num_classes, dim}), std::vector<std::size_t>(num_classes, 0),
            std::vector<bool>(num_classes, false), std::vector<bool>(num_classes, false)};

  auto accumulate = [&](std::span<const std::size_t> order) {
    for (const std::size_t i : order) {
      const auto k = static_cast<std::size_t>(labels[i]);
      if (k >= num_classes) throw InvalidInput("label out of range in class_means");
      if (m.support[k] >= top_n) continue;
      auto row = m.means.row(k);
      const auto f = features.row(i);
      for (std::size_t a = 0; a < dim; ++a) row[a] += f[a];
      ++m.support[k];
    }
  };
  accumulate(split.small);
  std::vector<bool> from_small(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) from_small[k] = m.support[k] > 0;
  // Only classes without any small-loss member may draw from the large set.
  for (const std::size_t i : split.large) {
    const auto k = static_cast<std::size_t>(labels[i]);
    if (k >= num_classes) throw InvalidInput("label out of range in class_means");
    if (from_small[k] || m.support[k] >= top_n) continue;
    auto row = m.means.row(k);
    const auto f = features.row(i);
    for (std::size_t a = 0; a < dim; ++a) row[a] += f[a];
    ++m.support[k];
    m.fallback[k] = true;
  }
  for (std::size_t k = 0; k < num_classes; ++k) {
    m.present[k] = m.support[k] > 0;
    if (!m.present[k]) continue;
    for (double& v : m.means.row(k)) v /= static_cast<double>(m.support[k]);
  }
  return m;
}

struct RelabelResult {
  std::vector<int> pseudo_labels;
  std::vector<double> confidences;
  std::vector<bool> kept;  // confidence >= kappa, filled by build_augmented
};

// softmax(-d) over the classes that have a mean; absent classes get 0.
inline std::vector<double> similarity_from_distances(std::span<const double> distances,
                                                     const std::vector<bool>& present) {
  std::vector<double> neg;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    if (present[k]) neg.push_back(-distances[k]);
  }
  const auto p = nn::softmax(neg);
  std::vector<double> out(distances.size(), 0.0);
  for (std::size_t k = 0, j = 0; k < distances.size(); ++k) {
    if (present[k]) out[k] = p[j++];
  }
  return out;
}

// Nearest-mean pseudo-labels: Euclidean distance to every class mean,
// similarity softmax(-d), label = argmax (lowest class on ties), confidence =
// max similarity.
inline RelabelResult relabel(const Tensor& large_features, const MeanSet& means) {
  const std::size_t dim = means.means.row_size();
  if (large_features.rows() > 0 && large_features.row_size() != dim) {
    throw InvalidInput("feature dim " + std::to_string(large_features.row_size()) + " != mean dim " +
                       std::to_string(dim));
  }
  const std::size_t K = means.num_classes();
  RelabelResult r;
  r.pseudo_labels.reserve(large_features.rows());
  r.confidences.reserve(large_features.rows());
  std::vector<double> d(K);
  for (std::size_t i = 0; i < large_features.rows(); ++i) {
    const auto f = large_features.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      const auto mu = means.means.row(k);
      double s = 0.0;
      for (std::size_t a = 0; a < dim; ++a) s += (f[a] - mu[a]) * (f[a] - mu[a]);
      d[k] = std::sqrt(s);
    }
    const auto sim = similarity_from_distances(d, means.present);
    const std::size_t best = nn::argmax(sim);
    r.pseudo_labels.push_back(static_cast<int>(best));
    r.confidences.push_back(sim[best]);
  }
  r.kept.assign(r.pseudo_labels.size(), false);
  return r;
}

enum class Provenance { small, relabeled };

// D^aug = D^s (observed labels) + confident large-loss samples (pseudo-labels).
// Positions refer to the scored TrainingSet.
struct AugmentedSet {
  std::vector<std::size_t> positions;
  std::vector<int> labels;
  std::vector<Provenance> provenance;

  std::size_t size() const { return positions.size(); }
  std::size_t count(Provenance p) const {
    std::size_t n = 0;
    for (const auto v : provenance) n += v == p;
    return n;
  }

  data::TrainingSet as_training_set(const data::TrainingSet& train) const {
    std::vector<std::size_t> rows(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) rows[i] = train.indices()[positions[i]];
    return train.with_members(std::move(rows), labels);
  }
};

inline AugmentedSet build_augmented(const data::TrainingSet& train, const LossSplit& split, RelabelResult& relabels,
                                    double kappa) {
  if (relabels.pseudo_labels.size() != split.large.size()) {
    throw InvalidInput("relabel result does not match the large-loss set");
  }
  AugmentedSet aug;
  for (const std::size_t pos : split.small) {
    aug.positions.push_back(pos);
    aug.labels.push_back(train.labels()[pos]);
    aug.provenance.push_back(Provenance::small);
  }
  relabels.kept.assign(split.large.size(), false);
  for (std::size_t i = 0; i < split.large.size(); ++i) {
    if (relabels.confidences[i] >= kappa) {
      relabels.kept[i] = true;
      aug.positions.push_back(split.large[i]);
      aug.labels.push_back(relabels.pseudo_labels[i]);
      aug.provenance.push_back(Provenance::relabeled);
    }
  }
  return aug;
}

}  // namespace mcts2r::pipeline

#endif  // MCTS2R_PIPELINE_RELABEL_HPP
