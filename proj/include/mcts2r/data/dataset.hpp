#ifndef MCTS2R_DATA_DATASET_HPP
#define MCTS2R_DATA_DATASET_HPP

#include <atomic>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcts2r/errors.hpp"
#include "mcts2r/tensor.hpp"

namespace mcts2r::data {

enum class Split { train, test };

inline std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

// Images plus labels as the learner sees them. Training code consumes only
// this view; it never carries hidden true labels.
class TrainingSet {
 public:
  TrainingSet() = default;
  TrainingSet(std::shared_ptr<const Tensor> images, std::vector<std::size_t> indices, std::vector<int> labels)
      : images_(std::move(images)), indices_(std::move(indices)), labels_(std::move(labels)) {
    if (indices_.size() != labels_.size()) throw InvalidInput("training set index/label count mismatch");
  }

  std::size_t size() const noexcept { return indices_.size(); }
  const Tensor& images() const { return *images_; }
  // Dataset row of each member.
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::span<const int> labels() const noexcept { return labels_; }

  // Images of the members at `positions` (positions index into this set).
  Tensor batch(std::span<const std::size_t> positions) const {
    std::vector<std::size_t> rows(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) rows[i] = indices_.at(positions[i]);
    return images_->gather_rows(rows);
  }

  // Another member list over the same images.
  TrainingSet with_members(std::vector<std::size_t> rows, std::vector<int> labels) const {
    return TrainingSet(images_, std::move(rows), std::move(labels));
  }

  std::vector<int> batch_labels(std::span<const std::size_t> positions) const {
    std::vector<int> out(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) out[i] = labels_.at(positions[i]);
    return out;
  }

 private:
  std::shared_ptr<const Tensor> images_;
  std::vector<std::size_t> indices_;
  std::vector<int> labels_;
};

// Immutable labelled dataset. True labels and corruption flags are hidden:
// every read through true_labels()/corrupted() is counted so tests can assert
// that training code paths never touch them.
class Dataset {
 public:
  Dataset() = default;

  Dataset(Tensor images, std::vector<int> labels, std::size_t num_classes, Split split)
      : images_(std::make_shared<const Tensor>(std::move(images))),
        given_(labels),
        true_(std::move(labels)),
        num_classes_(num_classes),
        split_(split) {
    if (images_->rows() != true_.size()) throw InvalidInput("image count does not match label count");
    if (num_classes_ < 2) throw InvalidInput("need at least 2 classes");
    for (const int l : true_) {
      if (l < 0 || static_cast<std::size_t>(l) >= num_classes_) {
        throw InvalidInput("label " + std::to_string(l) + " outside [0, " + std::to_string(num_classes_) + ")");
      }
    }
  }

  std::size_t size() const noexcept { return true_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  Split split() const noexcept { return split_; }
  const Tensor& images() const { return *images_; }
  std::shared_ptr<const Tensor> shared_images() const { return images_; }
  Shape sample_shape() const { return images_->row_shape(); }
  std::span<const int> given_labels() const noexcept { return given_; }

  std::span<const int> true_labels() const {
    ++audit_->truth_reads;
    return true_;
  }

  std::vector<bool> corrupted() const {
    ++audit_->truth_reads;
    std::vector<bool> flags(true_.size());
    for (std::size_t i = 0; i < true_.size(); ++i) flags[i] = given_[i] != true_[i];
    return flags;
  }

  std::size_t truth_reads() const noexcept { return audit_->truth_reads.load(); }

  // Same images and true labels, new observed labels. Only the train split
  // may carry noise.
  Dataset with_given_labels(std::vector<int> given) const {
    if (split_ == Split::test) throw InvalidInput("test split labels cannot be corrupted");
    if (given.size() != given_.size()) throw InvalidInput("label count mismatch");
    for (const int l : given) {
      if (l < 0 || static_cast<std::size_t>(l) >= num_classes_) throw InvalidInput("given label out of range");
    }
    Dataset out = *this;
    out.given_ = std::move(given);
    out.audit_ = std::make_shared<Audit>();
    return out;
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.images_ = std::make_shared<const Tensor>(images_->gather_rows(rows));
    out.num_classes_ = num_classes_;
    out.split_ = split_;
    for (const std::size_t r : rows) {
      out.given_.push_back(given_.at(r));
      out.true_.push_back(true_.at(r));
    }
    return out;
  }

  // All samples with their observed labels.
  TrainingSet training_set() const {
    std::vector<std::size_t> idx(size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return TrainingSet(images_, std::move(idx), given_);
  }

 private:
  struct Audit {
    std::atomic<std::size_t> truth_reads{0};
  };

  std::shared_ptr<const Tensor> images_ = std::make_shared<const Tensor>();
  std::vector<int> given_;
  std::vector<int> true_;
  std::size_t num_classes_ = 0;
  Split split_ = Split::train;
  std::shared_ptr<Audit> audit_ = std::make_shared<Audit>();
};

}  // namespace mcts2r::data

#endif  // MCTS2R_DATA_DATASET_HPP
