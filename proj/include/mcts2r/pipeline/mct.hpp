#ifndef MCTS2R_PIPELINE_MCT_HPP
#define MCTS2R_PIPELINE_MCT_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcts2r/data/dataset.hpp"
#include "mcts2r/errors.hpp"
#include "mcts2r/nn/adam.hpp"
#include "mcts2r/nn/presets.hpp"
#include "mcts2r/nn/weights_io.hpp"
#include "mcts2r/pipeline/relabel.hpp"
#include "mcts2r/pipeline/training.hpp"
#include "mcts2r/random.hpp"
#include "mcts2r/schedule.hpp"
#include "mcts2r/selfsup.hpp"

namespace mcts2r::pipeline {

enum class Variant { standard, coteaching, mct_r, mct_s2r };

inline Variant parse_variant(const std::string& s) {
  if (s == "standard") return Variant::standard;
  if (s == "coteaching" || s == "co-teaching") return Variant::coteaching;
  if (s == "mct-r" || s == "mct_r") return Variant::mct_r;
  if (s == "mct-s2r" || s == "mct_s2r") return Variant::mct_s2r;
  throw ConfigError("unknown variant '" + s + "' (expected standard, coteaching, mct-r or mct-s2r)");
}

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::coteaching: return "coteaching";
    case Variant::mct_r: return "mct-r";
    case Variant::mct_s2r: return "mct-s2r";
  }
  return "?";
}

inline bool relabels(Variant v) { return v == Variant::mct_r || v == Variant::mct_s2r; }

struct PipelineConfig {
  Variant variant = Variant::mct_s2r;
  Schedule schedule{};
  nn::Preset preset = nn::Preset::mlp;
  nn::ArchitectureOptions arch{};
  std::optional<std::size_t> transfer_depth;  // defaults per preset
  selfsup::PretextOptions pretext{};
  nn::AdamConfig adam{};
  std::size_t batch_size = 128;
  double kappa = 0.90;
  std::size_t top_n = 50;
  Peer relabel_net = Peer::p;
  // Step 4: when set, re-labeled members always train and only the small-loss
  // members go through the R(T) selection. Off by default.
  bool exempt_relabeled = false;
  // Return right after re-labeling (feature export); Step 4 is skipped.
  bool stop_after_relabel = false;
  std::uint64_t seed = 1;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints

  std::size_t effective_transfer_depth() const {
    return transfer_depth.value_or(nn::default_transfer_depth(preset));
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  std::string phase;  // "standard", "coteach" or "final"
};

// Everything produced at the re-labeling epoch.
struct RelabelStage {
  std::size_t epoch = 0;
  double keep_fraction = 1.0;
  LossCollection collection;
  MeanSet means;
  RelabelResult relabels;
  AugmentedSet augmented;
  nn::Network network;  // the chosen network as it was when scored
};

struct PipelineHooks {
  // Called after every training epoch with the tracked network's selections.
  std::function<void(std::size_t epoch, const EpochLog&)> on_epoch;
  const Observer* observer = nullptr;
  std::function<void(const std::string&)> log;
};

struct PipelineResult {
  nn::Network network;
  std::vector<EpochRecord> epochs;
  std::vector<selfsup::PretextEpoch> pretext;
  std::optional<RelabelStage> relabel;

  std::vector<double> accuracy_history() const {
    std::vector<double> h;
    for (const auto& e : epochs) h.push_back(e.test_accuracy);
    return h;
  }
};

inline void validate(const PipelineConfig& cfg, const data::Dataset& train) {
  if (relabels(cfg.variant)) {
    cfg.schedule.validate();
  } else {
    cfg.schedule.validate_ramp();
    if (cfg.schedule.max_epochs < 1) throw ConfigError("T_max must be >= 1");
  }
  if (cfg.batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (cfg.top_n == 0) throw ConfigError("top-N must be >= 1");
  if (!(cfg.adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (train.split() != data::Split::train) throw ConfigError("pipeline needs a train split");
  if (cfg.variant == Variant::mct_s2r) {
    const Shape s = train.sample_shape();
    if (s.size() != 3 || s[1] != s[2]) {
      throw ConfigError("rotation pretext needs square [c, h, w] images, got " + shape_string(s));
    }
  }
}

// Standard, co-teaching, mCT-R and mCT-S2R training. Test accuracy of the
// tracked network is recorded after every epoch.
inline PipelineResult run_mct_s2r(const PipelineConfig& cfg, const data::Dataset& train, const data::Dataset& test,
                                  const PipelineHooks& hooks = {}) {
  validate(cfg, train);
  const auto say = [&](const std::string& msg) {
    if (hooks.log) hooks.log(msg);
  };
  const std::size_t K = train.num_classes();
  const Shape shape = train.sample_shape();
  const Schedule& sched = cfg.schedule;
  const data::TrainingSet train_set = train.training_set();
  Rng shuffle_rng = stream(cfg.seed, "shuffle");

  PipelineResult result;
  auto record = [&](std::size_t epoch, const EpochLog& log, const nn::Network& tracked, const char* phase) {
    const double acc = accuracy(tracked, test);
    result.epochs.push_back({epoch, log.mean_loss, acc, phase});
    if (hooks.on_epoch) hooks.on_epoch(epoch, log);
    say(std::string(phase) + " epoch " + std::to_string(epoch) + " loss " + std::to_string(log.mean_loss) +
        " test_acc " + std::to_string(acc));
  };
  auto checkpoint = [&](const nn::Network& net, const std::string& name) {
    if (cfg.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(cfg.checkpoint_dir);
    nn::save_weights(net, cfg.checkpoint_dir / name);
  };

  nn::Network p = nn::make_network(cfg.preset, shape, K, cfg.arch);
  Rng init_p = stream(cfg.seed, "init-p");
  p.initialize(init_p);
  nn::AdamState adam_p = nn::AdamState::for_network(p, cfg.adam);

  if (cfg.variant == Variant::standard) {
    for (std::size_t epoch = 1; epoch <= sched.max_epochs; ++epoch) {
      const EpochLog log = small_loss_epoch(p, adam_p, train_set, 1.0, cfg.batch_size, shuffle_rng, hooks.observer);
      record(epoch, log, p, "standard");
    }
    checkpoint(p, "final.nlwt");
    result.network = std::move(p);
    return result;
  }

  nn::Network q = nn::make_network(cfg.preset, shape, K, cfg.arch);
  Rng init_q = stream(cfg.seed, "init-q");
  q.initialize(init_q);
  nn::AdamState adam_q = nn::AdamState::for_network(q, cfg.adam);

  // Step 1: rotation pretext, then copy the early layers into both peers.
  if (cfg.variant == Variant::mct_s2r) {
    nn::Network pretext = nn::make_network(cfg.preset, shape, selfsup::kRotations, cfg.arch);
    Rng init_pre = stream(cfg.seed, "init-pretext");
    pretext.initialize(init_pre);
    result.pretext = selfsup::pretrain_rotnet(pretext, train.images(), cfg.pretext, stream_seed(cfg.seed, "pretext"));
    if (!result.pretext.empty()) {
      say("pretext done: rotation accuracy " + std::to_string(result.pretext.back().rotation_accuracy));
    }
    const std::size_t depth = cfg.effective_transfer_depth();
    selfsup::transfer_weights(pretext, p, depth);
    selfsup::transfer_weights(pretext, q, depth);
  }

  // Step 2: co-teaching. Epoch T uses the keep fraction R(T - 1).
  const std::size_t last_coteach = cfg.variant == Variant::coteaching ? sched.max_epochs : sched.update_epoch;
  for (std::size_t epoch = 1; epoch <= last_coteach; ++epoch) {
    const double keep = forget_rate(epoch - 1, sched);
    const EpochLog log = coteach_epoch(p, q, adam_p, adam_q, train_set, keep, cfg.batch_size, shuffle_rng,
                                       cfg.relabel_net, hooks.observer);
    record(epoch, log, cfg.relabel_net == Peer::p ? p : q, "coteach");
  }

  nn::Network& chosen = cfg.relabel_net == Peer::p ? p : q;
  nn::AdamState& chosen_adam = cfg.relabel_net == Peer::p ? adam_p : adam_q;
  if (cfg.variant == Variant::coteaching) {
    checkpoint(chosen, "final.nlwt");
    result.network = std::move(chosen);
    return result;
  }

  // Step 3: whole-set split with R(T_update), class means, re-labeling.
  RelabelStage stage;
  stage.epoch = sched.update_epoch;
  stage.keep_fraction = forget_rate(sched.update_epoch, sched);
  stage.collection = collect_loss_split(chosen, train_set, stage.keep_fraction, sched.update_epoch);
  const LossSplit& split = stage.collection.split;
  stage.means = class_means(stage.collection.scores.features, train_set.labels(), split, cfg.top_n, K);
  stage.relabels = relabel(stage.collection.scores.features.gather_rows(split.large), stage.means);
  stage.augmented = build_augmented(train_set, split, stage.relabels, cfg.kappa);
  stage.network = chosen;
  for (const std::size_t k : stage.means.fallback_classes()) {
    say("class " + std::to_string(k) + " has no small-loss samples; mean taken from the whole set");
  }
  say("relabel: |D^s|=" + std::to_string(split.small.size()) + " |large|=" + std::to_string(split.large.size()) +
      " |D^r|=" + std::to_string(stage.augmented.count(Provenance::relabeled)));
  checkpoint(chosen, "t_update.nlwt");
  if (cfg.stop_after_relabel) {
    result.relabel = std::move(stage);
    result.network = std::move(chosen);
    return result;
  }

  // Step 4: single-network small-loss training on the frozen augmented set.
  const data::TrainingSet augmented = stage.augmented.as_training_set(train_set);
  std::vector<bool> exempt(augmented.size());
  for (std::size_t i = 0; i < exempt.size(); ++i) {
    exempt[i] = stage.augmented.provenance[i] == Provenance::relabeled;
  }
  result.relabel = std::move(stage);
  for (std::size_t epoch = sched.update_epoch + 1; epoch <= sched.max_epochs; ++epoch) {
    const double keep = forget_rate(epoch - 1, sched);
    const EpochLog log = small_loss_epoch(chosen, chosen_adam, augmented, keep, cfg.batch_size, shuffle_rng,
                                          hooks.observer, cfg.exempt_relabeled ? &exempt : nullptr);
    record(epoch, log, chosen, "final");
  }
  checkpoint(chosen, "final.nlwt");
  result.network = std::move(chosen);
  return result;
}

}  // namespace mcts2r::pipeline

#endif  // MCTS2R_PIPELINE_MCT_HPP
