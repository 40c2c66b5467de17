#ifndef MCTS2R_HARNESS_EXPERIMENT_HPP
#define MCTS2R_HARNESS_EXPERIMENT_HPP

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mcts2r/data/dataset.hpp"
#include "mcts2r/data/loaders.hpp"
#include "mcts2r/data/noise.hpp"
#include "mcts2r/data/synthetic.hpp"
#include "mcts2r/errors.hpp"
#include "mcts2r/harness/config.hpp"
#include "mcts2r/pipeline/mct.hpp"
#include "mcts2r/random.hpp"

namespace mcts2r::harness {

using Json = nlohmann::ordered_json;

// Mean of the last k entries. Reported final accuracy uses k = 10.
inline double avg_last_k(std::span<const double> history, std::size_t k) {
  if (k == 0) throw InvalidInput("avg_last_k needs k >= 1");
  if (history.size() < k) {
    throw InvalidInput("history has " + std::to_string(history.size()) + " entries, fewer than k=" +
                       std::to_string(k));
  }
  double s = 0.0;
  for (std::size_t i = history.size() - k; i < history.size(); ++i) s += history[i];
  return s / static_cast<double>(k);
}

// Fraction of (row, label) pairs whose label is the true label of the row.
inline double clean_fraction(std::span<const std::size_t> rows, std::span<const int> labels,
                             std::span<const int> truth) {
  if (rows.size() != labels.size()) throw InvalidInput("row/label count mismatch");
  if (rows.empty()) return 0.0;
  std::size_t clean = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) clean += labels[i] == truth[rows[i]];
  return static_cast<double>(clean) / static_cast<double>(rows.size());
}

struct RelabelMetrics {
  std::size_t epoch = 0;
  double keep_fraction = 0.0;
  std::size_t n_small = 0;
  std::size_t n_large = 0;
  std::size_t n_relabeled = 0;
  std::size_t n_augmented = 0;
  double small_clean_fraction = 0.0;
  // Kept pseudo-labels that equal the true label.
  double precision = 0.0;
  // Corrupted large-loss samples that were kept with their true label restored.
  double recall = 0.0;
  // Pseudo-label accuracy over the whole large-loss set, kept or not.
  double large_pseudo_accuracy = 0.0;
  std::vector<std::size_t> fallback_classes;
};

// Scores the re-labeling stage against hidden truth. Evaluation only.
inline RelabelMetrics relabel_metrics(const pipeline::RelabelStage& stage, const data::TrainingSet& train,
                                      std::span<const int> truth) {
  const auto& split = stage.collection.split;
  const auto& r = stage.relabels;
  RelabelMetrics m;
  m.epoch = stage.epoch;
  m.keep_fraction = stage.keep_fraction;
  m.n_small = split.small.size();
  m.n_large = split.large.size();
  m.n_relabeled = stage.augmented.count(pipeline::Provenance::relabeled);
  m.n_augmented = stage.augmented.size();
  m.fallback_classes = stage.means.fallback_classes();

  const auto rows = train.indices();
  const auto given = train.labels();
  std::size_t small_clean = 0;
  for (const std::size_t pos : split.small) small_clean += given[pos] == truth[rows[pos]];
  m.small_clean_fraction = split.small.empty() ? 0.0 : static_cast<double>(small_clean) / split.small.size();

  std::size_t kept = 0, kept_correct = 0, corrupted = 0, restored = 0, correct = 0;
  for (std::size_t j = 0; j < split.large.size(); ++j) {
    const std::size_t pos = split.large[j];
    const int t = truth[rows[pos]];
    const bool right = r.pseudo_labels[j] == t;
    correct += right;
    if (r.kept[j]) {
      ++kept;
      kept_correct += right;
    }
    if (given[pos] != t) {
      ++corrupted;
      restored += r.kept[j] && right;
    }
  }
  m.precision = kept ? static_cast<double>(kept_correct) / kept : 0.0;
  m.recall = corrupted ? static_cast<double>(restored) / corrupted : 0.0;
  m.large_pseudo_accuracy = split.large.empty() ? 0.0 : static_cast<double>(correct) / split.large.size();
  return m;
}

struct LoadedData {
  data::Dataset train;  // observed labels already corrupted
  data::Dataset test;
};

namespace detail {

inline data::Dataset first_rows(const data::Dataset& d, std::size_t limit) {
  if (limit == 0 || limit >= d.size()) return d;
  std::vector<std::size_t> rows(limit);
  for (std::size_t i = 0; i < limit; ++i) rows[i] = i;
  return d.subset(rows);
}

inline std::vector<std::filesystem::path> cifar10_train_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (int i = 1; i <= 5; ++i) out.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  return out;
}

}  // namespace detail

// Builds train/test sets for a validated config and injects label noise into
// the train split. Data, rendering and noise each draw from their own stream.
inline LoadedData load_data(const ExperimentConfig& c) {
  data::Dataset train, test;
  if (c.dataset == "mnist") {
    train = data::load_mnist_dir(c.data_dir, data::Split::train);
    test = data::load_mnist_dir(c.data_dir, data::Split::test);
  } else if (c.dataset == "cifar10") {
    train = data::load_cifar_binary(detail::cifar10_train_files(c.data_dir), data::CifarKind::cifar10,
                                    data::Split::train);
    test = data::load_cifar_binary({c.data_dir / "test_batch.bin"}, data::CifarKind::cifar10, data::Split::test);
  } else if (c.dataset == "cifar100") {
    train = data::load_cifar_binary({c.data_dir / "train.bin"}, data::CifarKind::cifar100, data::Split::train);
    test = data::load_cifar_binary({c.data_dir / "test.bin"}, data::CifarKind::cifar100, data::Split::test);
  } else {
    const data::BlobSpec spec{c.blob_classes, c.blob_train_per_class, c.blob_test_per_class,
                              c.blob_dim,     c.blob_separation,      c.blob_std};
    auto tt = data::make_blobs_split(spec, stream_seed(c.seed, "data"));
    train = std::move(tt.train);
    test = std::move(tt.test);
    if (c.dataset == "rendered-blobs") {
      const data::RenderSpec rs{c.render_side, c.render_cue, c.render_noise};
      const double scale = data::rms(train.images());
      const std::uint64_t render_seed = stream_seed(c.seed, "render");
      train = data::render_oriented(train, rs, render_seed, scale);
      test = data::render_oriented(test, rs, render_seed, scale);
    }
  }
  train = detail::first_rows(train, c.train_limit);
  test = detail::first_rows(test, c.test_limit);
  const auto noise = data::build_noise_matrix(c.noise_kind, c.noise_rate, train.num_classes());
  return {data::corrupt_labels(train, noise, stream_seed(c.seed, "noise")), std::move(test)};
}

struct RunOutcome {
  ExperimentConfig config;
  pipeline::PipelineResult result;
  std::vector<double> clean_fractions;  // per epoch, tracked network's picks
  std::optional<RelabelMetrics> relabel;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double seconds = 0.0;

  // Mean test accuracy over the last min(10, epochs) epochs.
  double final_accuracy() const {
    const auto h = result.accuracy_history();
    return h.empty() ? 0.0 : avg_last_k(h, std::min<std::size_t>(10, h.size()));
  }
};

struct RunOptions {
  std::function<void(const std::string&)> log;
  bool stop_after_relabel = false;
  bool write_checkpoints = true;
};

inline RunOutcome run_experiment(const ExperimentConfig& c, const LoadedData& data, const RunOptions& opt = {}) {
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  pipeline::PipelineConfig pc = c.pipeline_config();
  pc.stop_after_relabel = opt.stop_after_relabel;
  if (opt.write_checkpoints) pc.checkpoint_dir = c.output_dir;

  RunOutcome out;
  out.config = c;
  out.n_train = data.train.size();
  out.n_test = data.test.size();
  // Truth is read here, by the metrics layer, and never handed to training.
  const auto truth = data.train.true_labels();
  pipeline::PipelineHooks hooks;
  hooks.log = opt.log;
  hooks.on_epoch = [&](std::size_t, const pipeline::EpochLog& log) {
    out.clean_fractions.push_back(clean_fraction(log.selected_rows, log.selected_labels, truth));
  };
  out.result = pipeline::run_mct_s2r(pc, data.train, data.test, hooks);
  if (out.result.relabel) {
    out.relabel = relabel_metrics(*out.result.relabel, data.train.training_set(), truth);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline Json config_json(const ExperimentConfig& c) {
  Json j = Json::object();
  for (const auto& [k, v] : entries(c)) j[k] = v;
  return j;
}

// Deterministic run report: no wall-clock, no paths beyond the config echo.
inline Json report_json(const RunOutcome& o) {
  Json j;
  j["config"] = config_json(o.config);
  j["seed"] = o.config.seed;
  j["variant"] = pipeline::to_string(o.config.variant);
  j["n_train"] = o.n_train;
  j["n_test"] = o.n_test;
  const auto h = o.result.accuracy_history();
  j["final_accuracy_window"] = std::min<std::size_t>(10, h.size());
  j["final_accuracy"] = o.final_accuracy();
  Json epochs = Json::array();
  for (std::size_t i = 0; i < o.result.epochs.size(); ++i) {
    const auto& e = o.result.epochs[i];
    epochs.push_back({{"epoch", e.epoch},
                      {"phase", e.phase},
                      {"train_loss", e.train_loss},
                      {"test_acc", e.test_accuracy},
                      {"clean_frac_small", i < o.clean_fractions.size() ? o.clean_fractions[i] : 0.0}});
  }
  j["epochs"] = epochs;
  Json pretext = Json::array();
  for (const auto& p : o.result.pretext) {
    pretext.push_back({{"loss", p.mean_loss}, {"rotation_accuracy", p.rotation_accuracy}});
  }
  j["pretext"] = pretext;
  if (o.relabel) {
    const auto& m = *o.relabel;
    j["relabel"] = {{"epoch", m.epoch},
                    {"keep_fraction", m.keep_fraction},
                    {"n_small", m.n_small},
                    {"n_large", m.n_large},
                    {"n_relabeled", m.n_relabeled},
                    {"n_augmented", m.n_augmented},
                    {"small_clean_fraction", m.small_clean_fraction},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"large_pseudo_accuracy", m.large_pseudo_accuracy},
                    {"fallback_classes", m.fallback_classes}};
  } else {
    j["relabel"] = nullptr;
  }
  return j;
}

inline std::string epochs_csv(const RunOutcome& o) {
  std::string s = "epoch,train_loss,test_acc,clean_frac_small\n";
  for (std::size_t i = 0; i < o.result.epochs.size(); ++i) {
    const auto& e = o.result.epochs[i];
    const double cf = i < o.clean_fractions.size() ? o.clean_fractions[i] : 0.0;
    s += fmt::format("{},{},{},{}\n", e.epoch, e.train_loss, e.test_accuracy, cf);
  }
  return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// report.json and epochs.csv are byte-deterministic for a given config;
// wall-clock goes to timing.json.
inline void write_outputs(const RunOutcome& o, const std::filesystem::path& dir) {
  write_text(dir / "report.json", report_json(o).dump(2) + "\n");
  write_text(dir / "epochs.csv", epochs_csv(o));
  write_text(dir / "timing.json", Json{{"seconds", o.seconds}}.dump(2) + "\n");
}

// One row per train sample at the re-labeling epoch: loss, split membership,
// labels, pseudo-label and confidence (blank for small-loss rows), kept flag and
// the feature vector of the re-labeling network.
inline std::string features_csv(const RunOutcome& o, const LoadedData& data) {
  if (!o.result.relabel) throw ConfigError("feature export needs a re-labeling variant (mct-r or mct-s2r)");
  const auto& stage = *o.result.relabel;
  const auto& split = stage.collection.split;
  const Tensor& f = stage.collection.scores.features;
  const auto truth = data.train.true_labels();
  const auto given = data.train.given_labels();
  const std::size_t n = f.rows();
  const std::size_t dim = f.row_size();
  std::vector<long> large_slot(n, -1);
  for (std::size_t j = 0; j < split.large.size(); ++j) large_slot[split.large[j]] = static_cast<long>(j);

  std::string s = "sample_index,loss,is_small,given_label,true_label,pseudo_label,confidence,kept";
  for (std::size_t a = 0; a < dim; ++a) s += fmt::format(",f_{}", a);
  s += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    const long j = large_slot[i];
    s += fmt::format("{},{},{},{},{},", i, stage.collection.scores.losses[i], j < 0 ? 1 : 0, given[i], truth[i]);
    if (j < 0) {
      s += ",,0";
    } else {
      const auto u = static_cast<std::size_t>(j);
      s += fmt::format("{},{},{}", stage.relabels.pseudo_labels[u], stage.relabels.confidences[u],
                       stage.relabels.kept[u] ? 1 : 0);
    }
    for (const double v : f.row(i)) s += fmt::format(",{}", v);
    s += '\n';
  }
  return s;
}

}  // namespace mcts2r::harness

#endif  // MCTS2R_HARNESS_EXPERIMENT_HPP
