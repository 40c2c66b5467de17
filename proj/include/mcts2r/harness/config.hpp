#ifndef MCTS2R_HARNESS_CONFIG_HPP
#define MCTS2R_HARNESS_CONFIG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcts2r/data/noise.hpp"
#include "mcts2r/errors.hpp"
#include "mcts2r/nn/presets.hpp"
#include "mcts2r/pipeline/mct.hpp"
#include "mcts2r/schedule.hpp"

namespace mcts2r::harness {

// One experiment, fully described. Every field has a string key so that config
// files, CLI overrides and sweep grids all go through set().
struct ExperimentConfig {
  // dataset
  std::string dataset = "blobs";  // mnist | cifar10 | cifar100 | blobs | rendered-blobs
  std::filesystem::path data_dir;
  std::size_t train_limit = 0;  // 0: all
  std::size_t test_limit = 0;
  std::size_t blob_classes = 5;
  std::size_t blob_train_per_class = 400;
  std::size_t blob_test_per_class = 200;
  std::size_t blob_dim = 10;
  double blob_separation = 10.0;
  double blob_std = 1.0;
  std::size_t render_side = 12;
  double render_cue = 0.5;
  double render_noise = 0.1;

  // label noise
  data::NoiseKind noise_kind = data::NoiseKind::symmetric;
  double noise_rate = 0.5;
  std::optional<double> schedule_rate;  // defaults to noise_rate

  // schedule
  std::size_t ramp_epochs = 10;
  std::size_t update_epoch = 30;
  std::size_t max_epochs = 200;

  // method
  pipeline::Variant variant = pipeline::Variant::mct_s2r;
  double kappa = 0.90;
  std::size_t top_n = 50;
  pipeline::Peer relabel_net = pipeline::Peer::p;
  bool exempt_relabeled = false;

  // networks and optimisation
  nn::Preset preset = nn::Preset::mlp;
  std::size_t feature_dim = 128;
  std::optional<std::size_t> transfer_depth;
  std::size_t pretext_epochs = 25;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;

  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";

  double effective_schedule_rate() const { return schedule_rate.value_or(noise_rate); }

  Schedule schedule() const { return {effective_schedule_rate(), ramp_epochs, update_epoch, max_epochs}; }

  pipeline::PipelineConfig pipeline_config() const {
    pipeline::PipelineConfig p;
    p.variant = variant;
    p.schedule = schedule();
    p.preset = preset;
    p.arch.feature_dim = feature_dim;
    p.arch.mlp_hidden.back() = feature_dim;
    p.transfer_depth = transfer_depth;
    p.pretext.epochs = pretext_epochs;
    p.pretext.batch_size = batch_size;
    p.pretext.adam.learning_rate = learning_rate;
    p.adam.learning_rate = learning_rate;
    p.batch_size = batch_size;
    p.kappa = kappa;
    p.top_n = top_n;
    p.relabel_net = relabel_net;
    p.exempt_relabeled = exempt_relabeled;
    p.seed = seed;
    return p;
  }

  bool image_dataset() const { return dataset != "blobs"; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || !std::isfinite(out)) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v.front() != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

}  // namespace detail

// Assigns one key. Unknown keys and malformed values raise ConfigError.
inline void set(ExperimentConfig& c, const std::string& key_in, const std::string& value_in) {
  const std::string key = detail::trim(key_in);
  const std::string v = detail::unquote(detail::trim(value_in));
  using detail::parse_double;
  using detail::parse_unsigned;
  auto size = [&] { return static_cast<std::size_t>(parse_unsigned(key, v)); };

  if (key == "dataset") c.dataset = v;
  else if (key == "data_dir") c.data_dir = v;
  else if (key == "train_limit") c.train_limit = size();
  else if (key == "test_limit") c.test_limit = size();
  else if (key == "blob_classes") c.blob_classes = size();
  else if (key == "blob_train_per_class") c.blob_train_per_class = size();
  else if (key == "blob_test_per_class") c.blob_test_per_class = size();
  else if (key == "blob_dim") c.blob_dim = size();
  else if (key == "blob_separation") c.blob_separation = parse_double(key, v);
  else if (key == "blob_std") c.blob_std = parse_double(key, v);
  else if (key == "render_side") c.render_side = size();
  else if (key == "render_cue") c.render_cue = parse_double(key, v);
  else if (key == "render_noise") c.render_noise = parse_double(key, v);
  else if (key == "noise") c.noise_kind = data::parse_noise_kind(v);
  else if (key == "noise_rate") c.noise_rate = parse_double(key, v);
  else if (key == "schedule_rate") c.schedule_rate = v == "auto" ? std::nullopt : std::optional(parse_double(key, v));
  else if (key == "ramp_epochs") c.ramp_epochs = size();
  else if (key == "update_epoch") c.update_epoch = size();
  else if (key == "max_epochs") c.max_epochs = size();
  else if (key == "variant") c.variant = pipeline::parse_variant(v);
  else if (key == "kappa") c.kappa = parse_double(key, v);
  else if (key == "top_n") c.top_n = size();
  else if (key == "relabel_net") {
    if (v == "p") c.relabel_net = pipeline::Peer::p;
    else if (v == "q") c.relabel_net = pipeline::Peer::q;
    else throw ConfigError("'relabel_net' expects p or q, got '" + v + "'");
  }
  else if (key == "exempt_relabeled") c.exempt_relabeled = detail::parse_bool(key, v);
  else if (key == "preset") c.preset = nn::parse_preset(v);
  else if (key == "feature_dim") c.feature_dim = size();
  else if (key == "transfer_depth") c.transfer_depth = v == "auto" ? std::nullopt : std::optional(size());
  else if (key == "pretext_epochs") c.pretext_epochs = size();
  else if (key == "learning_rate") c.learning_rate = parse_double(key, v);
  else if (key == "batch_size") c.batch_size = size();
  else if (key == "seed") c.seed = parse_unsigned(key, v);
  else if (key == "output_dir") c.output_dir = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

// "key=value" as given on the command line.
inline void set_assignment(ExperimentConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(c, assignment.substr(0, eq), assignment.substr(eq + 1));
}

// Flat TOML-style text: `key = value` lines, '#' comments, blank lines.
// Section headers are accepted and ignored, since every key is unique.
inline void apply_text(ExperimentConfig& c, const std::string& text, const std::string& origin = "config") {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = detail::trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set(c, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c;
  apply_text(c, ss.str(), path.string());
  return c;
}

// Checks every cross-field constraint before any data is loaded or any
// network is built. Each violation has its own message.
inline void validate(const ExperimentConfig& c) {
  static const std::vector<std::string> datasets = {"mnist", "cifar10", "cifar100", "blobs", "rendered-blobs"};
  if (std::find(datasets.begin(), datasets.end(), c.dataset) == datasets.end()) {
    throw ConfigError("unknown dataset '" + c.dataset + "' (expected mnist, cifar10, cifar100, blobs or rendered-blobs)");
  }
  const bool file_backed = c.dataset == "mnist" || c.dataset == "cifar10" || c.dataset == "cifar100";
  if (file_backed && c.data_dir.empty()) throw ConfigError("dataset '" + c.dataset + "' needs data_dir");
  if (c.dataset == "blobs" || c.dataset == "rendered-blobs") {
    if (c.blob_classes < 2) throw ConfigError("blob_classes must be >= 2");
    if (c.blob_dim < 2) throw ConfigError("blob_dim must be >= 2");
    if (c.blob_train_per_class == 0) throw ConfigError("blob_train_per_class must be >= 1");
    if (c.blob_test_per_class == 0) throw ConfigError("blob_test_per_class must be >= 1");
    if (!(c.blob_separation > 0.0)) throw ConfigError("blob_separation must be positive");
    if (!(c.blob_std > 0.0)) throw ConfigError("blob_std must be positive");
  }
  if (c.dataset == "rendered-blobs" && c.render_side < 4) throw ConfigError("render_side must be >= 4");
  if (!(c.noise_rate >= 0.0 && c.noise_rate < 1.0)) throw ConfigError("noise_rate must lie in [0, 1)");
  if (c.schedule_rate && !(*c.schedule_rate >= 0.0 && *c.schedule_rate < 1.0)) {
    throw ConfigError("schedule_rate must lie in [0, 1)");
  }
  if (c.ramp_epochs < 1) throw ConfigError("ramp_epochs must be >= 1");
  if (c.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (pipeline::relabels(c.variant)) {
    if (c.update_epoch < c.ramp_epochs) throw ConfigError("update_epoch must be >= ramp_epochs");
    if (c.update_epoch >= c.max_epochs) throw ConfigError("update_epoch must be < max_epochs");
  }
  if (!(c.kappa >= 0.0) || !std::isfinite(c.kappa)) throw ConfigError("kappa must be a finite value >= 0");
  if (c.top_n == 0) throw ConfigError("top_n must be >= 1");
  if (c.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (c.feature_dim == 0) throw ConfigError("feature_dim must be >= 1");
  if (c.variant == pipeline::Variant::mct_s2r) {
    if (!c.image_dataset()) throw ConfigError("variant mct-s2r needs an image dataset for the rotation pretext");
    if (c.pretext_epochs == 0) throw ConfigError("variant mct-s2r needs pretext_epochs >= 1");
  }
  if (c.preset == nn::Preset::small_cnn && !c.image_dataset()) throw ConfigError("preset cnn needs an image dataset");
  if (c.transfer_depth) {
    // MLP: hidden layers + head; CNN: three convolutions, one dense, head.
    const std::size_t trainable = c.preset == nn::Preset::mlp ? 3 : 5;
    if (*c.transfer_depth > trainable) {
      throw ConfigError("transfer_depth " + std::to_string(*c.transfer_depth) + " exceeds the " +
                        std::to_string(trainable) + " trainable layers of preset " + nn::to_string(c.preset));
    }
  }
}

// Every key with its current value, in a fixed order.
inline std::vector<std::pair<std::string, std::string>> entries(const ExperimentConfig& c) {
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  return {
      {"dataset", c.dataset},
      {"data_dir", c.data_dir.string()},
      {"train_limit", std::to_string(c.train_limit)},
      {"test_limit", std::to_string(c.test_limit)},
      {"blob_classes", std::to_string(c.blob_classes)},
      {"blob_train_per_class", std::to_string(c.blob_train_per_class)},
      {"blob_test_per_class", std::to_string(c.blob_test_per_class)},
      {"blob_dim", std::to_string(c.blob_dim)},
      {"blob_separation", num(c.blob_separation)},
      {"blob_std", num(c.blob_std)},
      {"render_side", std::to_string(c.render_side)},
      {"render_cue", num(c.render_cue)},
      {"render_noise", num(c.render_noise)},
      {"noise", data::to_string(c.noise_kind)},
      {"noise_rate", num(c.noise_rate)},
      {"schedule_rate", c.schedule_rate ? num(*c.schedule_rate) : "auto"},
      {"ramp_epochs", std::to_string(c.ramp_epochs)},
      {"update_epoch", std::to_string(c.update_epoch)},
      {"max_epochs", std::to_string(c.max_epochs)},
      {"variant", pipeline::to_string(c.variant)},
      {"kappa", num(c.kappa)},
      {"top_n", std::to_string(c.top_n)},
      {"relabel_net", c.relabel_net == pipeline::Peer::p ? "p" : "q"},
      {"exempt_relabeled", c.exempt_relabeled ? "true" : "false"},
      {"preset", nn::to_string(c.preset)},
      {"feature_dim", std::to_string(c.feature_dim)},
      {"transfer_depth", c.transfer_depth ? std::to_string(*c.transfer_depth) : "auto"},
      {"pretext_epochs", std::to_string(c.pretext_epochs)},
      {"learning_rate", num(c.learning_rate)},
      {"batch_size", std::to_string(c.batch_size)},
      {"seed", std::to_string(c.seed)},
      {"output_dir", c.output_dir.string()},
  };
}

}  // namespace mcts2r::harness

#endif  // MCTS2R_HARNESS_CONFIG_HPP
