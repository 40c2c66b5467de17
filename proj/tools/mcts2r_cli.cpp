// Command-line harness: run, sweep, compare, export-features.
#include <algorithm>
#include <cstdint>
#include <memory>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mcts2r/errors.hpp"
#include "mcts2r/harness/config.hpp"
#include "mcts2r/harness/experiment.hpp"
#include "mcts2r/harness/studies.hpp"

namespace {

using namespace mcts2r;

// Options shared by every subcommand. Later sources win: defaults, then the
// config file, then --set assignments, then the dedicated flags.
struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override any config key: --set key=value (repeatable)");
    app->add_flag("-q,--quiet", quiet, "no progress output");
    add(app, "--dataset", "dataset", "mnist | cifar10 | cifar100 | blobs | rendered-blobs");
    add(app, "--data-dir", "data_dir", "directory with the dataset files");
    add(app, "--variant", "variant", "standard | coteaching | mct-r | mct-s2r");
    add(app, "--noise", "noise", "symmetric | pairflip");
    add(app, "--noise-rate", "noise_rate", "true corruption rate");
    add(app, "--preset", "preset", "mlp | cnn");
    add(app, "--max-epochs", "max_epochs", "T_max");
    add(app, "--update-epoch", "update_epoch", "T_update");
    add(app, "--kappa", "kappa", "confidence threshold for pseudo-labels");
    add(app, "--seed", "seed", "root seed");
    add(app, "-o,--out", "output_dir", "output directory");
  }

  harness::ExperimentConfig build() const {
    harness::ExperimentConfig c = config_file.empty() ? harness::ExperimentConfig{} : harness::load_config(config_file);
    for (const auto& s : sets) harness::set_assignment(c, s);
    for (const auto& [key, value] : *values) {
      if (!value.empty()) harness::set(c, key, value);
    }
    return c;
  }

  harness::RunOptions run_options() const {
    harness::RunOptions o;
    if (!quiet) o.log = [](const std::string& m) { fmt::print(stderr, "{}\n", m); };
    return o;
  }

 private:
  std::shared_ptr<std::vector<std::pair<std::string, std::string>>> values =
      std::make_shared<std::vector<std::pair<std::string, std::string>>>();

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    values->emplace_back(key, "");
    const std::size_t slot = values->size() - 1;
    auto store = values;
    app->add_option_function<std::string>(
        flag, [store, slot](const std::string& v) { (*store)[slot].second = v; }, help);
  }
};

void print_summary(const harness::RunOutcome& o) {
  fmt::print("{} seed {}: final accuracy (avg of last {}) {:.4f}\n", pipeline::to_string(o.config.variant),
             o.config.seed, std::min<std::size_t>(10, o.result.epochs.size()), o.final_accuracy());
  if (o.relabel) {
    const auto& r = *o.relabel;
    fmt::print("re-label at epoch {}: |D^s|={} (clean {:.4f}) |large|={} |D^r|={} precision {:.4f} recall {:.4f}\n",
               r.epoch, r.n_small, r.small_clean_fraction, r.n_large, r.n_relabeled, r.precision, r.recall);
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> out;
  for (const auto& s : harness::detail::split_list(list, ',')) out.push_back(harness::detail::parse_unsigned("seeds", s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-label training with co-teaching, self-supervised pretraining and re-labeling"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, compare_opts, export_opts;

  auto* run = app.add_subcommand("run", "train one experiment and write report.json, epochs.csv and checkpoints");
  run_opts.attach(run);

  auto* sweep = app.add_subcommand("sweep", "cartesian sweep over config keys");
  sweep_opts.attach(sweep);
  std::vector<std::string> grid;
  sweep->add_option("-g,--grid", grid, "axis as key=v1,v2 (repeatable)")->required();

  auto* compare = app.add_subcommand("compare", "baseline table over several seeds");
  compare_opts.attach(compare);
  std::vector<std::string> rows = {"standard", "coteaching", "mct-r", "mct-s2r"};
  std::string seeds = "1,2,3";
  compare->add_option("-r,--row", rows, "row as 'label:key=val;key=val' or a bare variant name (repeatable)");
  compare->add_option("--seeds", seeds, "comma-separated seeds")->capture_default_str();

  auto* exporter = app.add_subcommand("export-features", "write features.csv for the re-labeling epoch");
  export_opts.attach(exporter);
  bool full = false;
  exporter->add_flag("--full", full, "also run the final training stage");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto c = run_opts.build();
      harness::validate(c);
      const auto data = harness::load_data(c);
      const auto outcome = harness::run_experiment(c, data, run_opts.run_options());
      harness::write_outputs(outcome, c.output_dir);
      print_summary(outcome);
    } else if (*sweep) {
      const auto base = sweep_opts.build();
      std::vector<harness::GridAxis> axes;
      for (const auto& g : grid) axes.push_back(harness::parse_grid_axis(g));
      const auto runner = [&](const harness::ExperimentConfig& c) {
        const auto data = harness::load_data(c);
        auto o = harness::run_experiment(c, data, sweep_opts.run_options());
        harness::write_outputs(o, c.output_dir);
        print_summary(o);
        return o;
      };
      const auto points = harness::run_sweep(base, axes, runner);
      harness::write_text(base.output_dir / "sweep.csv", harness::sweep_csv(axes, points));
      fmt::print("wrote {}\n", (base.output_dir / "sweep.csv").string());
    } else if (*compare) {
      const auto base = compare_opts.build();
      std::vector<harness::RowSpec> specs;
      for (const auto& r : rows) specs.push_back(harness::parse_row_spec(r));
      const auto runner = [&](const harness::ExperimentConfig& c) {
        const auto data = harness::load_data(c);
        auto o = harness::run_experiment(c, data, compare_opts.run_options());
        harness::write_outputs(o, c.output_dir);
        print_summary(o);
        return o;
      };
      const auto table = harness::compare_baselines(base, specs, parse_seeds(seeds), runner);
      harness::write_text(base.output_dir / "compare.csv", harness::comparison_csv(table));
      fmt::print("{}", harness::comparison_table(table));
    } else if (*exporter) {
      const auto c = export_opts.build();
      harness::validate(c);
      if (!pipeline::relabels(c.variant)) throw ConfigError("export-features needs variant mct-r or mct-s2r");
      const auto data = harness::load_data(c);
      auto opt = export_opts.run_options();
      opt.stop_after_relabel = !full;
      const auto outcome = harness::run_experiment(c, data, opt);
      harness::write_outputs(outcome, c.output_dir);
      harness::write_text(c.output_dir / "features.csv", harness::features_csv(outcome, data));
      print_summary(outcome);
      fmt::print("wrote {}\n", (c.output_dir / "features.csv").string());
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
