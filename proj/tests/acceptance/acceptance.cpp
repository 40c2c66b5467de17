// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.
//
//   acceptance [--mnist-dir DIR] [--only 1,6,9] [--out DIR]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mcts2r/data/noise.hpp"
#include "mcts2r/data/synthetic.hpp"
#include "mcts2r/harness/config.hpp"
#include "mcts2r/harness/experiment.hpp"
#include "mcts2r/nn/grad_check.hpp"
#include "mcts2r/pipeline/mct.hpp"
#include "mcts2r/schedule.hpp"
#include "support/oracles.hpp"

namespace {

using namespace mcts2r;
using harness::ExperimentConfig;
using harness::RunOutcome;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string pct(double v) { return fmt::format("{:.2f}%", 100.0 * v); }

struct Context {
  std::filesystem::path mnist_dir;
  std::filesystem::path out_dir;
  // Runs shared between criteria, keyed by a label.
  std::map<std::string, RunOutcome> cache;

  RunOutcome& run(const std::string& label, const ExperimentConfig& base) {
    auto it = cache.find(label);
    if (it != cache.end()) return it->second;
    ExperimentConfig c = base;
    c.output_dir = out_dir / label;
    harness::validate(c);
    const auto data = harness::load_data(c);
    const auto t0 = Clock::now();
    RunOutcome o = harness::run_experiment(c, data);
    harness::write_outputs(o, c.output_dir);
    fmt::print("  run {:<28} final {}  ({:.1f}s)\n", label, pct(o.final_accuracy()), seconds_since(t0));
    std::fflush(stdout);
    return cache.emplace(label, std::move(o)).first->second;
  }
};

// ---- shared configurations ----------------------------------------------------

// Rendered blobs: K=5, 2000 train / 1000 test, dim 10, symmetric 50% noise,
// T_max = 40.
ExperimentConfig blobs_config(const std::string& variant) {
  ExperimentConfig c;
  harness::apply_text(c, R"(
    dataset = "rendered-blobs"
    blob_classes = 5
    blob_train_per_class = 400
    blob_test_per_class = 200
    blob_dim = 10
    blob_separation = 10
    blob_std = 1
    noise = "symmetric"
    noise_rate = 0.5
    ramp_epochs = 10
    update_epoch = 30
    max_epochs = 40
    pretext_epochs = 10
    seed = 1
  )", "blobs profile");
  harness::set(c, "variant", variant);
  return c;
}

// MNIST desk profile: MLP preset, T_max = 40, batch 128, 5 pretext epochs.
ExperimentConfig mnist_config(const Context& ctx, const std::string& noise, double rate, const std::string& variant) {
  ExperimentConfig c;
  harness::apply_text(c, R"(
    dataset = "mnist"
    preset = "mlp"
    ramp_epochs = 10
    update_epoch = 30
    max_epochs = 40
    batch_size = 128
    pretext_epochs = 5
    seed = 1
  )", "mnist profile");
  c.data_dir = ctx.mnist_dir;
  harness::set(c, "noise", noise);
  c.noise_rate = rate;
  harness::set(c, "variant", variant);
  return c;
}

// ---- 1: gradients ---------------------------------------------------------------

Verdict gradients(Context&) {
  const auto t0 = Clock::now();
  Rng rng(1001);
  double worst_nonlinear = 0.0, worst_linear = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const bool cnn = trial % 2 == 1;
    const std::size_t K = 2 + rng.below(4);
    nn::Network net = cnn ? oracle::random_cnn(1 + rng.below(2), 4 + rng.below(3), K, rng)
                          : oracle::random_mlp(2 + rng.below(6), {2 + rng.below(6), 2 + rng.below(4)}, K, rng);
    Shape batch_shape{3};
    batch_shape.insert(batch_shape.end(), net.input_shape().begin(), net.input_shape().end());
    Tensor x = oracle::random_tensor(batch_shape, rng);
    // Resample inputs that sit on a LeakyReLU kink, where the loss is not
    // differentiable and finite differences are meaningless.
    for (int attempt = 0; attempt < 200 && oracle::kink_margin(net, x) < 1e-2; ++attempt) {
      x = oracle::random_tensor(batch_shape, rng);
    }
    const auto y = oracle::random_labels(3, K, rng);
    worst_nonlinear = std::max(worst_nonlinear, nn::grad_check(net, x, y));

    const nn::Network linear = oracle::random_mlp(2 + rng.below(6), {2 + rng.below(6)}, K, rng, true);
    const Tensor xl = oracle::random_tensor({3, linear.input_shape()[0]}, rng);
    worst_linear = std::max(worst_linear, nn::grad_check(linear, xl, y));
  }
  const double secs = seconds_since(t0);
  return {worst_nonlinear < 1e-4 && worst_linear < 1e-7 && secs < 30.0,
          fmt::format("max rel err {:.2e} (MLP+CNN, < 1e-4), {:.2e} (linear, < 1e-7), {:.1f}s (< 30s)",
                      worst_nonlinear, worst_linear, secs)};
}

// ---- 2: schedule ------------------------------------------------------------------

Verdict schedule_exactness(Context&) {
  double worst = 0.0;
  bool flat = true, monotone = true;
  for (const double eps : {0.2, 0.45, 0.5}) {
    const Schedule s{eps, 10, 30, 200};
    double previous = 1.0;
    for (std::size_t T = 0; T <= 200; ++T) {
      const double r = forget_rate(T, s);
      worst = std::max(worst, std::abs(r - (1.0 - std::min(static_cast<double>(T) / 10.0 * eps, eps))));
      if (T >= 10 && r != 1.0 - eps) flat = false;
      if (r > previous) monotone = false;
      previous = r;
    }
  }
  return {worst <= 1e-12 && flat && monotone,
          fmt::format("max |R - closed form| {:.1e}, flat 1-eps for T >= T_k: {}, non-increasing: {}", worst,
                      flat ? "yes" : "no", monotone ? "yes" : "no")};
}

// ---- 3: noise injection --------------------------------------------------------------

Verdict noise_fidelity(Context&) {
  const std::size_t n = 60000, K = 10;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % K);
  const data::Dataset clean(Tensor({n, 1}), y, K, data::Split::train);
  struct Case {
    data::NoiseKind kind;
    double rate;
    const char* name;
  };
  double worst = 0.0;
  std::string detail;
  for (const Case& c : {Case{data::NoiseKind::symmetric, 0.5, "sym-50"}, Case{data::NoiseKind::symmetric, 0.2, "sym-20"},
                        Case{data::NoiseKind::pairflip, 0.45, "pair-45"}}) {
    const auto P = data::build_noise_matrix(c.kind, c.rate, K);
    const auto noisy = data::corrupt_labels(clean, P, 2024);
    std::vector<std::vector<double>> counts(K, std::vector<double>(K, 0.0));
    std::vector<double> rows(K, 0.0);
    const auto truth = noisy.true_labels();
    const auto given = noisy.given_labels();
    for (std::size_t i = 0; i < n; ++i) {
      counts[truth[i]][given[i]] += 1;
      rows[truth[i]] += 1;
    }
    double case_worst = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) case_worst = std::max(case_worst, std::abs(counts[i][j] / rows[i] - P(i, j)));
    }
    worst = std::max(worst, case_worst);
    detail += fmt::format("{} {:.4f}, ", c.name, case_worst);
  }
  const auto untouched = data::corrupt_labels(clean, data::build_noise_matrix(data::NoiseKind::symmetric, 0.0, K), 7);
  const bool identity = std::ranges::equal(untouched.given_labels(), y);
  return {worst <= 0.01 && identity,
          fmt::format("max confusion deviation {}(<= 0.01); eps=0 identical: {}", detail, identity ? "yes" : "no")};
}

// ---- 4: oracle equivalence --------------------------------------------------------------

Verdict oracle_equivalence(Context&) {
  Rng rng(1004);
  std::size_t selection_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<double> losses(n);
    const bool coarse = trial % 3 == 0;
    for (double& l : losses) l = coarse ? static_cast<double>(rng.below(6)) : rng.uniform(0.0, 4.0);
    const double r = rng.uniform(0.01, 1.0);
    const auto got = select_small_loss(losses, r);
    const auto want = oracle::small_loss(losses, r);
    selection_mismatch += got.small != want.first || got.large != want.second;
  }

  double means_err = 0.0;
  std::size_t means_done = 0;
  while (means_done < 1000) {
    const std::size_t K = 2 + rng.below(10);
    const std::size_t n = K + rng.below(120);
    const std::size_t dim = 1 + rng.below(8);
    const Tensor f = oracle::random_tensor({n, dim}, rng);
    auto labels = oracle::random_labels(n, K, rng);
    std::vector<double> losses(n);
    for (double& l : losses) l = static_cast<double>(rng.below(25)) * 0.1;
    const auto split = select_small_loss(losses, rng.uniform(0.3, 1.0));
    if (split.small.size() < K) continue;
    for (std::size_t k = 0; k < K; ++k) labels[split.small[k]] = static_cast<int>(k);
    const std::size_t top_n = 1 + rng.below(8);
    const auto m = pipeline::class_means(f, labels, split, top_n, K);
    std::vector<std::vector<double>> feats;
    for (std::size_t i = 0; i < n; ++i) feats.emplace_back(f.row(i).begin(), f.row(i).end());
    const auto want = oracle::class_means(feats, labels, losses, split.small.size(), top_n, K);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t a = 0; a < dim; ++a) means_err = std::max(means_err, std::abs(m.means.row(k)[a] - want[k][a]));
    }
    ++means_done;
  }

  double relabel_err = 0.0;
  std::size_t label_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t K = 2 + rng.below(99);
    const std::size_t dim = 1 + rng.below(10);
    const std::size_t n = 1 + rng.below(5);
    const Tensor mu = oracle::random_tensor({K, dim}, rng, 2.0);
    const Tensor f = oracle::random_tensor({n, dim}, rng, 2.0);
    pipeline::MeanSet ms{mu, std::vector<std::size_t>(K, 1), std::vector<bool>(K, true), std::vector<bool>(K, false)};
    const auto got = pipeline::relabel(f, ms);
    std::vector<std::vector<double>> means;
    for (std::size_t k = 0; k < K; ++k) means.emplace_back(mu.row(k).begin(), mu.row(k).end());
    for (std::size_t i = 0; i < n; ++i) {
      const auto want = oracle::relabel_one({f.row(i).begin(), f.row(i).end()}, means);
      label_mismatch += got.pseudo_labels[i] != want.label;
      relabel_err = std::max(relabel_err, std::abs(got.confidences[i] - want.confidence));
    }
  }
  return {selection_mismatch == 0 && means_err <= 1e-9 && relabel_err <= 1e-9 && label_mismatch == 0,
          fmt::format("selection mismatches {}/1000, class-mean max err {:.1e}, relabel max err {:.1e} "
                      "with {} label mismatches",
                      selection_mismatch, means_err, relabel_err, label_mismatch)};
}

// ---- 5: structural reductions ----------------------------------------------------------

Verdict structural_reductions(Context&) {
  const auto clean = data::make_blobs(4, 80, 6, 8.0, 1.0, 1005);
  const auto train =
      data::corrupt_labels(clean, data::build_noise_matrix(data::NoiseKind::symmetric, 0.3, 4), 1006);
  const auto test = data::make_blobs_split({4, 20, 20, 6, 8.0, 1.0}, 1005).test;

  pipeline::PipelineConfig cfg;
  cfg.arch.mlp_hidden = {32, 16};
  cfg.batch_size = 32;
  cfg.seed = 1007;

  // (a) standard variant == plain supervised training.
  cfg.variant = pipeline::Variant::standard;
  cfg.schedule = {0.5, 1, 1, 5};
  const auto standard = pipeline::run_mct_s2r(cfg, train, test);
  nn::Network plain = nn::make_network(cfg.preset, train.sample_shape(), 4, cfg.arch);
  Rng init = stream(cfg.seed, "init-p");
  plain.initialize(init);
  auto adam = nn::AdamState::for_network(plain, cfg.adam);
  Rng shuffle = stream(cfg.seed, "shuffle");
  pipeline::train_supervised(plain, adam, train.training_set(), 5, cfg.batch_size, shuffle);
  const bool same_standard = plain.parameters_equal(standard.network);

  // (b) kappa > 1: D^aug == D^s and Step 4 == single-network small-loss
  // training on D^s.
  cfg.variant = pipeline::Variant::mct_r;
  cfg.schedule = {0.3, 3, 4, 8};
  cfg.kappa = 1.01;
  const auto mct = pipeline::run_mct_s2r(cfg, train, test);
  const auto& stage = *mct.relabel;
  const bool same_members = stage.augmented.positions == stage.collection.split.small &&
                            stage.augmented.count(pipeline::Provenance::relabeled) == 0;
  const auto set = train.training_set();
  std::vector<int> labels;
  for (const std::size_t pos : stage.collection.split.small) labels.push_back(set.labels()[pos]);
  const auto small_set = set.with_members(stage.collection.split.small, labels);
  nn::Network p = stage.network;
  // Adam state at T_update is rebuilt by replaying the co-teaching phase.
  nn::Network q = nn::make_network(cfg.preset, train.sample_shape(), 4, cfg.arch);
  nn::Network p0 = q;
  Rng init_p = stream(cfg.seed, "init-p");
  Rng init_q = stream(cfg.seed, "init-q");
  p0.initialize(init_p);
  q.initialize(init_q);
  auto adam_p = nn::AdamState::for_network(p0, cfg.adam);
  auto adam_q = nn::AdamState::for_network(q, cfg.adam);
  Rng shuffle2 = stream(cfg.seed, "shuffle");
  for (std::size_t e = 1; e <= cfg.schedule.update_epoch; ++e) {
    pipeline::coteach_epoch(p0, q, adam_p, adam_q, set, forget_rate(e - 1, cfg.schedule), cfg.batch_size, shuffle2);
  }
  const bool replay_matches = p0.parameters_equal(p);
  for (std::size_t e = cfg.schedule.update_epoch + 1; e <= cfg.schedule.max_epochs; ++e) {
    pipeline::small_loss_epoch(p0, adam_p, small_set, forget_rate(e - 1, cfg.schedule), cfg.batch_size, shuffle2);
  }
  const bool same_step4 = p0.parameters_equal(mct.network);
  return {same_standard && same_members && replay_matches && same_step4,
          fmt::format("standard == supervised after 5 epochs: {}; kappa=1.01 D^aug == D^s: {}; "
                      "Step 4 == small-loss training on D^s: {}",
                      same_standard ? "identical" : "DIFFERENT", same_members ? "yes" : "no",
                      same_step4 && replay_matches ? "identical" : "DIFFERENT")};
}

// ---- 6: blobs ordering -------------------------------------------------------------------

double nearest_centroid_accuracy(const data::Dataset& train, const data::Dataset& test) {
  const std::size_t K = train.num_classes(), dim = train.images().row_size();
  std::vector<std::vector<double>> c(K, std::vector<double>(dim, 0.0));
  std::vector<double> n(K, 0.0);
  const auto ty = train.true_labels();
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t a = 0; a < dim; ++a) c[ty[i]][a] += train.images().row(i)[a];
    n[ty[i]] += 1;
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (double& v : c[k]) v /= n[k];
  }
  const auto y = test.true_labels();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t k = 0; k < K; ++k) {
      double d = 0.0;
      for (std::size_t a = 0; a < dim; ++a) d += std::pow(test.images().row(i)[a] - c[k][a], 2);
      if (d < best_d) best_d = d, best = k;
    }
    correct += static_cast<int>(best) == y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

Verdict blobs_ordering(Context& ctx) {
  const auto t0 = Clock::now();
  const ExperimentConfig base = blobs_config("mct-s2r");
  // Generator calibration: nearest-centroid on clean data, both as vectors
  // and as the rendered images the networks see.
  const data::BlobSpec spec{base.blob_classes, base.blob_train_per_class, base.blob_test_per_class,
                            base.blob_dim,     base.blob_separation,      base.blob_std};
  const auto vectors = data::make_blobs_split(spec, stream_seed(base.seed, "data"));
  const double nc_vectors = nearest_centroid_accuracy(vectors.train, vectors.test);
  const double scale = data::rms(vectors.train.images());
  const data::RenderSpec rs{base.render_side, base.render_cue, base.render_noise};
  const auto seed = stream_seed(base.seed, "render");
  const double nc_images = nearest_centroid_accuracy(data::render_oriented(vectors.train, rs, seed, scale),
                                                     data::render_oriented(vectors.test, rs, seed, scale));

  const double s2r = ctx.run("blobs-mct-s2r", base).final_accuracy();
  const double cot = ctx.run("blobs-coteaching", blobs_config("coteaching")).final_accuracy();
  const double std_acc = ctx.run("blobs-standard", blobs_config("standard")).final_accuracy();
  const auto& rel = *ctx.cache.at("blobs-mct-s2r").relabel;
  const double secs = seconds_since(t0);
  const bool pass = nc_vectors > 0.99 && nc_images > 0.99 && s2r >= cot && cot >= std_acc &&
                    s2r - std_acc >= 0.10 && rel.precision >= 0.90 && secs < 120.0;
  return {pass, fmt::format("mct-s2r {} >= coteaching {} >= standard {}; gap {} pts (>= 10); precision {} (>= 90%) "
                            "on {} kept; nearest-centroid clean {} / {} (vectors / images, > 99%); {:.0f}s (< 120s)",
                            pct(s2r), pct(cot), pct(std_acc), fmt::format("{:.2f}", 100.0 * (s2r - std_acc)),
                            pct(rel.precision), rel.n_relabeled, pct(nc_vectors), pct(nc_images), secs)};
}

// ---- 7, 8: MNIST --------------------------------------------------------------------------

bool mnist_present(const Context& ctx) {
  return std::filesystem::exists(ctx.mnist_dir / "train-images-idx3-ubyte") &&
         std::filesystem::exists(ctx.mnist_dir / "t10k-images-idx3-ubyte");
}

Verdict mnist_symmetric(Context& ctx) {
  if (!mnist_present(ctx)) return {false, "MNIST IDX files not found in " + ctx.mnist_dir.string()};
  const auto t0 = Clock::now();
  const auto& standard = ctx.run("mnist-sym50-standard", mnist_config(ctx, "symmetric", 0.5, "standard"));
  const auto& coteach = ctx.run("mnist-sym50-coteaching", mnist_config(ctx, "symmetric", 0.5, "coteaching"));
  const auto& s2r = ctx.run("mnist-sym50-mct-s2r", mnist_config(ctx, "symmetric", 0.5, "mct-s2r"));
  const double secs = seconds_since(t0);
  const auto h = standard.result.accuracy_history();
  const double peak = *std::max_element(h.begin(), h.end());
  const double st = standard.final_accuracy(), ct = coteach.final_accuracy(), s = s2r.final_accuracy();
  const bool a = st < ct && st < s;
  const bool b = s >= 0.93 && s - st >= 0.05;
  const double clean = s2r.relabel->small_clean_fraction;
  const bool c = clean >= 0.85;
  return {a && b && c && secs < 900.0,
          fmt::format("(a) standard {} (peak {}) below coteaching {} and mct-s2r: {}; (b) mct-s2r {} (>= 93%), "
                      "+{:.2f} pts over standard (>= 5); (c) small-loss clean fraction at T_update {} (>= 85%); "
                      "{:.0f}s (< 900s)",
                      pct(st), pct(peak), pct(ct), a ? "yes" : "no", pct(s), 100.0 * (s - st), pct(clean), secs)};
}

Verdict mnist_pairflip(Context& ctx) {
  if (!mnist_present(ctx)) return {false, "MNIST IDX files not found in " + ctx.mnist_dir.string()};
  const auto t0 = Clock::now();
  const double ct = ctx.run("mnist-pair45-coteaching", mnist_config(ctx, "pairflip", 0.45, "coteaching")).final_accuracy();
  const double s = ctx.run("mnist-pair45-mct-s2r", mnist_config(ctx, "pairflip", 0.45, "mct-s2r")).final_accuracy();
  const double secs = seconds_since(t0);
  return {s - ct >= 0.02 && secs < 900.0,
          fmt::format("mct-s2r {} vs coteaching {}: {:+.2f} pts (>= +2); {:.0f}s (< 900s)", pct(s), pct(ct),
                      100.0 * (s - ct), secs)};
}

// ---- 9: ablations -------------------------------------------------------------------------

Verdict ablations(Context& ctx) {
  const double base = ctx.run("blobs-mct-s2r", blobs_config("mct-s2r")).final_accuracy();
  std::string detail;
  bool pass = true;
  auto vary = [&](const std::string& key, const std::string& value, double tolerance) {
    ExperimentConfig c = blobs_config("mct-s2r");
    harness::set(c, key, value);
    const double acc = ctx.run("blobs-mct-s2r-" + key + "=" + value, c).final_accuracy();
    const double delta = std::abs(acc - base);
    pass = pass && delta <= tolerance + 1e-12;
    detail += fmt::format("{}={} {} (|d| {:.2f} pts), ", key, value, pct(acc), 100.0 * delta);
  };
  vary("update_epoch", "10", 0.03);
  vary("update_epoch", "20", 0.03);
  vary("kappa", "0.8", 0.03);
  vary("kappa", "0.95", 0.03);
  vary("relabel_net", "q", 0.02);
  return {pass, fmt::format("base (T_update=30, kappa=0.9, net p) {}; {}limits 3 / 3 / 2 pts", pct(base), detail)};
}

// ---- 10: self-supervision -----------------------------------------------------------------

Verdict self_supervision(Context& ctx) {
  const double s2r = ctx.run("blobs-mct-s2r", blobs_config("mct-s2r")).final_accuracy();
  const double r = ctx.run("blobs-mct-r", blobs_config("mct-r")).final_accuracy();
  std::string mnist;
  if (mnist_present(ctx) && ctx.cache.count("mnist-sym50-mct-s2r")) {
    mnist = fmt::format("; MNIST sym-50 mct-s2r {} (mct-r not required there)",
                        pct(ctx.cache.at("mnist-sym50-mct-s2r").final_accuracy()));
  }
  return {s2r >= r, fmt::format("rendered blobs: mct-s2r {} >= mct-r {}{}", pct(s2r), pct(r), mnist)};
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.mnist_dir = "/root/data/mnist";
  ctx.out_dir = std::filesystem::temp_directory_path() / "mcts2r_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--mnist-dir" && i + 1 < argc) {
      ctx.mnist_dir = argv[++i];
    } else if (arg == "--out" && i + 1 < argc) {
      ctx.out_dir = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string id; std::getline(list, id, ',');) only.insert(std::stoi(id));
    } else {
      fmt::print(stderr, "usage: acceptance [--mnist-dir DIR] [--out DIR] [--only 1,2,...]\n");
      return 2;
    }
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict(Context&)> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradients},
      {2, "schedule exactness", schedule_exactness},
      {3, "noise-injection fidelity", noise_fidelity},
      {4, "selection and re-label oracle equivalence", oracle_equivalence},
      {5, "structural reductions", structural_reductions},
      {6, "blobs: mct-s2r >= coteaching >= standard", blobs_ordering},
      {7, "MNIST symmetric-50%", mnist_symmetric},
      {8, "MNIST pairflip-45%", mnist_pairflip},
      {9, "ablation stability (T_update, kappa, network)", ablations},
      {10, "self-supervision effect", self_supervision},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = c.check(ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    fmt::print("{} [{}] {}: {} ({:.1f}s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail, seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
