#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>
#include <vector>

#include <gtest/gtest.h>

#include "mcts2r/data/synthetic.hpp"
#include "mcts2r/nn/loss.hpp"
#include "mcts2r/nn/presets.hpp"
#include "mcts2r/selfsup.hpp"
#include "support/oracles.hpp"

using namespace mcts2r;
using namespace mcts2r::selfsup;

namespace {

Tensor ramp_image(std::size_t c, std::size_t n) {
  Tensor t({c, n, n});
  std::iota(t.values().begin(), t.values().end(), 0.0);
  return t;
}

double sum(const Tensor& t) { return std::accumulate(t.values().begin(), t.values().end(), 0.0); }

std::vector<double> values_of(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

// ---- rotation ----------------------------------------------------------------

TEST(RotateImage, QuarterTurnIsCounterClockwise) {
  // [[0, 1], [2, 3]] turned 90 degrees counter-clockwise is [[1, 3], [0, 2]].
  const Tensor r = rotate_image(ramp_image(1, 2), 1);
  EXPECT_EQ(values_of(r), (std::vector<double>{1, 3, 0, 2}));
  const Tensor h = rotate_image(ramp_image(1, 2), 2);
  EXPECT_EQ(values_of(h), (std::vector<double>{3, 2, 1, 0}));
}

TEST(RotateImage, ZeroIsIdentity) {
  const Tensor img = ramp_image(3, 5);
  EXPECT_EQ(rotate_image(img, 0), img);
}

TEST(RotateImage, CompositionAndFourCycle) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(9);
    const Tensor img = oracle::random_tensor({1 + rng.below(3), n, n}, rng);
    EXPECT_EQ(rotate_image(rotate_image(img, 1), 1), rotate_image(img, 2));
    EXPECT_EQ(rotate_image(rotate_image(img, 1), 2), rotate_image(img, 3));
    Tensor t = img;
    for (int k = 0; k < 4; ++k) t = rotate_image(t, 1);
    EXPECT_EQ(t, img);
  }
}

TEST(RotateImage, IsAPixelBijectionProperty) {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(10);
    Tensor img({2, n, n});
    // Distinct values, so a bijection shows up as a permutation of the multiset.
    std::iota(img.values().begin(), img.values().end(), 0.5);
    const int k = static_cast<int>(rng.below(4));
    const Tensor r = rotate_image(img, k);
    auto rotated = values_of(r);
    std::sort(rotated.begin(), rotated.end());
    EXPECT_EQ(rotated, values_of(img));
    // Integer-valued pixels make the sum exact regardless of summation order.
    Tensor counts({1, n, n});
    for (double& v : counts.values()) v = static_cast<double>(rng.below(256));
    EXPECT_EQ(sum(rotate_image(counts, k)), sum(counts));
  }
}

TEST(RotateImage, NonSquareIsRejected) {
  EXPECT_THROW(rotate_image(Tensor({1, 3, 4}), 1), InvalidInput);
  EXPECT_THROW(rotate_image(Tensor({3, 4}), 1), InvalidInput);
}

// ---- rotation batches ----------------------------------------------------------

TEST(RotationBatch, OneImageGivesFourLabelledCopies) {
  Tensor images({1, 1, 3, 3});
  std::iota(images.values().begin(), images.values().end(), 0.0);
  const auto batch = make_rotation_batch(images);
  EXPECT_EQ(batch.images.shape(), (Shape{4, 1, 3, 3}));
  EXPECT_EQ(batch.labels, (std::vector<int>{0, 1, 2, 3}));
  const Tensor src({1, 3, 3}, std::vector<double>(images.values().begin(), images.values().end()));
  for (int k = 0; k < 4; ++k) {
    const auto row = batch.images.row(static_cast<std::size_t>(k));
    const Tensor expected = rotate_image(src, k);
    EXPECT_TRUE(std::equal(row.begin(), row.end(), expected.values().begin()));
  }
}

TEST(RotationBatch, ThirtyTwoImagesGiveOneHundredTwentyEight) {
  Rng rng(33);
  const auto batch = make_rotation_batch(oracle::random_tensor({32, 1, 6, 6}, rng));
  EXPECT_EQ(batch.images.rows(), 128u);
  for (std::size_t i = 0; i < 128; ++i) EXPECT_EQ(batch.labels[i], static_cast<int>(i % 4));
}

TEST(RotationBatch, ConstantImageIsIrreduciblyAmbiguous) {
  Tensor images({1, 1, 4, 4});
  for (double& v : images.values()) v = 0.7;
  const auto batch = make_rotation_batch(images);
  for (std::size_t k = 1; k < 4; ++k) {
    const auto a = batch.images.row(0);
    const auto b = batch.images.row(k);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
  // Any network gives the four copies the same logits, so the mean loss over
  // the four labels is at least ln 4.
  Rng rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const auto net = oracle::random_mlp(16, {5}, 4, rng);
    nn::Network flat = net;
    const Tensor logits = flat.forward(batch.images.reshaped({4, 16})).logits;
    const auto losses = nn::per_sample_cross_entropy(logits, batch.labels);
    const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / 4.0;
    EXPECT_GE(mean, std::log(4.0) - 1e-12);
  }
}

TEST(RotationBatch, RejectsNonSquareAndWrongRank) {
  EXPECT_THROW(make_rotation_batch(Tensor({2, 1, 3, 5})), InvalidInput);
  EXPECT_THROW(make_rotation_batch(Tensor({2, 9})), InvalidInput);
}

// ---- pretraining -----------------------------------------------------------------

TEST(Pretrain, ZeroEpochsLeavesWeightsUnchanged) {
  Rng rng(35);
  nn::Network net = nn::make_mlp({1, 6, 6}, 4, {.mlp_hidden = {8, 5}});
  net.initialize(rng);
  const nn::Network before = net;
  PretextOptions opt;
  opt.epochs = 0;
  const auto history = pretrain_rotnet(net, oracle::random_tensor({20, 1, 6, 6}, rng), opt, 1);
  EXPECT_TRUE(history.empty());
  EXPECT_TRUE(net.parameters_equal(before));
}

TEST(Pretrain, FixedSeedIsBitIdentical) {
  Rng rng(36);
  const Tensor images = oracle::random_tensor({40, 1, 6, 6}, rng);
  nn::Network a = nn::make_mlp({1, 6, 6}, 4, {.mlp_hidden = {8, 5}});
  a.initialize(rng);
  nn::Network b = a;
  PretextOptions opt;
  opt.epochs = 2;
  opt.batch_size = 32;
  pretrain_rotnet(a, images, opt, 9);
  pretrain_rotnet(b, images, opt, 9);
  EXPECT_TRUE(a.parameters_equal(b));
}

TEST(Pretrain, NeedsFourWayHead) {
  nn::Network net = nn::make_mlp({1, 4, 4}, 3, {.mlp_hidden = {4}});
  EXPECT_THROW(pretrain_rotnet(net, Tensor({2, 1, 4, 4}), {}, 1), ConfigError);
}

TEST(Pretrain, RenderedBlobsRotationIsLearnable) {
  const auto tt = data::make_blobs_split({5, 400, 200, 10, 10.0, 1.0}, 37);
  const double scale = data::rms(tt.train.images());
  const auto train = data::render_oriented(tt.train, {}, 38, scale);
  const auto test = data::render_oriented(tt.test, {}, 38, scale);
  nn::Network net = nn::make_mlp(train.sample_shape(), 4, {.mlp_hidden = {128, 64}});
  Rng rng(39);
  net.initialize(rng);
  const double before = rotation_accuracy(net, test.images());
  PretextOptions opt;
  opt.epochs = 10;
  pretrain_rotnet(net, train.images(), opt, 40);
  const double after = rotation_accuracy(net, test.images());
  EXPECT_GT(after, 0.9) << "held-out rotation accuracy before training " << before;
}

// ---- transfer ----------------------------------------------------------------------

TEST(Transfer, DepthZeroLeavesTargetUnchanged) {
  Rng rng(41);
  nn::Network src = nn::make_mlp({10}, 4, {.mlp_hidden = {6, 5}});
  nn::Network dst = nn::make_mlp({10}, 3, {.mlp_hidden = {6, 5}});
  src.initialize(rng);
  dst.initialize(rng);
  const nn::Network before = dst;
  transfer_weights(src, dst, 0);
  EXPECT_TRUE(dst.parameters_equal(before));
}

TEST(Transfer, MlpDepthOneCopiesFirstDenseOnly) {
  Rng rng(42);
  nn::Network src = nn::make_mlp({10}, 4, {.mlp_hidden = {6, 5}});
  nn::Network dst = nn::make_mlp({10}, 3, {.mlp_hidden = {6, 5}});
  src.initialize(rng);
  dst.initialize(rng);
  transfer_weights(src, dst, nn::default_transfer_depth(nn::Preset::mlp));
  const auto s = src.trainable_layers();
  const auto d = dst.trainable_layers();
  const auto& s0 = std::get<nn::Dense>(src.layers()[s[0]]);
  const auto& d0 = std::get<nn::Dense>(dst.layers()[d[0]]);
  EXPECT_EQ(s0.weight, d0.weight);
  EXPECT_EQ(s0.bias, d0.bias);
  EXPECT_NE(std::get<nn::Dense>(src.layers()[s[1]]).weight, std::get<nn::Dense>(dst.layers()[d[1]]).weight);
}

TEST(Transfer, CnnDepthThreeSharesConvsAndPeersDifferLater) {
  Rng rng(43);
  const Shape shape{1, 12, 12};
  const nn::ArchitectureOptions arch{.cnn_channels = {4, 6, 6}, .feature_dim = 16};
  nn::Network pretext = nn::make_small_cnn(shape, 4, arch);
  nn::Network p = nn::make_small_cnn(shape, 5, arch);
  nn::Network q = nn::make_small_cnn(shape, 5, arch);
  pretext.initialize(rng);
  p.initialize(rng);
  q.initialize(rng);
  const std::size_t depth = nn::default_transfer_depth(nn::Preset::small_cnn);
  ASSERT_EQ(depth, 3u);
  transfer_weights(pretext, p, depth);
  transfer_weights(pretext, q, depth);
  const auto t = pretext.trainable_layers();
  const auto tp = p.trainable_layers();
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& a = std::get<nn::Conv2D>(pretext.layers()[t[i]]);
    EXPECT_EQ(a.weight, std::get<nn::Conv2D>(p.layers()[tp[i]]).weight);
    EXPECT_EQ(a.weight, std::get<nn::Conv2D>(q.layers()[tp[i]]).weight);
    EXPECT_EQ(a.bias, std::get<nn::Conv2D>(q.layers()[tp[i]]).bias);
  }
  bool differ = false;
  for (std::size_t i = 3; i < tp.size(); ++i) {
    differ = differ || std::get<nn::Dense>(p.layers()[tp[i]]).weight != std::get<nn::Dense>(q.layers()[tp[i]]).weight;
  }
  EXPECT_TRUE(differ);
}

TEST(Transfer, IncompatibleLayersAreConfigErrors) {
  Rng rng(44);
  nn::Network src = nn::make_mlp({10}, 4, {.mlp_hidden = {6, 5}});
  nn::Network wide = nn::make_mlp({10}, 4, {.mlp_hidden = {7, 5}});
  EXPECT_THROW(transfer_weights(src, wide, 1), ConfigError);
  nn::Network dst = nn::make_mlp({10}, 4, {.mlp_hidden = {6, 5}});
  EXPECT_THROW(transfer_weights(src, dst, 4), ConfigError);
  nn::Network cnn = nn::make_small_cnn({1, 8, 8}, 4, {.cnn_channels = {2, 2, 2}, .feature_dim = 4});
  nn::Network mlp = nn::make_mlp({1, 8, 8}, 4, {.mlp_hidden = {6}});
  EXPECT_THROW(transfer_weights(cnn, mlp, 1), ConfigError);
}
