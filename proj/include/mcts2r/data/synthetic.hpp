#ifndef MCTS2R_DATA_SYNTHETIC_HPP
#define MCTS2R_DATA_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mcts2r/data/dataset.hpp"
#include "mcts2r/errors.hpp"
#include "mcts2r/nn/weights_io.hpp"
#include "mcts2r/random.hpp"
#include "mcts2r/tensor.hpp"

namespace mcts2r::data {

struct BlobSpec {
  std::size_t num_classes = 5;
  std::size_t per_class = 400;
  std::size_t test_per_class = 200;
  std::size_t dim = 10;
  double separation = 10.0;
  double noise_std = 1.0;
};

// Centers drawn from N(0, (separation^2 / dim) I) by rejection so that every
// pair is at least `separation` apart.
inline Tensor make_blob_centers(std::size_t num_classes, std::size_t dim, double separation, Rng& rng,
                                std::size_t attempts_per_center = 20000) {
  if (num_classes < 2) throw ConfigError("blobs need K >= 2");
  if (dim < 2) throw ConfigError("blobs need dim >= 2");
  if (!(separation > 0.0)) throw ConfigError("blob separation must be positive");
  const double scale = separation / std::sqrt(static_cast<double>(dim));
  Tensor centers({num_classes, dim});
  for (std::size_t k = 0; k < num_classes; ++k) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < attempts_per_center && !placed; ++attempt) {
      auto c = centers.row(k);
      for (double& v : c) v = rng.normal(0.0, scale);
      placed = true;
      for (std::size_t j = 0; j < k && placed; ++j) {
        double d2 = 0.0;
        const auto o = centers.row(j);
        for (std::size_t a = 0; a < dim; ++a) d2 += (c[a] - o[a]) * (c[a] - o[a]);
        placed = std::sqrt(d2) >= separation;
      }
    }
    if (!placed) {
      throw ConfigError("cannot place " + std::to_string(num_classes) + " blob centers " +
                        std::to_string(separation) + " apart in " + std::to_string(dim) + " dimensions");
    }
  }
  return centers;
}

// Interleaved classes: sample i belongs to class i mod K.
inline Dataset sample_blobs(const Tensor& centers, std::size_t per_class, double noise_std, Rng& rng, Split split) {
  const std::size_t K = centers.rows();
  const std::size_t dim = centers.row_size();
  const std::size_t n = K * per_class;
  Tensor x({n, dim});
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % K;
    labels[i] = static_cast<int>(k);
    const auto c = centers.row(k);
    auto r = x.row(i);
    for (std::size_t a = 0; a < dim; ++a) r[a] = c[a] + rng.normal(0.0, noise_std);
  }
  return Dataset(std::move(x), std::move(labels), K, split);
}

inline Dataset make_blobs(std::size_t num_classes, std::size_t per_class, std::size_t dim, double separation,
                          double noise_std, std::uint64_t seed) {
  Rng center_rng = stream(seed, "blob-centers");
  const Tensor centers = make_blob_centers(num_classes, dim, separation, center_rng);
  Rng sample_rng = stream(seed, "blob-train");
  return sample_blobs(centers, per_class, noise_std, sample_rng, Split::train);
}

struct TrainTest {
  Dataset train;
  Dataset test;
};

// Train and held-out test sets drawn around the same centers.
inline TrainTest make_blobs_split(const BlobSpec& spec, std::uint64_t seed) {
  Rng center_rng = stream(seed, "blob-centers");
  const Tensor centers = make_blob_centers(spec.num_classes, spec.dim, spec.separation, center_rng);
  Rng train_rng = stream(seed, "blob-train");
  Rng test_rng = stream(seed, "blob-test");
  return {sample_blobs(centers, spec.per_class, spec.noise_std, train_rng, Split::train),
          sample_blobs(centers, spec.test_per_class, spec.noise_std, test_rng, Split::test)};
}

struct RenderSpec {
  std::size_t side = 12;
  // Amplitude of the fixed marker in the top-left corner.
  double cue_strength = 0.5;
  double pixel_noise = 0.1;
  // Gaussian bumps per basis pattern.
  std::size_t bumps = 3;
};

// Basis images for rendering: one unit-peak pattern per input coordinate,
// each a sum of randomly placed Gaussian bumps (so generically asymmetric
// under 90-degree rotations).
inline Tensor make_render_basis(std::size_t dim, const RenderSpec& spec, Rng& rng) {
  const std::size_t side = spec.side;
  Tensor basis({dim, side * side});
  for (std::size_t j = 0; j < dim; ++j) {
    auto b = basis.row(j);
    for (std::size_t m = 0; m < spec.bumps; ++m) {
      const double cy = rng.uniform(0.0, static_cast<double>(side - 1));
      const double cx = rng.uniform(0.0, static_cast<double>(side - 1));
      const double width = rng.uniform(0.8, 2.0);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          b[y * side + x] += sign * std::exp(-d2 / (2.0 * width * width));
        }
      }
    }
    double peak = 0.0;
    for (const double v : b) peak = std::max(peak, std::abs(v));
    for (double& v : b) v /= peak;
  }
  return basis;
}

inline Tensor orientation_cue(std::size_t side) {
  Tensor cue({side * side});
  for (std::size_t x = 0; x < side / 2; ++x) cue[x] = 1.0;
  for (std::size_t y = 0; y < side / 3; ++y) cue[y * side] = 1.0;
  return cue;
}

// Renders feature vectors as [1, side, side] grayscale images: a fixed linear
// embedding of the (globally standardized) vector, an asymmetric corner marker
// and pixel noise. Labels are carried over unchanged. The same `seed` gives the
// same embedding, so train and test must be rendered with one seed.
inline Dataset render_oriented(const Dataset& vectors, const RenderSpec& spec, std::uint64_t seed,
                               double feature_scale) {
  const Tensor& x = vectors.images();
  if (x.rank() != 2) throw InvalidInput("render_oriented expects [n, dim] vectors");
  const std::size_t n = x.rows();
  const std::size_t dim = x.row_size();
  const std::size_t pixels = spec.side * spec.side;
  Rng basis_rng = stream(seed, "render-basis");
  const Tensor basis = make_render_basis(dim, spec, basis_rng);
  const Tensor cue = orientation_cue(spec.side);
  Rng noise_rng = stream(seed, vectors.split() == Split::train ? "render-noise-train" : "render-noise-test");

  Tensor images({n, 1, spec.side, spec.side});
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = x.row(i);
    auto img = images.row(i);
    for (std::size_t p = 0; p < pixels; ++p) {
      double s = spec.cue_strength * cue[p];
      for (std::size_t j = 0; j < dim; ++j) s += (v[j] / feature_scale) * basis[j * pixels + p];
      img[p] = s + spec.pixel_noise * noise_rng.normal();
    }
  }
  std::vector<int> labels(vectors.given_labels().begin(), vectors.given_labels().end());
  return Dataset(std::move(images), std::move(labels), vectors.num_classes(), vectors.split());
}

// Root-mean-square coordinate, used as the common rendering scale.
inline double rms(const Tensor& x) {
  double s = 0.0;
  for (const double v : x.values()) s += v * v;
  return x.empty() ? 1.0 : std::sqrt(s / static_cast<double>(x.size()));
}

// Binary dataset file (little-endian):
//   "NLBL" | u8 version (=1) | u32 K | u32 n | u32 dim
//   then per sample: u32 true label | u32 given label | f64 values[dim]
inline constexpr std::uint8_t kDatasetFormatVersion = 1;

inline void save_nlbl(const Dataset& d, const std::filesystem::path& path) {
  nn::detail::ByteWriter w;
  w.raw("NLBL", 4);
  w.u8(kDatasetFormatVersion);
  w.u32(static_cast<std::uint32_t>(d.num_classes()));
  w.u32(static_cast<std::uint32_t>(d.size()));
  w.u32(static_cast<std::uint32_t>(d.images().row_size()));
  const auto truth = d.true_labels();
  const auto given = d.given_labels();
  for (std::size_t i = 0; i < d.size(); ++i) {
    w.u32(static_cast<std::uint32_t>(truth[i]));
    w.u32(static_cast<std::uint32_t>(given[i]));
    for (const double v : d.images().row(i)) w.f64(v);
  }
  nn::detail::write_file_bytes(path, w.bytes());
}

// `sample_shape` restores image structure (e.g. {1, 12, 12}); empty keeps
// flat [n, dim] rows.
inline Dataset load_nlbl(const std::filesystem::path& path, Split split, const Shape& sample_shape = {}) {
  nn::detail::ByteReader r(nn::detail::read_file_bytes(path));
  if (r.raw(4) != "NLBL") throw FormatError("bad dataset magic", 0);
  if (const auto v = r.u8(); v != kDatasetFormatVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(v), 4);
  }
  const std::size_t K = r.u32();
  const std::size_t n = r.u32();
  const std::size_t dim = r.u32();
  if (!sample_shape.empty() && shape_volume(sample_shape) != dim) {
    throw InvalidInput("sample shape " + shape_string(sample_shape) + " does not match dim " + std::to_string(dim));
  }
  Tensor x({n, dim});
  std::vector<int> truth(n), given(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = static_cast<int>(r.u32());
    given[i] = static_cast<int>(r.u32());
    for (double& v : x.row(i)) v = r.f64();
  }
  if (!r.at_end()) throw FormatError("trailing bytes after dataset", r.position());
  Shape shape{n};
  if (sample_shape.empty()) {
    shape.push_back(dim);
  } else {
    shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  }
  Dataset clean(std::move(x).reshaped(shape), std::move(truth), K, split);
  if (split == Split::test) return clean;
  return clean.with_given_labels(std::move(given));
}

}  // namespace mcts2r::data

#endif  // MCTS2R_DATA_SYNTHETIC_HPP
