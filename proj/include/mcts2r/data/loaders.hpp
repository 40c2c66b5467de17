#ifndef MCTS2R_DATA_LOADERS_HPP
#define MCTS2R_DATA_LOADERS_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mcts2r/data/dataset.hpp"
#include "mcts2r/errors.hpp"

namespace mcts2r::data {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at, const std::string& file) {
  if (at + 4 > b.size()) throw FormatError(file + ": truncated header", b.size());
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

}  // namespace detail

// MNIST IDX pair (big-endian headers). Pixels scaled to [0, 1]; images are
// shaped [n, 1, rows, cols].
inline Dataset load_mnist_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path,
                              Split split = Split::train, std::size_t num_classes = 10) {
  const auto img = detail::slurp(image_path);
  const auto lab = detail::slurp(label_path);
  const std::string img_name = image_path.filename().string();
  const std::string lab_name = label_path.filename().string();

  if (const auto magic = detail::read_be32(img, 0, img_name); magic != kIdxImageMagic) {
    throw FormatError(img_name + ": bad image magic " + std::to_string(magic), 0);
  }
  if (const auto magic = detail::read_be32(lab, 0, lab_name); magic != kIdxLabelMagic) {
    throw FormatError(lab_name + ": bad label magic " + std::to_string(magic), 0);
  }
  const std::size_t n = detail::read_be32(img, 4, img_name);
  const std::size_t rows = detail::read_be32(img, 8, img_name);
  const std::size_t cols = detail::read_be32(img, 12, img_name);
  const std::size_t n_labels = detail::read_be32(lab, 4, lab_name);
  if (n != n_labels) {
    throw FormatError(lab_name + ": label count " + std::to_string(n_labels) + " != image count " + std::to_string(n), 4);
  }
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + n * pixels) throw FormatError(img_name + ": truncated image data", img.size());
  if (lab.size() < 8 + n) throw FormatError(lab_name + ": truncated label data", lab.size());

  Tensor images({n, 1, rows, cols});
  for (std::size_t i = 0; i < n * pixels; ++i) images[i] = static_cast<double>(img[16 + i]) / 255.0;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = lab[8 + i];
    if (static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw FormatError(lab_name + ": label " + std::to_string(labels[i]) + " out of range", 8 + i);
    }
  }
  return Dataset(std::move(images), std::move(labels), num_classes, split);
}

inline Dataset load_mnist_dir(const std::filesystem::path& dir, Split split) {
  const std::string prefix = split == Split::train ? "train" : "t10k";
  return load_mnist_idx(dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte"), split);
}

enum class CifarKind { cifar10, cifar100 };

// CIFAR binary batches: per record 1 label byte (CIFAR-10) or coarse + fine
// label bytes (CIFAR-100, the fine label is used), then 3072 CHW pixel bytes.
inline Dataset load_cifar_binary(const std::vector<std::filesystem::path>& paths, CifarKind kind,
                                 Split split = Split::train) {
  const std::size_t label_bytes = kind == CifarKind::cifar10 ? 1 : 2;
  const std::size_t pixels = 3 * 32 * 32;
  const std::size_t record = label_bytes + pixels;
  const std::size_t num_classes = kind == CifarKind::cifar10 ? 10 : 100;

  std::vector<std::vector<std::uint8_t>> files;
  std::size_t n = 0;
  for (const auto& p : paths) {
    files.push_back(detail::slurp(p));
    const auto& b = files.back();
    if (b.empty()) throw FormatError(p.filename().string() + ": empty file", 0);
    if (b.size() % record != 0) {
      throw FormatError(p.filename().string() + ": size " + std::to_string(b.size()) +
                            " is not a multiple of the record length " + std::to_string(record),
                        b.size() - b.size() % record);
    }
    n += b.size() / record;
  }
  if (n == 0) throw FormatError("no CIFAR records", 0);

  Tensor images({n, 3, 32, 32});
  std::vector<int> labels(n);
  std::size_t row = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& b = files[f];
    for (std::size_t off = 0; off < b.size(); off += record, ++row) {
      const int label = b[off + label_bytes - 1];
      if (static_cast<std::size_t>(label) >= num_classes) {
        throw FormatError(paths[f].filename().string() + ": label " + std::to_string(label) + " out of range",
                          off + label_bytes - 1);
      }
      labels[row] = label;
      for (std::size_t i = 0; i < pixels; ++i) images[row * pixels + i] = b[off + label_bytes + i] / 255.0;
    }
  }
  return Dataset(std::move(images), std::move(labels), num_classes, split);
}

}  // namespace mcts2r::data

#endif  // MCTS2R_DATA_LOADERS_HPP
