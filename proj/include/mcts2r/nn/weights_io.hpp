#ifndef MCTS2R_NN_WEIGHTS_IO_HPP
#define MCTS2R_NN_WEIGHTS_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <variant>
#include <vector>

#include "mcts2r/errors.hpp"
#include "mcts2r/nn/network.hpp"

// Weight file layout (all integers little-endian):
//   "NLWT" | u8 version (=1) | u32 layer count
//   per trainable layer: u8 kind (1 dense, 2 conv)
//     then for weight and bias: u32 rank | u32 extents[rank] | f64 values
namespace mcts2r::nn {

inline constexpr std::uint8_t kWeightFormatVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  std::uint8_t u8() {
    need(1, "u8");
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8, "f64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string raw(std::size_t n) {
    need(n, "bytes");
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) throw FormatError(std::string("truncated while reading ") + what, pos_);
  }

  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void write_tensor(ByteWriter& w, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (const auto e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
  for (const double v : t.values()) w.f64(v);
}

inline Tensor read_tensor(ByteReader& r) {
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw FormatError("implausible tensor rank " + std::to_string(rank), r.position() - 4);
  Shape shape(rank);
  for (auto& e : shape) e = r.u32();
  std::vector<double> values(shape_volume(shape));
  for (auto& v : values) v = r.f64();
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_weights(const Network& net) {
  detail::ByteWriter w;
  w.raw("NLWT", 4);
  w.u8(kWeightFormatVersion);
  const auto trainable = net.trainable_layers();
  w.u32(static_cast<std::uint32_t>(trainable.size()));
  for (const std::size_t i : trainable) {
    if (const auto* d = std::get_if<Dense>(&net.layers()[i])) {
      w.u8(1);
      detail::write_tensor(w, d->weight);
      detail::write_tensor(w, d->bias);
    } else {
      const auto& c = std::get<Conv2D>(net.layers()[i]);
      w.u8(2);
      detail::write_tensor(w, c.weight);
      detail::write_tensor(w, c.bias);
    }
  }
  return w.bytes();
}

// Loads weights into a network of identical architecture. `target` is left
// untouched when decoding fails.
inline void decode_weights(std::vector<std::uint8_t> bytes, Network& target) {
  Network net = target;
  detail::ByteReader r(std::move(bytes));
  if (r.raw(4) != "NLWT") throw FormatError("bad weight file magic", 0);
  const std::uint8_t version = r.u8();
  if (version != kWeightFormatVersion) throw FormatError("unsupported weight file version " + std::to_string(version), 4);
  const std::uint32_t count = r.u32();
  const auto trainable = net.trainable_layers();
  if (count != trainable.size()) {
    throw FormatError("weight file has " + std::to_string(count) + " layers, network has " +
                          std::to_string(trainable.size()),
                      5);
  }
  for (const std::size_t i : trainable) {
    const std::size_t kind_at = r.position();
    const std::uint8_t kind = r.u8();
    Tensor* weight = nullptr;
    Tensor* bias = nullptr;
    if (auto* d = std::get_if<Dense>(&net.layers()[i]); d && kind == 1) {
      weight = &d->weight;
      bias = &d->bias;
    } else if (auto* c = std::get_if<Conv2D>(&net.layers()[i]); c && kind == 2) {
      weight = &c->weight;
      bias = &c->bias;
    } else {
      throw FormatError("layer kind " + std::to_string(kind) + " does not match network layer " + describe(net.layers()[i]),
                        kind_at);
    }
    const std::size_t at = r.position();
    Tensor w = detail::read_tensor(r);
    Tensor b = detail::read_tensor(r);
    if (w.shape() != weight->shape() || b.shape() != bias->shape()) {
      throw FormatError("shape mismatch for layer " + describe(net.layers()[i]), at);
    }
    *weight = std::move(w);
    *bias = std::move(b);
  }
  if (!r.at_end()) throw FormatError("trailing bytes after weights", r.position());
  target = std::move(net);
}

inline void save_weights(const Network& net, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_weights(net));
}

inline void load_weights(const std::filesystem::path& path, Network& net) {
  decode_weights(detail::read_file_bytes(path), net);
}

}  // namespace mcts2r::nn

#endif  // MCTS2R_NN_WEIGHTS_IO_HPP
