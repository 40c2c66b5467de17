#ifndef MCTS2R_TENSOR_HPP
#define MCTS2R_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcts2r/errors.hpp"

namespace mcts2r {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Storage is over-aligned so that vectorized reductions see the same
// alignment on every allocation; otherwise SIMD peeling changes summation
// order and identical computations differ in the last bits.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* ptr, std::size_t) noexcept { ::operator delete(ptr, alignment); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

// Dense row-major array of doubles. The leading extent is the batch/row axis
// wherever a tensor holds a batch.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), values_(shape_volume(shape_), fill) {}

  Tensor(Shape shape, const std::vector<double>& values) : Tensor(std::move(shape), std::span<const double>(values)) {}

  Tensor(Shape shape, std::span<const double> values)
      : shape_(std::move(shape)), values_(values.begin(), values.end()) {
    if (shape_volume(shape_) != values_.size()) {
      throw InvalidInput("tensor shape " + shape_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Rows are slices along the leading axis.
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t row_size() const { return rows() == 0 ? 0 : values_.size() / rows(); }
  Shape row_shape() const { return shape_.empty() ? Shape{} : Shape(shape_.begin() + 1, shape_.end()); }

  std::span<double> row(std::size_t i) { return {values_.data() + i * row_size(), row_size()}; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * row_size(), row_size()};
  }

  Tensor gather_rows(std::span<const std::size_t> indices) const {
    Shape out_shape = shape_;
    out_shape[0] = indices.size();
    Tensor out(std::move(out_shape));
    const std::size_t stride = row_size();
    for (std::size_t r = 0; r < indices.size(); ++r) {
      if (indices[r] >= rows()) throw InvalidInput("row index out of range");
      std::copy_n(values_.data() + indices[r] * stride, stride, out.values_.data() + r * stride);
    }
    return out;
  }

  Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), std::span<const double>(values_)); }
  Tensor reshaped(Shape shape) && {
    if (shape_volume(shape) != values_.size()) {
      throw InvalidInput("tensor shape " + shape_string(shape) + " does not match " +
                         std::to_string(values_.size()) + " values");
    }
    Tensor out;
    out.shape_ = std::move(shape);
    out.values_ = std::move(values_);
    return out;
  }

  bool all_finite() const {
    for (const double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double, AlignedAllocator<double>> values_;
};

}  // namespace mcts2r

#endif  // MCTS2R_TENSOR_HPP
