#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinekit {

/// Runtime error raised by all spinekit operations.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major float32 tensor. All heatmap / vector-field data lives in
/// one of these; geometry and scoring work in double.
class NdArray {
public:
  NdArray() = default;

  explicit NdArray(std::vector<std::size_t> shape, float fill = 0.0f)
      : shape_(std::move(shape)),
        data_(element_count(shape_), fill) {}

  NdArray(std::vector<std::size_t> shape, std::vector<float> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != element_count(shape_)) {
      throw Error("NdArray: value count does not match shape");
    }
  }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& values() { return data_; }
  const std::vector<float>& values() const { return data_; }

  /// Stride (in elements) of axis i.
  std::size_t stride(std::size_t i) const {
    std::size_t s = 1;
    for (std::size_t k = i + 1; k < shape_.size(); ++k) s *= shape_[k];
    return s;
  }

  template <typename... Ix>
  float& at(Ix... ix) {
    return data_[flat_index({static_cast<std::size_t>(ix)...})];
  }
  template <typename... Ix>
  float at(Ix... ix) const {
    return data_[flat_index({static_cast<std::size_t>(ix)...})];
  }

  std::size_t flat_index(std::initializer_list<std::size_t> ix) const {
    if (ix.size() != shape_.size()) {
      throw Error("NdArray: index rank mismatch");
    }
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : ix) {
      if (i >= shape_[axis]) throw Error("NdArray: index out of range");
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }

  bool same_shape(const NdArray& other) const { return shape_ == other.shape_; }

  bool all_finite() const;

  static std::string shape_string(const std::vector<std::size_t>& shape);

private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

}  // namespace spinekit
