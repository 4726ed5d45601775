// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pse::nn {

using Shape = std::vector<int64_t>;

std::string ShapeToString(const Shape& shape);
int64_t NumElements(const Shape& shape);

// Dense row-major array of doubles. Value type; copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int axis) const { return shape_.at(axis); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }

  // 3-D accessor for [C, T, F] maps.
  double& at(int64_t c, int64_t t, int64_t f) {
    return data_[(c * shape_[1] + t) * shape_[2] + f];
  }
  double at(int64_t c, int64_t t, int64_t f) const {
    return data_[(c * shape_[1] + t) * shape_[2] + f];
  }

  // Same data, new shape. Element counts must agree.
  Tensor Reshaped(Shape shape) const;
  void Fill(double v);
  bool AllFinite() const;
  // Accumulates `other` (same size) into this tensor.
  void Add(const Tensor& other, double scale = 1.0);

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace pse::nn
