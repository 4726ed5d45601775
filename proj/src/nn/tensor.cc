// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/nn/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pse/error.h"

namespace pse::nn {

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + ShapeToString(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (NumElements(shape_) != static_cast<int64_t>(data_.size()))
    throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeToString(shape_));
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (NumElements(shape) != size())
    throw ShapeError("cannot reshape " + ShapeToString(shape_) + " to " +
                     ShapeToString(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void Tensor::Add(const Tensor& other, double scale) {
  if (other.size() != size())
    throw ShapeError("accumulate " + ShapeToString(other.shape_) + " into " +
                     ShapeToString(shape_));
  const double* src = other.data();
  if (scale == 1.0) {
    for (int64_t i = 0; i < size(); ++i) data_[i] += src[i];
  } else {
    for (int64_t i = 0; i < size(); ++i) data_[i] += scale * src[i];
  }
}

}  // namespace pse::nn
