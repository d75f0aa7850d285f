#include "gsb/nn/tensor.hpp"

#include "gsb/error.hpp"

#include <algorithm>
#include <cmath>

namespace gsb::nn {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  require(shape_.size() <= 4, ErrorCode::ShapeMismatch, "tensors have at most 4 dimensions");
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  require(shape_.size() <= 4, ErrorCode::ShapeMismatch, "tensors have at most 4 dimensions");
  require(data_.size() == shape_size(shape_), ErrorCode::ShapeMismatch,
          "data length " + std::to_string(data_.size()) + " does not match shape " + shape_string(shape_));
}

Tensor Tensor::reshaped(Shape shape) const {
  require(shape_size(shape) == data_.size(), ErrorCode::ShapeMismatch,
          "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace gsb::nn
