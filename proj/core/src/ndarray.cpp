#include "supertc/ndarray.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "supertc/error.hpp"

namespace supertc {

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

NdArray::NdArray(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  if (std::find(shape_.begin(), shape_.end(), 0u) != shape_.end()) {
    throw Error(ErrorCode::kShapeMismatch, "zero extent in shape " + shape_to_string(shape_));
  }
}

NdArray::NdArray(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_) ||
      std::find(shape_.begin(), shape_.end(), 0u) != shape_.end()) {
    throw Error(ErrorCode::kShapeMismatch, "shape " + shape_to_string(shape_) + " does not hold " +
                                               std::to_string(data_.size()) + " values");
  }
}

NdArray NdArray::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  return NdArray(std::move(shape), data_);
}

void NdArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void require_shape(const NdArray& array, const Shape& expected, const char* what) {
  if (array.shape() != expected) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": expected " +
                                               shape_to_string(expected) + ", got " +
                                               shape_to_string(array.shape()));
  }
}

}  // namespace supertc
