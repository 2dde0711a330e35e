// Copyright 2026 The FedTensor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedtensor/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace fedtensor {

TensorValue::TensorValue(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<std::int64_t>(data_.size()) != shape_.numel()) {
    throw ValueError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str() + " with " +
                     std::to_string(shape_.numel()) + " elements");
  }
}

TensorValue TensorValue::full(const Shape &shape, double fill) {
  return TensorValue(shape,
                     std::vector<double>(
                         static_cast<std::size_t>(shape.numel()), fill));
}

TensorValue TensorValue::identity_matrix(std::int64_t p) {
  if (p < 1) throw ValueError("identity matrix extent must be positive");
  std::vector<double> data(static_cast<std::size_t>(p * p), 0.0);
  for (std::int64_t i = 0; i < p; ++i) {
    data[static_cast<std::size_t>(i * p + i)] = 1.0;
  }
  return TensorValue(Shape({p, p}), std::move(data));
}

double TensorValue::at(const std::vector<std::int64_t> &multi) const {
  const auto strides = row_major_strides(shape_);
  return data_[static_cast<std::size_t>(flatten_index(multi, strides))];
}

bool TensorValue::same_bits(const TensorValue &other) const {
  if (shape_ != other.shape_) return false;
  if (data_.empty()) return other.data_.empty();
  return std::memcmp(data_.data(), other.data_.data(),
                     data_.size() * sizeof(double)) == 0;
}

std::string TensorValue::str() const {
  std::ostringstream os;
  os << shape_.str() << '[';
  const std::size_t limit = 16;
  for (std::size_t i = 0; i < data_.size() && i < limit; ++i) {
    if (i > 0) os << ',';
    os << data_[i];
  }
  if (data_.size() > limit) os << ",...";
  os << ']';
  return os.str();
}

} // namespace fedtensor
