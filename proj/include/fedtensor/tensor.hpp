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

#ifndef FEDTENSOR_TENSOR_HPP
#define FEDTENSOR_TENSOR_HPP

#include <string>
#include <vector>

#include "fedtensor/shape.hpp"

namespace fedtensor {

/// Dense real tensor with an explicit shape and row-major flat storage.
/// Values are immutable after construction; copies are cheap enough for the
/// tensor sizes this library targets.
class TensorValue {
public:
  /// Rank-0 tensor holding 0.0.
  TensorValue() : shape_(), data_(1, 0.0) {}

  TensorValue(Shape shape, std::vector<double> data);

  static TensorValue scalar(double v) { return TensorValue(Shape(), {v}); }

  /// Tensor of the given shape with every entry equal to `fill`.
  static TensorValue full(const Shape &shape, double fill);

  static TensorValue zeros(const Shape &shape) { return full(shape, 0.0); }

  /// Identity matrix of extent p.
  static TensorValue identity_matrix(std::int64_t p);

  const Shape &shape() const { return shape_; }
  const std::vector<double> &data() const { return data_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  int rank() const { return shape_.rank(); }

  double at_linear(std::int64_t i) const {
    return data_[static_cast<std::size_t>(i)];
  }
  /// Element at a 0-based multi-index.
  double at(const std::vector<std::int64_t> &multi) const;

  bool same_bits(const TensorValue &other) const;

  std::string str() const;

private:
  Shape shape_;
  std::vector<double> data_;
};

} // namespace fedtensor

#endif // FEDTENSOR_TENSOR_HPP
