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

#ifndef FEDTENSOR_FEDERATION_HPP
#define FEDTENSOR_FEDERATION_HPP

#include <string>
#include <vector>

#include "fedtensor/tensor.hpp"

namespace fedtensor {

/// Nonempty ordered list of distinct client identifiers. The order is total
/// and fixed; it determines the layout of every virtual global tensor and
/// the fold order of every merge.
class Federation {
public:
  explicit Federation(std::vector<std::string> clients);

  std::size_t size() const { return clients_.size(); }
  const std::vector<std::string> &clients() const { return clients_; }
  const std::string &client(std::size_t i) const { return clients_[i]; }

  /// Index of a client id; throws ValueError when absent.
  std::size_t index_of(const std::string &id) const;

  bool operator==(const Federation &other) const {
    return clients_ == other.clients_;
  }
  bool operator!=(const Federation &other) const { return !(*this == other); }

private:
  std::vector<std::string> clients_;
};

/// A client-indexed family of tensors sharing every extent except the one at
/// the record axis, whose extent (the local record count) varies per client
/// and may be zero.
class FederatedValue {
public:
  /// `locals` are given in federation order. Each local shape must equal
  /// `nonrecord_shape` with that client's record count inserted at the
  /// 1-based `record_axis`.
  FederatedValue(Federation federation, int record_axis, Shape nonrecord_shape,
                 std::vector<TensorValue> locals);

  const Federation &federation() const { return federation_; }
  int record_axis() const { return record_axis_; }
  const Shape &nonrecord_shape() const { return nonrecord_shape_; }
  int rank() const { return nonrecord_shape_.rank() + 1; }

  const std::vector<TensorValue> &locals() const { return locals_; }
  const TensorValue &local(std::size_t i) const { return locals_[i]; }

  std::int64_t record_count(std::size_t i) const {
    return locals_[i].shape().extent(record_axis_);
  }
  std::int64_t total_records() const;

  /// Copy with client `i`'s local tensor replaced (same shape constraints).
  FederatedValue with_local(std::size_t i, TensorValue replacement) const;

private:
  Federation federation_;
  int record_axis_;
  Shape nonrecord_shape_;
  std::vector<TensorValue> locals_;
};

/// Concatenation of the local tensors along the record axis in federation
/// order. A semantic reference object: distributed execution never forms it.
TensorValue virtual_global(const FederatedValue &x);

} // namespace fedtensor

#endif // FEDTENSOR_FEDERATION_HPP
