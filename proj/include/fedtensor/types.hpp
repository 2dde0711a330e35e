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

#ifndef FEDTENSOR_TYPES_HPP
#define FEDTENSOR_TYPES_HPP

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fedtensor/shape.hpp"

namespace fedtensor {

/// Shared tensor type Sh(s): one value available identically everywhere.
struct ShType {
  Shape shape;

  bool operator==(const ShType &o) const { return shape == o.shape; }
};

/// Federated tensor type Fed_r(d): record axis r (1-based), common
/// non-record shape d. Rank is |d| + 1; the record extent is per-client and
/// not part of the type.
struct FedType {
  int record_axis = 1;
  Shape nonrecord;

  int rank() const { return nonrecord.rank() + 1; }

  bool operator==(const FedType &o) const {
    return record_axis == o.record_axis && nonrecord == o.nonrecord;
  }
};

class TensorType {
public:
  TensorType() : t_(ShType{Shape()}) {}
  TensorType(ShType t);   // NOLINT: implicit by design
  TensorType(FedType t);  // NOLINT: implicit by design

  static TensorType shared(Shape s) { return TensorType(ShType{std::move(s)}); }
  static TensorType federated(int record_axis, Shape nonrecord) {
    return TensorType(FedType{record_axis, std::move(nonrecord)});
  }

  bool is_shared() const { return std::holds_alternative<ShType>(t_); }
  bool is_federated() const { return !is_shared(); }

  const ShType &as_shared() const { return std::get<ShType>(t_); }
  const FedType &as_federated() const { return std::get<FedType>(t_); }

  int rank() const {
    return is_shared() ? as_shared().shape.rank() : as_federated().rank();
  }

  bool operator==(const TensorType &o) const { return t_ == o.t_; }
  bool operator!=(const TensorType &o) const { return !(*this == o); }

  std::string str() const;

private:
  std::variant<ShType, FedType> t_;
};

/// Finite map from variable names to tensor types.
using Context = std::map<std::string, TensorType>;

/// Shape tuple over N ∪ {*}: the non-record extents with the record axis
/// marked. Exactly one entry is the marker (nullopt).
struct SymbolicShape {
  std::vector<std::optional<std::int64_t>> entries;

  int rank() const { return static_cast<int>(entries.size()); }
  /// 1-based position of the record marker.
  int star_axis() const;
  /// Tuple with the marker deleted, order preserved.
  Shape erase_star() const;

  std::string str() const;
};

SymbolicShape symbolic_shape(const FedType &t);

/// Rebuild the federated type whose symbolic shape is `sym`.
FedType fed_from_symbolic(const SymbolicShape &sym);

} // namespace fedtensor

#endif // FEDTENSOR_TYPES_HPP
