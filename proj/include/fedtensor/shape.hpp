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

#ifndef FEDTENSOR_SHAPE_HPP
#define FEDTENSOR_SHAPE_HPP

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "fedtensor/errors.hpp"

namespace fedtensor {

/// Dense row-major tensor shape. Rank 0 is a scalar.
///
/// Axis arguments throughout the public API are 1-based, matching the
/// record-axis convention of federated types. Extent 0 is representable so
/// that empty record axes (clients holding no records) have a value-level
/// shape; type-level shapes require strictly positive extents and enforce
/// that separately.
class Shape {
public:
  Shape() = default;
  Shape(std::initializer_list<std::int64_t> dims) : dims_(dims) { validate(); }
  explicit Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
    validate();
  }

  static Shape scalar() { return Shape(); }

  int rank() const { return static_cast<int>(dims_.size()); }
  const std::vector<std::int64_t> &dims() const { return dims_; }

  /// Extent of the given 1-based axis.
  std::int64_t extent(int axis) const;

  /// Number of elements; 1 for scalars, 0 if any extent is 0.
  std::int64_t numel() const;

  bool all_positive() const;

  /// Shape with the given 1-based axis removed.
  Shape drop_axis(int axis) const;

  /// Shape with `extent` inserted so it lands at 1-based position `axis`.
  Shape insert_axis(int axis, std::int64_t extent) const;

  bool operator==(const Shape &other) const { return dims_ == other.dims_; }
  bool operator!=(const Shape &other) const { return !(*this == other); }

  std::string str() const;

private:
  void validate() const;

  std::vector<std::int64_t> dims_;
};

/// Row-major strides for a shape. Zero-extent axes get the stride they would
/// have if the extent were 1.
std::vector<std::int64_t> row_major_strides(const Shape &shape);

/// Decode a row-major linear index into a multi-index (0-based entries).
void unflatten_index(std::int64_t linear, const Shape &shape,
                     std::vector<std::int64_t> &out);

/// Encode a 0-based multi-index into a row-major linear index.
std::int64_t flatten_index(const std::vector<std::int64_t> &multi,
                           const std::vector<std::int64_t> &strides);

/// Broadcast join s ∨ t: left-pad the shorter tuple with 1s, then combine
/// axis-wise (equal extents, or one side 1). Throws ValueError naming the
/// first offending axis when the shapes are incompatible.
Shape broadcast_shape(const Shape &s, const Shape &t);

bool broadcast_compatible(const Shape &s, const Shape &t);

/// True when a tensor of shape `s` can be broadcast to exactly `target`
/// (left-pad, then every axis has equal extent or source extent 1).
bool broadcastable_to(const Shape &s, const Shape &target);

/// Permutation of axes 1..k. Stored as the image list: image(j) is where
/// axis j of the input ends up in the output.
class Permutation {
public:
  explicit Permutation(std::vector<int> images);
  static Permutation identity(int k);

  int size() const { return static_cast<int>(images_.size()); }
  /// tau(j) for a 1-based axis j.
  int image(int j) const { return images_[static_cast<std::size_t>(j - 1)]; }
  const std::vector<int> &images() const { return images_; }

  Permutation inverse() const;

  /// tau · s = (s_{tau^{-1}(1)}, ..., s_{tau^{-1}(k)}).
  Shape apply_to_shape(const Shape &s) const;

  bool is_identity() const;
  bool operator==(const Permutation &other) const {
    return images_ == other.images_;
  }

  std::string str() const;

private:
  std::vector<int> images_;
};

} // namespace fedtensor

#endif // FEDTENSOR_SHAPE_HPP
