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

#include "fedtensor/shape.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace fedtensor {

void Shape::validate() const {
  for (auto d : dims_) {
    if (d < 0) {
      throw ValueError("shape extent must be nonnegative, got " +
                       std::to_string(d));
    }
  }
}

std::int64_t Shape::extent(int axis) const {
  if (axis < 1 || axis > rank()) {
    throw ValueError("axis " + std::to_string(axis) +
                     " out of range for rank " + std::to_string(rank()));
  }
  return dims_[static_cast<std::size_t>(axis - 1)];
}

std::int64_t Shape::numel() const {
  std::int64_t n = 1;
  for (auto d : dims_) n *= d;
  return n;
}

bool Shape::all_positive() const {
  return std::all_of(dims_.begin(), dims_.end(),
                     [](std::int64_t d) { return d >= 1; });
}

Shape Shape::drop_axis(int axis) const {
  if (axis < 1 || axis > rank()) {
    throw ValueError("cannot drop axis " + std::to_string(axis) +
                     " of rank-" + std::to_string(rank()) + " shape");
  }
  std::vector<std::int64_t> out = dims_;
  out.erase(out.begin() + (axis - 1));
  return Shape(std::move(out));
}

Shape Shape::insert_axis(int axis, std::int64_t extent) const {
  if (axis < 1 || axis > rank() + 1) {
    throw ValueError("cannot insert at axis " + std::to_string(axis) +
                     " of rank-" + std::to_string(rank()) + " shape");
  }
  std::vector<std::int64_t> out = dims_;
  out.insert(out.begin() + (axis - 1), extent);
  return Shape(std::move(out));
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i > 0) os << ',';
    os << dims_[i];
  }
  os << ')';
  return os.str();
}

std::vector<std::int64_t> row_major_strides(const Shape &shape) {
  const auto &dims = shape.dims();
  std::vector<std::int64_t> strides(dims.size(), 1);
  for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i) {
    const std::int64_t next = std::max<std::int64_t>(dims[i + 1], 1);
    strides[i] = strides[i + 1] * next;
  }
  return strides;
}

void unflatten_index(std::int64_t linear, const Shape &shape,
                     std::vector<std::int64_t> &out) {
  const auto &dims = shape.dims();
  out.resize(dims.size());
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    const std::int64_t d = std::max<std::int64_t>(dims[i], 1);
    out[i] = linear % d;
    linear /= d;
  }
}

std::int64_t flatten_index(const std::vector<std::int64_t> &multi,
                           const std::vector<std::int64_t> &strides) {
  std::int64_t linear = 0;
  for (std::size_t i = 0; i < multi.size(); ++i) linear += multi[i] * strides[i];
  return linear;
}

namespace {

std::int64_t padded_extent(const Shape &s, int padded_axis, int padded_rank) {
  const int offset = padded_rank - s.rank();
  if (padded_axis <= offset) return 1;
  return s.dims()[static_cast<std::size_t>(padded_axis - offset - 1)];
}

} // namespace

bool broadcast_compatible(const Shape &s, const Shape &t) {
  const int l = std::max(s.rank(), t.rank());
  for (int i = 1; i <= l; ++i) {
    const std::int64_t a = padded_extent(s, i, l);
    const std::int64_t b = padded_extent(t, i, l);
    if (a != b && a != 1 && b != 1) return false;
  }
  return true;
}

Shape broadcast_shape(const Shape &s, const Shape &t) {
  const int l = std::max(s.rank(), t.rank());
  std::vector<std::int64_t> out(static_cast<std::size_t>(l));
  for (int i = 1; i <= l; ++i) {
    const std::int64_t a = padded_extent(s, i, l);
    const std::int64_t b = padded_extent(t, i, l);
    if (a == b) {
      out[static_cast<std::size_t>(i - 1)] = a;
    } else if (a == 1) {
      out[static_cast<std::size_t>(i - 1)] = b;
    } else if (b == 1) {
      out[static_cast<std::size_t>(i - 1)] = a;
    } else {
      throw ValueError("shapes " + s.str() + " and " + t.str() +
                       " are not broadcast-compatible at axis " +
                       std::to_string(i));
    }
  }
  return Shape(std::move(out));
}

bool broadcastable_to(const Shape &s, const Shape &target) {
  if (s.rank() > target.rank()) return false;
  const int l = target.rank();
  for (int i = 1; i <= l; ++i) {
    const std::int64_t a = padded_extent(s, i, l);
    const std::int64_t b = target.dims()[static_cast<std::size_t>(i - 1)];
    if (a != b && a != 1) return false;
  }
  return true;
}

Permutation::Permutation(std::vector<int> images) : images_(std::move(images)) {
  const int k = static_cast<int>(images_.size());
  if (k == 0) throw ValueError("permutation must have at least one entry");
  std::vector<bool> seen(static_cast<std::size_t>(k), false);
  for (int v : images_) {
    if (v < 1 || v > k || seen[static_cast<std::size_t>(v - 1)]) {
      throw ValueError("invalid permutation image list");
    }
    seen[static_cast<std::size_t>(v - 1)] = true;
  }
}

Permutation Permutation::identity(int k) {
  std::vector<int> images(static_cast<std::size_t>(k));
  std::iota(images.begin(), images.end(), 1);
  return Permutation(std::move(images));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(images_.size());
  for (int j = 1; j <= size(); ++j) {
    inv[static_cast<std::size_t>(image(j) - 1)] = j;
  }
  return Permutation(std::move(inv));
}

Shape Permutation::apply_to_shape(const Shape &s) const {
  if (s.rank() != size()) {
    throw ValueError("permutation of size " + std::to_string(size()) +
                     " applied to rank-" + std::to_string(s.rank()) +
                     " shape");
  }
  const Permutation inv = inverse();
  std::vector<std::int64_t> out(static_cast<std::size_t>(size()));
  for (int i = 1; i <= size(); ++i) {
    out[static_cast<std::size_t>(i - 1)] = s.extent(inv.image(i));
  }
  return Shape(std::move(out));
}

bool Permutation::is_identity() const {
  for (int j = 1; j <= size(); ++j) {
    if (image(j) != j) return false;
  }
  return true;
}

std::string Permutation::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (i > 0) os << ',';
    os << images_[i];
  }
  os << ']';
  return os.str();
}

const char *to_string(TypeErrorKind kind) {
  switch (kind) {
  case TypeErrorKind::ShapeMismatch: return "shape-mismatch";
  case TypeErrorKind::RecordAxisViolation: return "record-axis-violation";
  case TypeErrorKind::BroadcastIncompatible: return "broadcast-incompatible";
  case TypeErrorKind::UnboundVariable: return "unbound-variable";
  case TypeErrorKind::Arity: return "arity";
  case TypeErrorKind::FedFedForm: return "fedfed-form";
  case TypeErrorKind::ExtensionMisuse: return "extension-misuse";
  }
  return "unknown";
}

std::string path_to_string(const ExprPath &path) {
  if (path.empty()) return "root";
  std::string s;
  for (int p : path) {
    s += '/';
    s += std::to_string(p);
  }
  return s;
}

} // namespace fedtensor
