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

#include "fedtensor/federation.hpp"

#include <set>

#include "fedtensor/kernels.hpp"

namespace fedtensor {

Federation::Federation(std::vector<std::string> clients)
    : clients_(std::move(clients)) {
  if (clients_.empty()) {
    throw ValueError("a federation must contain at least one client");
  }
  std::set<std::string> seen;
  for (const auto &c : clients_) {
    if (!seen.insert(c).second) {
      throw ValueError("duplicate client id '" + c + "'");
    }
  }
}

std::size_t Federation::index_of(const std::string &id) const {
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    if (clients_[i] == id) return i;
  }
  throw ValueError("unknown client id '" + id + "'");
}

FederatedValue::FederatedValue(Federation federation, int record_axis,
                               Shape nonrecord_shape,
                               std::vector<TensorValue> locals)
    : federation_(std::move(federation)), record_axis_(record_axis),
      nonrecord_shape_(std::move(nonrecord_shape)), locals_(std::move(locals)) {
  const int k = nonrecord_shape_.rank() + 1;
  if (record_axis_ < 1 || record_axis_ > k) {
    throw ValueError("record axis " + std::to_string(record_axis_) +
                     " out of range for rank " + std::to_string(k));
  }
  if (!nonrecord_shape_.all_positive()) {
    throw ValueError("non-record shape must have positive extents, got " +
                     nonrecord_shape_.str());
  }
  if (locals_.size() != federation_.size()) {
    throw ValueError("expected " + std::to_string(federation_.size()) +
                     " local tensors, got " + std::to_string(locals_.size()));
  }
  for (std::size_t i = 0; i < locals_.size(); ++i) {
    const Shape &s = locals_[i].shape();
    const std::int64_t n = s.rank() == k ? s.extent(record_axis_) : -1;
    if (n < 0 || s != nonrecord_shape_.insert_axis(record_axis_, n)) {
      throw ValueError("client '" + federation_.client(i) + "' local shape " +
                       s.str() + " does not match non-record shape " +
                       nonrecord_shape_.str() + " with record axis " +
                       std::to_string(record_axis_));
    }
  }
}

std::int64_t FederatedValue::total_records() const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < locals_.size(); ++i) n += record_count(i);
  return n;
}

FederatedValue FederatedValue::with_local(std::size_t i,
                                          TensorValue replacement) const {
  std::vector<TensorValue> locals = locals_;
  locals[i] = std::move(replacement);
  return FederatedValue(federation_, record_axis_, nonrecord_shape_,
                        std::move(locals));
}

TensorValue virtual_global(const FederatedValue &x) {
  std::vector<const TensorValue *> parts;
  parts.reserve(x.locals().size());
  for (const auto &t : x.locals()) parts.push_back(&t);
  return kernels::concat_axis(parts, x.record_axis());
}

} // namespace fedtensor
