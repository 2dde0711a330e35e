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

#include "fedtensor/simulate.hpp"

#include <bit>
#include <cstring>
#include <limits>

namespace fedtensor {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'T', 'S', '1'};

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_f64(std::vector<std::uint8_t> &out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

class Reader {
public:
  explicit Reader(const std::vector<std::uint8_t> &bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)])
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)])
           << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  void expect_magic() {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, kMagic, 4) != 0) {
      throw FormatError("bad state header magic");
    }
    pos_ += 4;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("truncated state payload at byte " +
                        std::to_string(pos_));
    }
  }

  const std::vector<std::uint8_t> &bytes_;
  std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> serialize_state(const EncodedState &state) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(state.size()));
  for (const TensorValue &t : state) {
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::int64_t d : t.shape().dims()) {
      if (d > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("state extent " + std::to_string(d) +
                          " exceeds the u32 header field");
      }
      put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (double v : t.data()) put_f64(out, v);
  }
  return out;
}

EncodedState deserialize_state(const std::vector<std::uint8_t> &bytes) {
  Reader reader(bytes);
  reader.expect_magic();
  const std::uint32_t q = reader.u32();
  EncodedState state;
  state.reserve(q);
  for (std::uint32_t i = 0; i < q; ++i) {
    const std::uint32_t rank = reader.u32();
    if (rank > 64) throw FormatError("implausible state rank");
    std::vector<std::int64_t> dims(rank);
    for (auto &d : dims) d = reader.u32();
    const Shape shape(std::move(dims));
    std::vector<double> data(static_cast<std::size_t>(shape.numel()));
    for (auto &v : data) v = reader.f64();
    state.emplace_back(shape, std::move(data));
  }
  if (!reader.exhausted()) {
    throw FormatError("trailing bytes after the last state component");
  }
  return state;
}

SimulationResult simulate_round(const SharedStatePlan &plan,
                                const FederatedValue &x, Transport &transport,
                                const Environment &shared_env,
                                const ExtensionRegistry &reg,
                                int round_index) {
  const std::size_t m = x.locals().size();
  std::vector<std::vector<std::uint8_t>> wire(m);
  std::vector<std::string> encode_errors(m);

// Encode and serialize concurrently; errors are collected, not thrown, so
// the parallel region stays exception-free.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(m); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    try {
      wire[c] = serialize_state(encode_client(plan, x.local(c), shared_env, reg));
    } catch (const std::exception &err) {
      encode_errors[c] = err.what();
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    if (!encode_errors[c].empty()) {
      throw EvalError("client '" + x.federation().client(c) +
                      "' failed to encode: " + encode_errors[c]);
    }
  }

  // Delivery and collection: the server waits for every message before
  // merging, and folds in federation order, not arrival order.
  SimulationResult result{TensorValue(), {}};
  std::vector<EncodedState> collected(m);
  for (std::size_t c = 0; c < m; ++c) {
    const std::string &id = x.federation().client(c);
    std::vector<std::uint8_t> delivered;
    try {
      delivered = transport.deliver(id, std::move(wire[c]));
      collected[c] = deserialize_state(delivered);
    } catch (const std::exception &err) {
      throw EvalError("transport failed for client '" + id + "': " +
                      err.what());
    }
    LedgerRow row;
    row.round = round_index;
    row.client = id;
    row.bytes = delivered.size();
    row.components = static_cast<int>(collected[c].size());
    for (const auto &t : collected[c]) row.elements += t.numel();
    result.ledger.rows.push_back(std::move(row));
  }

  const EncodedState merged = merge_states(plan, collected);
  result.ledger.merged_state_bytes = serialize_state(merged).size();
  result.output = decode_state(plan, merged, shared_env, reg);
  return result;
}

} // namespace fedtensor
