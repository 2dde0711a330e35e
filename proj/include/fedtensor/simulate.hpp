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

#ifndef FEDTENSOR_SIMULATE_HPP
#define FEDTENSOR_SIMULATE_HPP

#include <cstdint>

#include "fedtensor/factorizer.hpp"

namespace fedtensor {

/// Binary layout of an encoded state:
///   magic "FTS1" (4 bytes)
///   u32 little-endian component count q
///   per component: u32 rank, rank x u32 extents, then the elements as
///   8-byte little-endian IEEE-754 doubles in row-major order.
/// Round-trips are bit-exact, including the +/-inf merge identities.
std::vector<std::uint8_t> serialize_state(const EncodedState &state);

/// Throws FormatError on a bad magic, truncated payload, trailing bytes, or
/// extents that do not fit the header fields.
EncodedState deserialize_state(const std::vector<std::uint8_t> &bytes);

/// Client-to-server message channel. deliver() receives the serialized
/// message of one client and returns the bytes as seen by the server.
class Transport {
public:
  virtual ~Transport() = default;
  virtual std::vector<std::uint8_t> deliver(const std::string &client_id,
                                            std::vector<std::uint8_t> message) = 0;
};

/// In-process pass-through channel.
class LoopbackTransport final : public Transport {
public:
  std::vector<std::uint8_t> deliver(const std::string &,
                                    std::vector<std::uint8_t> message) override {
    return message;
  }
};

struct LedgerRow {
  int round = 0;
  std::string client;
  std::uint64_t bytes = 0;   // serialized message length
  std::int64_t elements = 0; // state elements in the message
  int components = 0;
};

/// Per-round, per-client message sizes plus the server-side merged state
/// size. For a fixed plan the element count per message is a constant: it
/// never varies with the client or its record count.
struct MessageLedger {
  std::vector<LedgerRow> rows;
  std::uint64_t merged_state_bytes = 0;
};

struct SimulationResult {
  TensorValue output;
  MessageLedger ledger;
};

/// Executes one round as explicit messages: encode and serialize per client
/// (concurrently), deliver through the transport, collect (a barrier),
/// deserialize, merge in federation order, decode. The output is
/// bit-identical to run_plan: the arithmetic and fold order are the same.
/// A transport failure surfaces as EvalError naming the client.
SimulationResult simulate_round(const SharedStatePlan &plan,
                                const FederatedValue &x, Transport &transport,
                                const Environment &shared_env = {},
                                const ExtensionRegistry &reg = builtin_registry(),
                                int round_index = 0);

} // namespace fedtensor

#endif // FEDTENSOR_SIMULATE_HPP
