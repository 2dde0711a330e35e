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

#ifndef FEDTENSOR_EXTENSIONS_HPP
#define FEDTENSOR_EXTENSIONS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fedtensor/tensor.hpp"
#include "fedtensor/types.hpp"

namespace fedtensor {

/// A conservative signature extension. Every registered primitive is either
/// shared-only (rejects federated arguments, acts on shared tensors) or
/// client-local (federated-in implies federated-out, and the per-client map
/// does not depend on the client identity). These are the only two kinds
/// that preserve the locality, exposure, and consistency guarantees of the
/// base language, so the registry refuses anything else.
struct ExtPrimitive {
  enum class Kind { ClientLocal, SharedOnly };

  std::string name;
  Kind kind = Kind::ClientLocal;
  int arity = 1;

  /// Typing rule: argument types to result type. Throws TypeCheckError on
  /// ill-typed applications.
  std::function<TensorType(const std::vector<TensorType> &)> typing;

  /// Per-client map for client-local primitives. Receives the local tensors
  /// of federated arguments and shared arguments as-is, in operand order,
  /// plus the client's position in the federation. Conforming
  /// implementations ignore the position; the audit checks that.
  std::function<TensorValue(const std::vector<TensorValue> &,
                            std::size_t client_index)>
      local_impl;

  /// Ordinary centralized interpretation, applied to virtual global tensors
  /// by the reference evaluator (and to shared tensors by both evaluators).
  std::function<TensorValue(const std::vector<TensorValue> &)> ordinary_impl;
};

/// Write-once-then-read-many registry of extension primitives. Registration
/// happens before evaluation begins; lookups after that are concurrent-safe.
class ExtensionRegistry {
public:
  ExtensionRegistry() = default;

  /// Registers a primitive. Throws ValueError on duplicate names and on
  /// structurally unsatisfiable kind constraints: a client-local typing rule
  /// that maps some federated input to a shared output, or a shared-only
  /// rule that accepts a federated input.
  void register_primitive(ExtPrimitive p);

  bool contains(const std::string &name) const;
  const ExtPrimitive &get(const std::string &name) const;
  std::vector<std::string> names() const;

private:
  std::map<std::string, ExtPrimitive> primitives_;
};

/// Registry preloaded with the built-in extension set:
///   proj_features     client-local  Fed_1((q)) -> Fed_1((q-1)), drop last col
///   proj_response     client-local  Fed_1((q)) -> Fed_1(()), keep last col
///   as_record_column  client-local  Fed_1(()) -> Fed_1((1))
///   per_record_scale  client-local  Fed_1(()) x Fed_1(d) -> Fed_1(d)
///   per_record_outer  client-local  Fed_1((p)) -> Fed_1((p,p))
///   solve             shared-only   Sh((p,p)) x Sh((p)|(p,k)) -> like rhs
///   shared_matmul     shared-only   Sh((a,b)) x Sh((b,c)) -> Sh((a,c))
const ExtensionRegistry &builtin_registry();

/// Mutable default registry used when no registry is passed explicitly.
/// Starts as a copy of the built-ins.
ExtensionRegistry &default_registry();

struct AuditFailure {
  std::string check; // locality | identity-independence | consistency | shared-only-guard
  std::string detail;
};

struct AuditReport {
  std::string primitive;
  int trials = 0;
  std::vector<AuditFailure> failures;

  bool passed() const { return failures.empty(); }
};

/// Randomized audit of a registered primitive: client-locality perturbation
/// and client-identity independence for client-local primitives,
/// virtual-global consistency against the supplied ordinary interpretation
/// (tolerance 1e-10), and the federated-argument guard for shared-only
/// primitives. Failures are listed, not thrown.
AuditReport audit_extension(const ExtensionRegistry &reg,
                            const std::string &name, int trials,
                            std::uint64_t seed);

} // namespace fedtensor

#endif // FEDTENSOR_EXTENSIONS_HPP
