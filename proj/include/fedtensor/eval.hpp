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

#ifndef FEDTENSOR_EVAL_HPP
#define FEDTENSOR_EVAL_HPP

#include <optional>

#include "fedtensor/federation.hpp"
#include "fedtensor/typecheck.hpp"

namespace fedtensor {

/// A runtime value: a shared tensor or a federated tensor.
class Value {
public:
  Value(TensorValue shared) : shared_(std::move(shared)) {} // NOLINT
  Value(FederatedValue fed) : federated_(std::move(fed)) {} // NOLINT

  bool is_shared() const { return shared_.has_value(); }
  bool is_federated() const { return federated_.has_value(); }

  const TensorValue &shared() const;
  const FederatedValue &federated() const;

  TensorType type() const;

private:
  std::optional<TensorValue> shared_;
  std::optional<FederatedValue> federated_;
};

/// Named input assignment. All federated bindings must live on the same
/// federation.
class Environment {
public:
  Environment() = default;

  void bind(const std::string &name, Value v);
  bool contains(const std::string &name) const;
  const Value &lookup(const std::string &name) const;

  /// Context induced by the bindings.
  Context context() const;

  /// The common federation of the federated bindings, if any. Throws
  /// EvalError when two bindings disagree.
  std::optional<Federation> federation() const;

  const std::map<std::string, Value> &bindings() const { return bindings_; }

private:
  std::map<std::string, Value> bindings_;
};

/// Distributed semantics: element-wise maps per client with local broadcast
/// of shared operands, non-record aggregation per client, record-axis
/// aggregation as per-client reduction merged in federation order,
/// federated matrix products per client, and the federated-federated
/// product as the client-wise sum of local products. Deterministic.
Value eval_distributed(const Environment &env, const Expr &e,
                       const ExtensionRegistry &reg = builtin_registry());

struct CentralizedResult {
  TensorValue value;
  TensorType type; // the statically derived type; federated results are
                   // reported as their virtual global tensor
};

/// Reference semantics: replaces every federated binding by its virtual
/// global tensor and interprets each primitive as its ordinary centralized
/// tensor operation.
CentralizedResult
eval_centralized(const Environment &env, const Expr &e,
                 const ExtensionRegistry &reg = builtin_registry());

struct ConsistencyReport {
  bool distributed_federated = false;
  double max_abs_deviation = 0.0;
  /// max over elements of |a-b| / max(1, |a|, |b|).
  double max_rel_deviation = 0.0;
  bool nan_mismatch = false;
  bool pass = false;
};

/// Evaluates both semantics and compares: the virtual global of the
/// distributed result against the centralized value when the result is
/// federated, the values directly otherwise. NaN on exactly one side is a
/// failure; NaN on both sides at the same position matches.
ConsistencyReport
check_consistency(const Environment &env, const Expr &e, double tol,
                  const ExtensionRegistry &reg = builtin_registry());

} // namespace fedtensor

#endif // FEDTENSOR_EVAL_HPP
