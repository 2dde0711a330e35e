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

#ifndef FEDTENSOR_FACTORIZER_HPP
#define FEDTENSOR_FACTORIZER_HPP

#include <functional>
#include <variant>

#include "fedtensor/eval.hpp"

namespace fedtensor {

/// Record-axis aggregation component: a client-local federated expression
/// whose record axis is eliminated by the schema's aggregation.
struct AggComponent {
  Expr expr = Expr::var("x");
  AggSchema schema = AggSchema::Sum;
};

/// Federated-federated matrix-product component: client-local expressions of
/// types Fed_2((m)) and Fed_1((n)); the merge is ordinary addition.
struct MatComponent {
  Expr a = Expr::var("x");
  Expr b = Expr::var("x");
};

using ComponentForm = std::variant<AggComponent, MatComponent>;

struct ProgramComponent {
  std::string name; // decoder variable bound to this component's output
  ComponentForm form;
};

/// A one-round typed program: client-local encoders feeding record-axis
/// elimination, then a shared-only decoder over the component outputs.
/// `shared_params` are additional shared inputs visible to both the
/// component expressions and the decoder (the iterative state uses this).
struct OneRoundProgram {
  std::string input_name;
  FedType input_type{1, Shape()};
  std::vector<std::pair<std::string, Shape>> shared_params;
  std::vector<ProgramComponent> components;
  Expr decoder = Expr::var("y1");
};

struct Violation {
  int component = -1; // 0-based component index; -1 for program/decoder level
  std::string message;
};

std::vector<Violation>
validate_one_round(const OneRoundProgram &p,
                   const ExtensionRegistry &reg = builtin_registry());

enum class MergeTag { Sum, Min, Max, MatrixAdd };

const char *to_string(MergeTag tag);

/// Merge as a binary fold step on equal-shaped state tensors.
TensorValue merge_combine(MergeTag tag, const TensorValue &a,
                          const TensorValue &b);

double merge_identity(MergeTag tag);

struct PlanComponent {
  std::string name;
  ComponentForm form;
  Shape state_shape;
  MergeTag merge = MergeTag::Sum;
  /// Record axis of the aggregated expression's type (AggComponent only).
  int agg_record_axis = 1;

  TensorValue identity_state() const {
    return TensorValue::full(state_shape, merge_identity(merge));
  }
};

/// One client message / the merged server state: the q component tensors in
/// program order.
using EncodedState = std::vector<TensorValue>;

/// Extracted encode/merge/decode triple. The state dimension is a constant
/// of the plan: it depends on the component output shapes only, never on the
/// federation or the record counts.
struct SharedStatePlan {
  std::string input_name;
  FedType input_type{1, Shape()};
  std::vector<std::pair<std::string, Shape>> shared_params;
  std::vector<PlanComponent> components;
  Expr decoder = Expr::var("y1");

  std::int64_t state_elements() const;
};

/// Constructive plan extraction. Aggregation components encode by local
/// evaluation followed by local record-axis reduction and merge with the
/// schema's monoid; matrix components encode the local product and merge by
/// matrix addition; the decoder is the program's decoder unchanged.
/// Requires a program that passes validate_one_round.
SharedStatePlan extract_plan(const OneRoundProgram &p,
                             const ExtensionRegistry &reg = builtin_registry());

/// Reassembles the one-round typed program that realizes a plan: each
/// aggregation component becomes alpha_r(e), each matrix component becomes
/// the federated-federated product, the decoder is reused.
OneRoundProgram realize_program(const SharedStatePlan &plan);

/// Encoder for one client: local tensor in, the q state components out.
EncodedState encode_client(const SharedStatePlan &plan,
                           const TensorValue &local,
                           const Environment &shared_env = {},
                           const ExtensionRegistry &reg = builtin_registry());

std::vector<EncodedState>
encode_all(const SharedStatePlan &plan, const FederatedValue &x,
           const Environment &shared_env = {},
           const ExtensionRegistry &reg = builtin_registry());

/// Componentwise fold of the client states in the given order, starting
/// from the identity state.
EncodedState merge_states(const SharedStatePlan &plan,
                          const std::vector<EncodedState> &states);

TensorValue decode_state(const SharedStatePlan &plan,
                         const EncodedState &merged,
                         const Environment &shared_env = {},
                         const ExtensionRegistry &reg = builtin_registry());

/// sigma(X) = psi(merge over clients of phi(X^{(c)})), folding in federation
/// order.
TensorValue run_plan(const SharedStatePlan &plan, const FederatedValue &x,
                     const Environment &shared_env = {},
                     const ExtensionRegistry &reg = builtin_registry());

/// Evaluates the assembled expression h(g_1,...,g_q) under the distributed
/// semantics; the factorization identity says this equals run_plan.
TensorValue run_direct(const OneRoundProgram &p, const FederatedValue &x,
                       const Environment &shared_env = {},
                       const ExtensionRegistry &reg = builtin_registry());

/// Same program evaluated by the centralized reference semantics.
TensorValue run_centralized(const OneRoundProgram &p, const FederatedValue &x,
                            const Environment &shared_env = {},
                            const ExtensionRegistry &reg = builtin_registry());

/// One round of an iterative program: components and decoder over the
/// current shared state. The decoder sees the component names plus the
/// state variable.
struct Round {
  std::vector<ProgramComponent> components;
  Expr decoder = Expr::var("theta");
};

/// Iterative typed program. Rounds are structurally fixed; round-indexed
/// literals (bias corrections, schedules) may vary, so rounds are produced
/// by a factory.
struct IterativeProgram {
  std::string input_name;
  FedType input_type{1, Shape()};
  std::string state_name = "theta";
  TensorValue initial_state;
  int rounds = 1;
  std::function<Round(int)> round_at;
};

std::vector<Violation>
validate_iterative(const IterativeProgram &p,
                   const ExtensionRegistry &reg = builtin_registry());

struct RoundTrace {
  TensorValue state_before;
  EncodedState merged_state;
};

struct IterativeRunResult {
  TensorValue final_state;
  std::vector<RoundTrace> trace;
};

/// Optional replacement for the default per-round plan execution; privacy
/// mechanisms hook in here.
using RoundRunner = std::function<TensorValue(
    const SharedStatePlan &, const FederatedValue &, const Environment &)>;

/// Executes theta_{t+1} = h_t(g_{t,1}(X,theta_t),...,theta_t) for all
/// rounds via per-round extract-and-run. Validation runs once on round 0;
/// later rounds reuse the structural checks and only re-derive shapes.
IterativeRunResult
run_iterative(const IterativeProgram &p, const FederatedValue &x,
              const ExtensionRegistry &reg = builtin_registry(),
              const RoundRunner &round_runner = {});

} // namespace fedtensor

#endif // FEDTENSOR_FACTORIZER_HPP
