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

#ifndef FEDTENSOR_TYPECHECK_HPP
#define FEDTENSOR_TYPECHECK_HPP

#include "fedtensor/ast.hpp"
#include "fedtensor/extensions.hpp"
#include "fedtensor/types.hpp"

namespace fedtensor {

/// Derives the unique type of `e` under `ctx`, or throws TypeCheckError with
/// the first failing rule and the path to the offending subexpression.
/// Typechecking is syntax-directed and total: exactly one rule applies per
/// node. Record counts are not part of types; the count side conditions of
/// federated-federated products and federated element-wise operations are
/// enforced at evaluation time.
TensorType typecheck(const Context &ctx, const Expr &e,
                     const ExtensionRegistry &reg = builtin_registry());

/// Static broadcast compatibility of a shared shape against a federated
/// type: left-pad `s` to the federated rank; the padded extent must be 1 at
/// the record marker and 1-or-equal elsewhere.
bool record_agnostic_compatible(const Shape &s, const FedType &t);

/// Remove a non-record axis from a federated type, relocating the record
/// marker. Throws TypeCheckError (record-axis-violation) when j is the
/// record axis.
FedType delete_axis(const FedType &t, int j);

/// Permute a federated type: permute the symbolic shape, erase the marker,
/// move the record axis to tau(r).
FedType permute_type(const FedType &t, const Permutation &tau);

struct LocalityViolation {
  ExprPath path;
  std::string message;
};

struct LocalityReport {
  bool client_local = true;
  std::vector<LocalityViolation> violations;
};

/// True iff no subexpression of `e` converts federated data into shared
/// state, i.e. no primitive application with a federated-typed argument has
/// shared type. Requires `e` to typecheck; type errors pass through.
LocalityReport is_client_local(const Context &ctx, const Expr &e,
                               const ExtensionRegistry &reg = builtin_registry());

/// True iff every free variable of `e` has shared type under `ctx`. Throws
/// TypeCheckError (unbound-variable) for free variables missing from `ctx`.
bool is_shared_only(const Context &ctx, const Expr &e);

/// One shared-from-federated conversion site in a typed expression.
struct ExposureSite {
  ExprPath path;
  std::string symbol; // display name of the converting primitive
  bool record_axis_aggregation = false;
  bool fed_fed_matmul = false;
};

/// All subexpressions of shared type that have at least one federated-typed
/// argument. For well-typed expressions each site is a record-axis
/// aggregation or a federated-federated matrix product; callers assert that.
std::vector<ExposureSite>
exposure_sites(const Context &ctx, const Expr &e,
               const ExtensionRegistry &reg = builtin_registry());

} // namespace fedtensor

#endif // FEDTENSOR_TYPECHECK_HPP
