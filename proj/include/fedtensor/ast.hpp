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

#ifndef FEDTENSOR_AST_HPP
#define FEDTENSOR_AST_HPP

#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fedtensor/kernels.hpp"
#include "fedtensor/tensor.hpp"

namespace fedtensor {

// The base signature: unary scalar maps, binary scalar maps, {0,1}-valued
// comparisons, axis-wise aggregations, axis permutations, and the three
// matrix products. Literal carries shared constants (optimizer
// hyperparameters, masks); Ext refers to a registered conservative
// extension.

enum class UnaryOp { Neg, Abs, Exp, Log, Sqrt, Square, Relu, Sigmoid };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class CompareOp { Lt, Le, Eq, Ge, Gt };
enum class AggSchema { Sum, Min, Max };

double apply_unary(UnaryOp op, double v);
double apply_binary(BinaryOp op, double a, double b);
double apply_compare(CompareOp op, double a, double b);

kernels::UnaryFn unary_fn(UnaryOp op);
kernels::BinaryFn binary_fn(BinaryOp op);
kernels::BinaryFn compare_fn(CompareOp op);

kernels::ReduceKind reduce_kind(AggSchema schema);

struct UnarySymbol {
  UnaryOp op;
};
struct BinarySymbol {
  BinaryOp op;
};
struct CompareSymbol {
  CompareOp op;
};
struct AggSymbol {
  AggSchema schema;
  int axis; // 1-based
};
struct PermSymbol {
  Permutation perm;
};
struct MatMulFedShSymbol {};
struct MatMulShFedSymbol {};
struct MatMulFedFedSymbol {};
struct LiteralSymbol {
  TensorValue value; // shared constant; shape must be all-positive
};
struct ExtSymbol {
  std::string name;
};

using PrimitiveSymbol =
    std::variant<UnarySymbol, BinarySymbol, CompareSymbol, AggSymbol,
                 PermSymbol, MatMulFedShSymbol, MatMulShFedSymbol,
                 MatMulFedFedSymbol, LiteralSymbol, ExtSymbol>;

/// Fixed arity of a symbol occurrence. Ext arities come from the registry
/// and are checked there; here Ext reports -1 (variable).
int fixed_arity(const PrimitiveSymbol &sym);

/// Display name: "add", "sum_1", "perm[2,1]", "lit", "ext:proj_features".
std::string symbol_name(const PrimitiveSymbol &sym);

const char *unary_name(UnaryOp op);
const char *binary_name(BinaryOp op);
const char *compare_name(CompareOp op);
const char *agg_name(AggSchema schema);

/// Immutable expression tree over the signature: a variable or a primitive
/// application. Copies share structure.
class Expr {
public:
  static Expr var(std::string name);
  static Expr apply(PrimitiveSymbol sym, std::vector<Expr> args);

  bool is_var() const;
  const std::string &var_name() const;

  const PrimitiveSymbol &symbol() const;
  const std::vector<Expr> &args() const;

  std::set<std::string> free_vars() const;

  /// Structural equality; literals compare by shape and bit pattern.
  bool equals(const Expr &other) const;

  std::string str() const;

private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Expression builders. Qualify as ops::add(...) where names would clash.
namespace ops {

Expr var(std::string name);
Expr lit(TensorValue value);
Expr lit(double scalar);

Expr neg(Expr e);
Expr abs(Expr e);
Expr exp(Expr e);
Expr log(Expr e);
Expr sqrt(Expr e);
Expr square(Expr e);
Expr relu(Expr e);
Expr sigmoid(Expr e);

Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr a, Expr b);

Expr lt(Expr a, Expr b);
Expr le(Expr a, Expr b);
Expr eq(Expr a, Expr b);
Expr ge(Expr a, Expr b);
Expr gt(Expr a, Expr b);

Expr agg(AggSchema schema, int axis, Expr e);
Expr sum(int axis, Expr e);
Expr min(int axis, Expr e);
Expr max(int axis, Expr e);

Expr perm(Permutation tau, Expr e);
/// Swap the two axes of a rank-2 expression.
Expr transpose2(Expr e);

Expr matmul_fed_sh(Expr x, Expr s);
Expr matmul_sh_fed(Expr s, Expr x);
Expr matmul_fed_fed(Expr x, Expr z);

Expr ext(std::string name, std::vector<Expr> args);

} // namespace ops

/// One entry of the shipped signature description.
struct SignatureEntry {
  std::string name;
  std::string family; // unary | binary | compare | agg | perm | matmul | literal | ext
  int arity;
};

struct SignatureDescription {
  std::vector<SignatureEntry> entries;

  bool contains(const std::string &name) const;
  /// Arity by name; accepts axis-suffixed aggregation spellings ("sum_1").
  int arity_of(const std::string &name) const;
};

/// The shipped instantiation of the base signature.
const SignatureDescription &builtin_signature();

} // namespace fedtensor

#endif // FEDTENSOR_AST_HPP
