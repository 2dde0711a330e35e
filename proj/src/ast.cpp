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

#include "fedtensor/ast.hpp"

#include <cmath>
#include <sstream>

#include "fedtensor/errors.hpp"

namespace fedtensor {

double apply_unary(UnaryOp op, double v) {
  switch (op) {
  case UnaryOp::Neg: return -v;
  case UnaryOp::Abs: return std::fabs(v);
  case UnaryOp::Exp: return std::exp(v);
  case UnaryOp::Log: return std::log(v);
  case UnaryOp::Sqrt: return std::sqrt(v);
  case UnaryOp::Square: return v * v;
  case UnaryOp::Relu: return v > 0.0 ? v : 0.0;
  case UnaryOp::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

double apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
  case BinaryOp::Add: return a + b;
  case BinaryOp::Sub: return a - b;
  case BinaryOp::Mul: return a * b;
  case BinaryOp::Div: return a / b;
  case BinaryOp::Pow: return std::pow(a, b);
  }
  return 0.0;
}

double apply_compare(CompareOp op, double a, double b) {
  switch (op) {
  case CompareOp::Lt: return a < b ? 1.0 : 0.0;
  case CompareOp::Le: return a <= b ? 1.0 : 0.0;
  case CompareOp::Eq: return a == b ? 1.0 : 0.0;
  case CompareOp::Ge: return a >= b ? 1.0 : 0.0;
  case CompareOp::Gt: return a > b ? 1.0 : 0.0;
  }
  return 0.0;
}

namespace {

template <UnaryOp Op> double unary_thunk(double v) { return apply_unary(Op, v); }
template <BinaryOp Op> double binary_thunk(double a, double b) {
  return apply_binary(Op, a, b);
}
template <CompareOp Op> double compare_thunk(double a, double b) {
  return apply_compare(Op, a, b);
}

} // namespace

kernels::UnaryFn unary_fn(UnaryOp op) {
  switch (op) {
  case UnaryOp::Neg: return &unary_thunk<UnaryOp::Neg>;
  case UnaryOp::Abs: return &unary_thunk<UnaryOp::Abs>;
  case UnaryOp::Exp: return &unary_thunk<UnaryOp::Exp>;
  case UnaryOp::Log: return &unary_thunk<UnaryOp::Log>;
  case UnaryOp::Sqrt: return &unary_thunk<UnaryOp::Sqrt>;
  case UnaryOp::Square: return &unary_thunk<UnaryOp::Square>;
  case UnaryOp::Relu: return &unary_thunk<UnaryOp::Relu>;
  case UnaryOp::Sigmoid: return &unary_thunk<UnaryOp::Sigmoid>;
  }
  return &unary_thunk<UnaryOp::Neg>;
}

kernels::BinaryFn binary_fn(BinaryOp op) {
  switch (op) {
  case BinaryOp::Add: return &binary_thunk<BinaryOp::Add>;
  case BinaryOp::Sub: return &binary_thunk<BinaryOp::Sub>;
  case BinaryOp::Mul: return &binary_thunk<BinaryOp::Mul>;
  case BinaryOp::Div: return &binary_thunk<BinaryOp::Div>;
  case BinaryOp::Pow: return &binary_thunk<BinaryOp::Pow>;
  }
  return &binary_thunk<BinaryOp::Add>;
}

kernels::BinaryFn compare_fn(CompareOp op) {
  switch (op) {
  case CompareOp::Lt: return &compare_thunk<CompareOp::Lt>;
  case CompareOp::Le: return &compare_thunk<CompareOp::Le>;
  case CompareOp::Eq: return &compare_thunk<CompareOp::Eq>;
  case CompareOp::Ge: return &compare_thunk<CompareOp::Ge>;
  case CompareOp::Gt: return &compare_thunk<CompareOp::Gt>;
  }
  return &compare_thunk<CompareOp::Eq>;
}

kernels::ReduceKind reduce_kind(AggSchema schema) {
  switch (schema) {
  case AggSchema::Sum: return kernels::ReduceKind::Sum;
  case AggSchema::Min: return kernels::ReduceKind::Min;
  case AggSchema::Max: return kernels::ReduceKind::Max;
  }
  return kernels::ReduceKind::Sum;
}

const char *unary_name(UnaryOp op) {
  switch (op) {
  case UnaryOp::Neg: return "neg";
  case UnaryOp::Abs: return "abs";
  case UnaryOp::Exp: return "exp";
  case UnaryOp::Log: return "log";
  case UnaryOp::Sqrt: return "sqrt";
  case UnaryOp::Square: return "square";
  case UnaryOp::Relu: return "relu";
  case UnaryOp::Sigmoid: return "sigmoid";
  }
  return "?";
}

const char *binary_name(BinaryOp op) {
  switch (op) {
  case BinaryOp::Add: return "add";
  case BinaryOp::Sub: return "sub";
  case BinaryOp::Mul: return "mul";
  case BinaryOp::Div: return "div";
  case BinaryOp::Pow: return "pow";
  }
  return "?";
}

const char *compare_name(CompareOp op) {
  switch (op) {
  case CompareOp::Lt: return "lt";
  case CompareOp::Le: return "le";
  case CompareOp::Eq: return "eq";
  case CompareOp::Ge: return "ge";
  case CompareOp::Gt: return "gt";
  }
  return "?";
}

const char *agg_name(AggSchema schema) {
  switch (schema) {
  case AggSchema::Sum: return "sum";
  case AggSchema::Min: return "min";
  case AggSchema::Max: return "max";
  }
  return "?";
}

int fixed_arity(const PrimitiveSymbol &sym) {
  struct Visitor {
    int operator()(const UnarySymbol &) const { return 1; }
    int operator()(const BinarySymbol &) const { return 2; }
    int operator()(const CompareSymbol &) const { return 2; }
    int operator()(const AggSymbol &) const { return 1; }
    int operator()(const PermSymbol &) const { return 1; }
    int operator()(const MatMulFedShSymbol &) const { return 2; }
    int operator()(const MatMulShFedSymbol &) const { return 2; }
    int operator()(const MatMulFedFedSymbol &) const { return 2; }
    int operator()(const LiteralSymbol &) const { return 0; }
    int operator()(const ExtSymbol &) const { return -1; }
  };
  return std::visit(Visitor{}, sym);
}

std::string symbol_name(const PrimitiveSymbol &sym) {
  struct Visitor {
    std::string operator()(const UnarySymbol &s) const {
      return unary_name(s.op);
    }
    std::string operator()(const BinarySymbol &s) const {
      return binary_name(s.op);
    }
    std::string operator()(const CompareSymbol &s) const {
      return compare_name(s.op);
    }
    std::string operator()(const AggSymbol &s) const {
      return std::string(agg_name(s.schema)) + "_" + std::to_string(s.axis);
    }
    std::string operator()(const PermSymbol &s) const {
      return "perm" + s.perm.str();
    }
    std::string operator()(const MatMulFedShSymbol &) const {
      return "matmul_fed_sh";
    }
    std::string operator()(const MatMulShFedSymbol &) const {
      return "matmul_sh_fed";
    }
    std::string operator()(const MatMulFedFedSymbol &) const {
      return "matmul_fed_fed";
    }
    std::string operator()(const LiteralSymbol &) const { return "lit"; }
    std::string operator()(const ExtSymbol &s) const { return s.name; }
  };
  return std::visit(Visitor{}, sym);
}

struct Expr::Node {
  // Either a variable name or an application.
  bool is_var = false;
  std::string name;
  PrimitiveSymbol symbol{LiteralSymbol{TensorValue()}};
  std::vector<Expr> args;
};

Expr Expr::var(std::string name) {
  auto node = std::make_shared<Node>();
  node->is_var = true;
  node->name = std::move(name);
  return Expr(std::move(node));
}

Expr Expr::apply(PrimitiveSymbol sym, std::vector<Expr> args) {
  const int want = fixed_arity(sym);
  if (want >= 0 && static_cast<int>(args.size()) != want) {
    throw TypeCheckError(TypeErrorKind::Arity, {},
                         symbol_name(sym) + " expects " +
                             std::to_string(want) + " arguments, got " +
                             std::to_string(args.size()));
  }
  if (const auto *lit = std::get_if<LiteralSymbol>(&sym)) {
    if (!lit->value.shape().all_positive()) {
      throw ValueError("literal shapes must have positive extents");
    }
  }
  auto node = std::make_shared<Node>();
  node->symbol = std::move(sym);
  node->args = std::move(args);
  return Expr(std::move(node));
}

bool Expr::is_var() const { return node_->is_var; }

const std::string &Expr::var_name() const {
  if (!node_->is_var) throw Error("not a variable expression");
  return node_->name;
}

const PrimitiveSymbol &Expr::symbol() const {
  if (node_->is_var) throw Error("variable has no primitive symbol");
  return node_->symbol;
}

const std::vector<Expr> &Expr::args() const {
  static const std::vector<Expr> kEmpty;
  return node_->is_var ? kEmpty : node_->args;
}

namespace {

void collect_free_vars(const Expr &e, std::set<std::string> &out) {
  if (e.is_var()) {
    out.insert(e.var_name());
    return;
  }
  for (const Expr &a : e.args()) collect_free_vars(a, out);
}

} // namespace

std::set<std::string> Expr::free_vars() const {
  std::set<std::string> out;
  collect_free_vars(*this, out);
  return out;
}

namespace {

bool symbols_equal(const PrimitiveSymbol &a, const PrimitiveSymbol &b) {
  if (a.index() != b.index()) return false;
  if (const auto *ua = std::get_if<UnarySymbol>(&a)) {
    return ua->op == std::get<UnarySymbol>(b).op;
  }
  if (const auto *ba = std::get_if<BinarySymbol>(&a)) {
    return ba->op == std::get<BinarySymbol>(b).op;
  }
  if (const auto *ca = std::get_if<CompareSymbol>(&a)) {
    return ca->op == std::get<CompareSymbol>(b).op;
  }
  if (const auto *aa = std::get_if<AggSymbol>(&a)) {
    const auto &ab = std::get<AggSymbol>(b);
    return aa->schema == ab.schema && aa->axis == ab.axis;
  }
  if (const auto *pa = std::get_if<PermSymbol>(&a)) {
    return pa->perm == std::get<PermSymbol>(b).perm;
  }
  if (const auto *la = std::get_if<LiteralSymbol>(&a)) {
    return la->value.same_bits(std::get<LiteralSymbol>(b).value);
  }
  if (const auto *ea = std::get_if<ExtSymbol>(&a)) {
    return ea->name == std::get<ExtSymbol>(b).name;
  }
  return true; // the three matmul tags carry no data
}

} // namespace

bool Expr::equals(const Expr &other) const {
  if (is_var() != other.is_var()) return false;
  if (is_var()) return var_name() == other.var_name();
  if (!symbols_equal(symbol(), other.symbol())) return false;
  if (args().size() != other.args().size()) return false;
  for (std::size_t i = 0; i < args().size(); ++i) {
    if (!args()[i].equals(other.args()[i])) return false;
  }
  return true;
}

std::string Expr::str() const {
  if (is_var()) return var_name();
  std::ostringstream os;
  os << symbol_name(symbol());
  if (const auto *lit = std::get_if<LiteralSymbol>(&symbol())) {
    os << lit->value.str();
    return os.str();
  }
  os << '(';
  for (std::size_t i = 0; i < args().size(); ++i) {
    if (i > 0) os << ',';
    os << args()[i].str();
  }
  os << ')';
  return os.str();
}

namespace ops {

Expr var(std::string name) { return Expr::var(std::move(name)); }
Expr lit(TensorValue value) {
  return Expr::apply(LiteralSymbol{std::move(value)}, {});
}
Expr lit(double scalar) { return lit(TensorValue::scalar(scalar)); }

#define FEDTENSOR_UNARY_BUILDER(fn, op)                                        \
  Expr fn(Expr e) { return Expr::apply(UnarySymbol{UnaryOp::op}, {std::move(e)}); }
FEDTENSOR_UNARY_BUILDER(neg, Neg)
FEDTENSOR_UNARY_BUILDER(abs, Abs)
FEDTENSOR_UNARY_BUILDER(exp, Exp)
FEDTENSOR_UNARY_BUILDER(log, Log)
FEDTENSOR_UNARY_BUILDER(sqrt, Sqrt)
FEDTENSOR_UNARY_BUILDER(square, Square)
FEDTENSOR_UNARY_BUILDER(relu, Relu)
FEDTENSOR_UNARY_BUILDER(sigmoid, Sigmoid)
#undef FEDTENSOR_UNARY_BUILDER

#define FEDTENSOR_BINARY_BUILDER(fn, op)                                       \
  Expr fn(Expr a, Expr b) {                                                    \
    return Expr::apply(BinarySymbol{BinaryOp::op},                             \
                       {std::move(a), std::move(b)});                          \
  }
FEDTENSOR_BINARY_BUILDER(add, Add)
FEDTENSOR_BINARY_BUILDER(sub, Sub)
FEDTENSOR_BINARY_BUILDER(mul, Mul)
FEDTENSOR_BINARY_BUILDER(div, Div)
FEDTENSOR_BINARY_BUILDER(pow, Pow)
#undef FEDTENSOR_BINARY_BUILDER

#define FEDTENSOR_COMPARE_BUILDER(fn, op)                                      \
  Expr fn(Expr a, Expr b) {                                                    \
    return Expr::apply(CompareSymbol{CompareOp::op},                           \
                       {std::move(a), std::move(b)});                          \
  }
FEDTENSOR_COMPARE_BUILDER(lt, Lt)
FEDTENSOR_COMPARE_BUILDER(le, Le)
FEDTENSOR_COMPARE_BUILDER(eq, Eq)
FEDTENSOR_COMPARE_BUILDER(ge, Ge)
FEDTENSOR_COMPARE_BUILDER(gt, Gt)
#undef FEDTENSOR_COMPARE_BUILDER

Expr agg(AggSchema schema, int axis, Expr e) {
  if (axis < 1) throw ValueError("aggregation axis must be >= 1");
  return Expr::apply(AggSymbol{schema, axis}, {std::move(e)});
}
Expr sum(int axis, Expr e) { return agg(AggSchema::Sum, axis, std::move(e)); }
Expr min(int axis, Expr e) { return agg(AggSchema::Min, axis, std::move(e)); }
Expr max(int axis, Expr e) { return agg(AggSchema::Max, axis, std::move(e)); }

Expr perm(Permutation tau, Expr e) {
  return Expr::apply(PermSymbol{std::move(tau)}, {std::move(e)});
}

Expr transpose2(Expr e) { return perm(Permutation({2, 1}), std::move(e)); }

Expr matmul_fed_sh(Expr x, Expr s) {
  return Expr::apply(MatMulFedShSymbol{}, {std::move(x), std::move(s)});
}
Expr matmul_sh_fed(Expr s, Expr x) {
  return Expr::apply(MatMulShFedSymbol{}, {std::move(s), std::move(x)});
}
Expr matmul_fed_fed(Expr x, Expr z) {
  return Expr::apply(MatMulFedFedSymbol{}, {std::move(x), std::move(z)});
}

Expr ext(std::string name, std::vector<Expr> args) {
  return Expr::apply(ExtSymbol{std::move(name)}, std::move(args));
}

} // namespace ops

bool SignatureDescription::contains(const std::string &name) const {
  for (const auto &e : entries) {
    if (e.name == name) return true;
  }
  return false;
}

int SignatureDescription::arity_of(const std::string &name) const {
  std::string base = name;
  // Accept axis-suffixed aggregation spellings like "sum_1".
  const auto underscore = name.rfind('_');
  if (underscore != std::string::npos) {
    const std::string suffix = name.substr(underscore + 1);
    if (!suffix.empty() &&
        suffix.find_first_not_of("0123456789") == std::string::npos) {
      base = name.substr(0, underscore);
    }
  }
  for (const auto &e : entries) {
    if (e.name == base) return e.arity;
  }
  throw Error("unknown primitive symbol '" + name + "'");
}

const SignatureDescription &builtin_signature() {
  static const SignatureDescription sig = [] {
    SignatureDescription s;
    for (UnaryOp op : {UnaryOp::Neg, UnaryOp::Abs, UnaryOp::Exp, UnaryOp::Log,
                       UnaryOp::Sqrt, UnaryOp::Square, UnaryOp::Relu,
                       UnaryOp::Sigmoid}) {
      s.entries.push_back({unary_name(op), "unary", 1});
    }
    for (BinaryOp op : {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul,
                        BinaryOp::Div, BinaryOp::Pow}) {
      s.entries.push_back({binary_name(op), "binary", 2});
    }
    for (CompareOp op : {CompareOp::Lt, CompareOp::Le, CompareOp::Eq,
                         CompareOp::Ge, CompareOp::Gt}) {
      s.entries.push_back({compare_name(op), "compare", 2});
    }
    for (AggSchema a : {AggSchema::Sum, AggSchema::Min, AggSchema::Max}) {
      s.entries.push_back({agg_name(a), "agg", 1});
    }
    s.entries.push_back({"perm", "perm", 1});
    s.entries.push_back({"matmul_fed_sh", "matmul", 2});
    s.entries.push_back({"matmul_sh_fed", "matmul", 2});
    s.entries.push_back({"matmul_fed_fed", "matmul", 2});
    s.entries.push_back({"lit", "literal", 0});
    return s;
  }();
  return sig;
}

} // namespace fedtensor
