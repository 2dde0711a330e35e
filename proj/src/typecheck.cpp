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

#include "fedtensor/typecheck.hpp"

#include <sstream>

namespace fedtensor {

TensorType::TensorType(ShType t) : t_(std::move(t)) {
  if (!std::get<ShType>(t_).shape.all_positive()) {
    throw ValueError("shared type shapes must have positive extents");
  }
}

TensorType::TensorType(FedType t) : t_(std::move(t)) {
  const FedType &f = std::get<FedType>(t_);
  if (f.record_axis < 1 || f.record_axis > f.rank()) {
    throw ValueError("federated record axis " + std::to_string(f.record_axis) +
                     " out of range for rank " + std::to_string(f.rank()));
  }
  if (!f.nonrecord.all_positive()) {
    throw ValueError("federated non-record shapes must have positive extents");
  }
}

std::string TensorType::str() const {
  if (is_shared()) return "Sh" + as_shared().shape.str();
  const FedType &f = as_federated();
  return "Fed_" + std::to_string(f.record_axis) + f.nonrecord.str();
}

int SymbolicShape::star_axis() const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].has_value()) return static_cast<int>(i) + 1;
  }
  throw Error("symbolic shape has no record marker");
}

Shape SymbolicShape::erase_star() const {
  std::vector<std::int64_t> dims;
  dims.reserve(entries.size());
  for (const auto &e : entries) {
    if (e.has_value()) dims.push_back(*e);
  }
  return Shape(std::move(dims));
}

std::string SymbolicShape::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0) os << ',';
    if (entries[i].has_value()) {
      os << *entries[i];
    } else {
      os << '*';
    }
  }
  os << ')';
  return os.str();
}

SymbolicShape symbolic_shape(const FedType &t) {
  SymbolicShape sym;
  sym.entries.reserve(static_cast<std::size_t>(t.rank()));
  for (int j = 1; j <= t.rank(); ++j) {
    if (j == t.record_axis) {
      sym.entries.emplace_back(std::nullopt);
    } else {
      const int d_index = j < t.record_axis ? j : j - 1;
      sym.entries.emplace_back(t.nonrecord.extent(d_index));
    }
  }
  return sym;
}

FedType fed_from_symbolic(const SymbolicShape &sym) {
  return FedType{sym.star_axis(), sym.erase_star()};
}

namespace {

enum class AgnosticVerdict { Ok, TooLong, StarViolation, ExtentViolation };

struct AgnosticResult {
  AgnosticVerdict verdict;
  int axis = 0;
};

AgnosticResult record_agnostic_check(const Shape &s, const FedType &t) {
  const SymbolicShape sym = symbolic_shape(t);
  const int k = sym.rank();
  const int p = s.rank();
  if (p > k) return {AgnosticVerdict::TooLong, 0};
  for (int i = 1; i <= k; ++i) {
    const std::int64_t padded =
        i <= k - p ? 1 : s.extent(i - (k - p));
    const auto &entry = sym.entries[static_cast<std::size_t>(i - 1)];
    if (!entry.has_value()) {
      if (padded != 1) return {AgnosticVerdict::StarViolation, i};
    } else if (padded != 1 && padded != *entry) {
      return {AgnosticVerdict::ExtentViolation, i};
    }
  }
  return {AgnosticVerdict::Ok, 0};
}

} // namespace

bool record_agnostic_compatible(const Shape &s, const FedType &t) {
  return record_agnostic_check(s, t).verdict == AgnosticVerdict::Ok;
}

FedType delete_axis(const FedType &t, int j) {
  if (j == t.record_axis) {
    throw TypeCheckError(TypeErrorKind::RecordAxisViolation, {},
                         "cannot delete the record axis of " +
                             TensorType(t).str());
  }
  if (j < 1 || j > t.rank()) {
    throw TypeCheckError(TypeErrorKind::ShapeMismatch, {},
                         "axis " + std::to_string(j) + " out of range for " +
                             TensorType(t).str());
  }
  SymbolicShape sym = symbolic_shape(t);
  sym.entries.erase(sym.entries.begin() + (j - 1));
  return fed_from_symbolic(sym);
}

FedType permute_type(const FedType &t, const Permutation &tau) {
  if (tau.size() != t.rank()) {
    throw TypeCheckError(TypeErrorKind::ShapeMismatch, {},
                         "permutation size " + std::to_string(tau.size()) +
                             " does not match rank of " + TensorType(t).str());
  }
  const SymbolicShape sym = symbolic_shape(t);
  const Permutation inv = tau.inverse();
  SymbolicShape out;
  out.entries.resize(sym.entries.size());
  for (int u = 1; u <= tau.size(); ++u) {
    out.entries[static_cast<std::size_t>(u - 1)] =
        sym.entries[static_cast<std::size_t>(inv.image(u) - 1)];
  }
  return fed_from_symbolic(out);
}

namespace {

class Checker {
public:
  Checker(const Context &ctx, const ExtensionRegistry &reg)
      : ctx_(ctx), reg_(reg) {}

  TensorType check(const Expr &e, ExprPath &path) {
    if (e.is_var()) {
      const auto it = ctx_.find(e.var_name());
      if (it == ctx_.end()) {
        throw TypeCheckError(TypeErrorKind::UnboundVariable, path,
                             "variable '" + e.var_name() + "' is not bound");
      }
      return it->second;
    }

    std::vector<TensorType> arg_types;
    arg_types.reserve(e.args().size());
    for (std::size_t i = 0; i < e.args().size(); ++i) {
      path.push_back(static_cast<int>(i) + 1);
      arg_types.push_back(check(e.args()[i], path));
      path.pop_back();
    }
    return apply(e.symbol(), arg_types, path);
  }

  TensorType apply(const PrimitiveSymbol &sym,
                   const std::vector<TensorType> &args, const ExprPath &path) {
    if (std::holds_alternative<UnarySymbol>(sym)) {
      return args[0];
    }
    if (std::holds_alternative<BinarySymbol>(sym) ||
        std::holds_alternative<CompareSymbol>(sym)) {
      return binary_rule(symbol_name(sym), args[0], args[1], path);
    }
    if (const auto *agg = std::get_if<AggSymbol>(&sym)) {
      return agg_rule(*agg, args[0], path);
    }
    if (const auto *perm = std::get_if<PermSymbol>(&sym)) {
      return perm_rule(perm->perm, args[0], path);
    }
    if (std::holds_alternative<MatMulFedShSymbol>(sym)) {
      return matmul_fed_sh_rule(args[0], args[1], path);
    }
    if (std::holds_alternative<MatMulShFedSymbol>(sym)) {
      return matmul_sh_fed_rule(args[0], args[1], path);
    }
    if (std::holds_alternative<MatMulFedFedSymbol>(sym)) {
      return matmul_fed_fed_rule(args[0], args[1], path);
    }
    if (const auto *lit = std::get_if<LiteralSymbol>(&sym)) {
      return TensorType::shared(lit->value.shape());
    }
    const auto &ext = std::get<ExtSymbol>(sym);
    return ext_rule(ext.name, args, path);
  }

private:
  TensorType binary_rule(const std::string &name, const TensorType &a,
                         const TensorType &b, const ExprPath &path) {
    if (a.is_shared() && b.is_shared()) {
      if (!broadcast_compatible(a.as_shared().shape, b.as_shared().shape)) {
        throw TypeCheckError(TypeErrorKind::BroadcastIncompatible, path,
                             name + " on " + a.str() + " and " + b.str());
      }
      return TensorType::shared(
          broadcast_shape(a.as_shared().shape, b.as_shared().shape));
    }
    if (a.is_federated() && b.is_federated()) {
      if (a != b) {
        const auto kind =
            a.as_federated().record_axis != b.as_federated().record_axis
                ? TypeErrorKind::RecordAxisViolation
                : TypeErrorKind::ShapeMismatch;
        throw TypeCheckError(kind, path,
                             name + " needs identical federated types, got " +
                                 a.str() + " and " + b.str());
      }
      return a;
    }
    const TensorType &fed = a.is_federated() ? a : b;
    const TensorType &sh = a.is_federated() ? b : a;
    const AgnosticResult r =
        record_agnostic_check(sh.as_shared().shape, fed.as_federated());
    switch (r.verdict) {
    case AgnosticVerdict::Ok:
      return fed;
    case AgnosticVerdict::StarViolation:
      throw TypeCheckError(
          TypeErrorKind::RecordAxisViolation, path,
          name + ": shared shape " + sh.as_shared().shape.str() +
              " has extent > 1 against the record axis of " + fed.str());
    case AgnosticVerdict::TooLong:
    case AgnosticVerdict::ExtentViolation:
      throw TypeCheckError(TypeErrorKind::BroadcastIncompatible, path,
                           name + ": shared shape " +
                               sh.as_shared().shape.str() +
                               " is not record-agnostically compatible with " +
                               fed.str());
    }
    throw Error("unreachable");
  }

  TensorType agg_rule(const AggSymbol &agg, const TensorType &t,
                      const ExprPath &path) {
    const std::string name = symbol_name(PrimitiveSymbol{agg});
    if (t.is_shared()) {
      const Shape &s = t.as_shared().shape;
      if (s.rank() < 1 || agg.axis > s.rank()) {
        throw TypeCheckError(TypeErrorKind::ShapeMismatch, path,
                             name + " axis out of range for " + t.str());
      }
      return TensorType::shared(s.drop_axis(agg.axis));
    }
    const FedType &f = t.as_federated();
    if (agg.axis > f.rank()) {
      throw TypeCheckError(TypeErrorKind::ShapeMismatch, path,
                           name + " axis out of range for " + t.str());
    }
    if (agg.axis == f.record_axis) {
      return TensorType::shared(f.nonrecord);
    }
    return TensorType(delete_axis(f, agg.axis));
  }

  TensorType perm_rule(const Permutation &tau, const TensorType &t,
                       const ExprPath &path) {
    if (tau.size() != t.rank()) {
      throw TypeCheckError(TypeErrorKind::ShapeMismatch, path,
                           "permutation " + tau.str() +
                               " does not match rank of " + t.str());
    }
    if (t.is_shared()) {
      return TensorType::shared(tau.apply_to_shape(t.as_shared().shape));
    }
    return TensorType(permute_type(t.as_federated(), tau));
  }

  TensorType matmul_fed_sh_rule(const TensorType &a, const TensorType &b,
                                const ExprPath &path) {
    // Fed_1((p)) x Sh((p,q)) -> Fed_1((q))
    if (!a.is_federated() || a.as_federated().record_axis != 1 ||
        a.as_federated().nonrecord.rank() != 1) {
      throw TypeCheckError(TypeErrorKind::ShapeMismatch, path,
                           "matmul_fed_sh left operand must be Fed_1((p)), "
                           "got " +
                               a.str());
    }
    if (!b.is_shared() || b.as_shared().shape.rank() != 2) {
      throw TypeCheckError(TypeErrorKind::ShapeMismatch, path,
                           "matmul_fed_sh right operand must be Sh((p,q)), "
                           "got " +
                               b.str());
    }
    const std::int64_t p = a.as_federated().nonrecord.extent(1);
    if (b.as_shared().shape.extent(1) != p) {
      throw TypeCheckError(TypeErrorKind::ShapeMismatch, path,
                           "matmul_fed_sh contraction mismatch: " + a.str() +
                               " times " + b.str());
    }
    return TensorType::federated(1, Shape({b.as_shared().shape.extent(2)}));
  }

  TensorType matmul_sh_fed_rule(const TensorType &a, const TensorType &b,
                                const ExprPath &path) {
    // Sh((q,p)) x Fed_2((p)) -> Fed_2((q))
    if (!a.is_shared() || a.as_shared().shape.rank() != 2) {
      throw TypeCheckError(TypeErrorKind::ShapeMismatch, path,
                           "matmul_sh_fed left operand must be Sh((q,p)), "
                           "got " +
                               a.str());
    }
    if (!b.is_federated() || b.as_federated().record_axis != 2 ||
        b.as_federated().nonrecord.rank() != 1) {
      throw TypeCheckError(TypeErrorKind::ShapeMismatch, path,
                           "matmul_sh_fed right operand must be Fed_2((p)), "
                           "got " +
                               b.str());
    }
    const std::int64_t p = b.as_federated().nonrecord.extent(1);
    if (a.as_shared().shape.extent(2) != p) {
      throw TypeCheckError(TypeErrorKind::ShapeMismatch, path,
                           "matmul_sh_fed contraction mismatch: " + a.str() +
                               " times " + b.str());
    }
    return TensorType::federated(2, Shape({a.as_shared().shape.extent(1)}));
  }

  TensorType matmul_fed_fed_rule(const TensorType &a, const TensorType &b,
                                 const ExprPath &path) {
    // Fed_2((a)) x Fed_1((b)) -> Sh((a,b)); record counts checked at runtime
    const bool left_ok = a.is_federated() &&
                         a.as_federated().record_axis == 2 &&
                         a.as_federated().nonrecord.rank() == 1;
    const bool right_ok = b.is_federated() &&
                          b.as_federated().record_axis == 1 &&
                          b.as_federated().nonrecord.rank() == 1;
    if (!left_ok || !right_ok) {
      throw TypeCheckError(TypeErrorKind::FedFedForm, path,
                           "matmul_fed_fed operands must be Fed_2((a)) and "
                           "Fed_1((b)), got " +
                               a.str() + " and " + b.str());
    }
    return TensorType::shared(Shape({a.as_federated().nonrecord.extent(1),
                                     b.as_federated().nonrecord.extent(1)}));
  }

  TensorType ext_rule(const std::string &name,
                      const std::vector<TensorType> &args,
                      const ExprPath &path) {
    if (!reg_.contains(name)) {
      throw TypeCheckError(TypeErrorKind::ExtensionMisuse, path,
                           "unknown extension primitive '" + name + "'");
    }
    const ExtPrimitive &p = reg_.get(name);
    if (static_cast<int>(args.size()) != p.arity) {
      throw TypeCheckError(TypeErrorKind::Arity, path,
                           "'" + name + "' expects " +
                               std::to_string(p.arity) + " arguments, got " +
                               std::to_string(args.size()));
    }
    bool any_federated = false;
    for (const auto &t : args) any_federated |= t.is_federated();
    if (p.kind == ExtPrimitive::Kind::SharedOnly && any_federated) {
      throw TypeCheckError(TypeErrorKind::ExtensionMisuse, path,
                           "shared-only primitive '" + name +
                               "' applied to a federated argument");
    }
    TensorType result = [&] {
      try {
        return p.typing(args);
      } catch (const TypeCheckError &err) {
        throw TypeCheckError(err.kind(), path,
                             "'" + name + "': " + err.what());
      }
    }();
    if (p.kind == ExtPrimitive::Kind::ClientLocal && any_federated &&
        result.is_shared()) {
      // Exposure preservation: a client-local primitive may not convert
      // federated inputs into shared output.
      throw TypeCheckError(TypeErrorKind::ExtensionMisuse, path,
                           "client-local primitive '" + name +
                               "' would expose shared output from federated "
                               "input");
    }
    return result;
  }

  const Context &ctx_;
  const ExtensionRegistry &reg_;
};

} // namespace

TensorType typecheck(const Context &ctx, const Expr &e,
                     const ExtensionRegistry &reg) {
  Checker checker(ctx, reg);
  ExprPath path;
  return checker.check(e, path);
}

namespace {

// Bottom-up typed traversal invoking `visit(path, node_type, arg_types,
// expr)` at every application node.
template <typename Visit>
TensorType walk_typed(Checker &checker, const Context &ctx, const Expr &e,
                      ExprPath &path, Visit &&visit) {
  if (e.is_var()) {
    const auto it = ctx.find(e.var_name());
    if (it == ctx.end()) {
      throw TypeCheckError(TypeErrorKind::UnboundVariable, path,
                           "variable '" + e.var_name() + "' is not bound");
    }
    return it->second;
  }
  std::vector<TensorType> arg_types;
  arg_types.reserve(e.args().size());
  for (std::size_t i = 0; i < e.args().size(); ++i) {
    path.push_back(static_cast<int>(i) + 1);
    arg_types.push_back(walk_typed(checker, ctx, e.args()[i], path, visit));
    path.pop_back();
  }
  const TensorType t = checker.apply(e.symbol(), arg_types, path);
  visit(path, t, arg_types, e);
  return t;
}

} // namespace

LocalityReport is_client_local(const Context &ctx, const Expr &e,
                               const ExtensionRegistry &reg) {
  LocalityReport report;
  Checker checker(ctx, reg);
  ExprPath path;
  walk_typed(checker, ctx, e, path,
             [&](const ExprPath &at, const TensorType &t,
                 const std::vector<TensorType> &arg_types, const Expr &node) {
               bool any_federated = false;
               for (const auto &a : arg_types) any_federated |= a.is_federated();
               if (any_federated && t.is_shared()) {
                 report.client_local = false;
                 report.violations.push_back(
                     {at, symbol_name(node.symbol()) +
                              " converts federated arguments into shared "
                              "output"});
               }
             });
  return report;
}

bool is_shared_only(const Context &ctx, const Expr &e) {
  for (const std::string &name : e.free_vars()) {
    const auto it = ctx.find(name);
    if (it == ctx.end()) {
      throw TypeCheckError(TypeErrorKind::UnboundVariable, {},
                           "variable '" + name + "' is not bound");
    }
    if (it->second.is_federated()) return false;
  }
  return true;
}

std::vector<ExposureSite> exposure_sites(const Context &ctx, const Expr &e,
                                         const ExtensionRegistry &reg) {
  std::vector<ExposureSite> sites;
  Checker checker(ctx, reg);
  ExprPath path;
  walk_typed(checker, ctx, e, path,
             [&](const ExprPath &at, const TensorType &t,
                 const std::vector<TensorType> &arg_types, const Expr &node) {
               bool any_federated = false;
               for (const auto &a : arg_types) any_federated |= a.is_federated();
               if (!any_federated || !t.is_shared()) return;
               ExposureSite site;
               site.path = at;
               site.symbol = symbol_name(node.symbol());
               if (const auto *agg = std::get_if<AggSymbol>(&node.symbol())) {
                 site.record_axis_aggregation =
                     arg_types[0].is_federated() &&
                     agg->axis == arg_types[0].as_federated().record_axis;
               }
               site.fed_fed_matmul =
                   std::holds_alternative<MatMulFedFedSymbol>(node.symbol());
               sites.push_back(std::move(site));
             });
  return sites;
}

} // namespace fedtensor
