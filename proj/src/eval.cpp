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

#include "fedtensor/eval.hpp"

#include <cmath>

namespace fedtensor {

const TensorValue &Value::shared() const {
  if (!shared_) throw EvalError("expected a shared value");
  return *shared_;
}

const FederatedValue &Value::federated() const {
  if (!federated_) throw EvalError("expected a federated value");
  return *federated_;
}

TensorType Value::type() const {
  if (is_shared()) return TensorType::shared(shared().shape());
  const FederatedValue &f = federated();
  return TensorType::federated(f.record_axis(), f.nonrecord_shape());
}

void Environment::bind(const std::string &name, Value v) {
  bindings_.insert_or_assign(name, std::move(v));
}

bool Environment::contains(const std::string &name) const {
  return bindings_.count(name) > 0;
}

const Value &Environment::lookup(const std::string &name) const {
  const auto it = bindings_.find(name);
  if (it == bindings_.end()) {
    throw EvalError("no binding for variable '" + name + "'");
  }
  return it->second;
}

Context Environment::context() const {
  Context ctx;
  for (const auto &kv : bindings_) ctx.emplace(kv.first, kv.second.type());
  return ctx;
}

std::optional<Federation> Environment::federation() const {
  std::optional<Federation> fed;
  for (const auto &kv : bindings_) {
    if (!kv.second.is_federated()) continue;
    const Federation &f = kv.second.federated().federation();
    if (!fed) {
      fed = f;
    } else if (*fed != f) {
      throw EvalError("federated bindings disagree on the federation");
    }
  }
  return fed;
}

namespace {

FederatedValue per_client(const FederatedValue &x, int out_record_axis,
                          const std::function<TensorValue(const TensorValue &)>
                              &f) {
  std::vector<TensorValue> locals;
  locals.reserve(x.locals().size());
  for (const auto &local : x.locals()) locals.push_back(f(local));
  const Shape nonrecord =
      locals.empty()
          ? Shape()
          : locals.front().shape().drop_axis(out_record_axis);
  return FederatedValue(x.federation(), out_record_axis, nonrecord,
                        std::move(locals));
}

void require_same_federation(const FederatedValue &a, const FederatedValue &b,
                             const char *what) {
  if (a.federation() != b.federation()) {
    throw EvalError(std::string(what) +
                    ": operands live on different federations");
  }
}

kernels::BinaryFn combine_fn(AggSchema schema) {
  switch (schema) {
  case AggSchema::Sum: return binary_fn(BinaryOp::Add);
  case AggSchema::Min:
    return +[](double a, double b) { return b < a ? b : a; };
  case AggSchema::Max:
    return +[](double a, double b) { return b > a ? b : a; };
  }
  return binary_fn(BinaryOp::Add);
}

class DistributedEvaluator {
public:
  DistributedEvaluator(const Environment &env, const ExtensionRegistry &reg)
      : env_(env), reg_(reg) {}

  Value eval(const Expr &e) {
    if (e.is_var()) return env_.lookup(e.var_name());

    std::vector<Value> args;
    args.reserve(e.args().size());
    for (const Expr &a : e.args()) args.push_back(eval(a));

    const PrimitiveSymbol &sym = e.symbol();
    if (const auto *u = std::get_if<UnarySymbol>(&sym)) {
      return eval_unary(*u, args[0]);
    }
    if (const auto *b = std::get_if<BinarySymbol>(&sym)) {
      return eval_binary(binary_fn(b->op), binary_name(b->op), args[0],
                         args[1]);
    }
    if (const auto *c = std::get_if<CompareSymbol>(&sym)) {
      return eval_binary(compare_fn(c->op), compare_name(c->op), args[0],
                         args[1]);
    }
    if (const auto *agg = std::get_if<AggSymbol>(&sym)) {
      return eval_agg(*agg, args[0]);
    }
    if (const auto *perm = std::get_if<PermSymbol>(&sym)) {
      return eval_perm(perm->perm, args[0]);
    }
    if (std::holds_alternative<MatMulFedShSymbol>(sym)) {
      return eval_matmul_fed_sh(args[0], args[1]);
    }
    if (std::holds_alternative<MatMulShFedSymbol>(sym)) {
      return eval_matmul_sh_fed(args[0], args[1]);
    }
    if (std::holds_alternative<MatMulFedFedSymbol>(sym)) {
      return eval_matmul_fed_fed(args[0], args[1]);
    }
    if (const auto *lit = std::get_if<LiteralSymbol>(&sym)) {
      return Value(lit->value);
    }
    return eval_ext(std::get<ExtSymbol>(sym).name, args);
  }

private:
  Value eval_unary(const UnarySymbol &u, const Value &a) {
    if (a.is_shared()) return Value(kernels::map_unary(a.shared(), unary_fn(u.op)));
    const FederatedValue &x = a.federated();
    return Value(per_client(x, x.record_axis(), [&](const TensorValue &t) {
      return kernels::map_unary(t, unary_fn(u.op));
    }));
  }

  Value eval_binary(kernels::BinaryFn f, const char *name, const Value &a,
                    const Value &b) {
    if (a.is_shared() && b.is_shared()) {
      return Value(kernels::map_binary(a.shared(), b.shared(), f));
    }
    if (a.is_federated() && b.is_federated()) {
      const FederatedValue &x = a.federated();
      const FederatedValue &z = b.federated();
      require_same_federation(x, z, name);
      if (x.record_axis() != z.record_axis()) {
        throw EvalError(std::string(name) + ": record axes differ");
      }
      std::vector<TensorValue> locals;
      for (std::size_t c = 0; c < x.locals().size(); ++c) {
        if (x.local(c).shape() != z.local(c).shape()) {
          throw EvalError(std::string(name) + ": client '" +
                          x.federation().client(c) +
                          "' local shapes differ: " + x.local(c).shape().str() +
                          " vs " + z.local(c).shape().str());
        }
        locals.push_back(kernels::map_binary(x.local(c), z.local(c), f));
      }
      return Value(FederatedValue(x.federation(), x.record_axis(),
                                  x.nonrecord_shape(), std::move(locals)));
    }
    // One federated, one shared: broadcast the shared operand locally.
    const bool fed_first = a.is_federated();
    const FederatedValue &x = fed_first ? a.federated() : b.federated();
    const TensorValue &s = fed_first ? b.shared() : a.shared();
    return Value(per_client(x, x.record_axis(), [&](const TensorValue &t) {
      TensorValue out = fed_first ? kernels::map_binary(t, s, f)
                                  : kernels::map_binary(s, t, f);
      if (out.shape() != t.shape()) {
        throw EvalError(std::string(name) +
                        ": local broadcast would change the local shape");
      }
      return out;
    }));
  }

  Value eval_agg(const AggSymbol &agg, const Value &a) {
    const kernels::ReduceKind kind = reduce_kind(agg.schema);
    if (a.is_shared()) {
      return Value(kernels::reduce_axis(a.shared(), agg.axis, kind));
    }
    const FederatedValue &x = a.federated();
    if (agg.axis == x.record_axis()) {
      // Per-client reduction, then a componentwise monoid merge folded in
      // federation order starting from the identity. The alpha_r(vglob)
      // formulation is the reference semantics tested against this.
      TensorValue acc =
          TensorValue::full(x.nonrecord_shape(), kernels::reduce_identity(kind));
      const kernels::BinaryFn combine = combine_fn(agg.schema);
      for (const auto &local : x.locals()) {
        acc = kernels::map_binary(
            acc, kernels::reduce_axis(local, agg.axis, kind), combine);
      }
      return Value(std::move(acc));
    }
    const int out_axis =
        agg.axis > x.record_axis() ? x.record_axis() : x.record_axis() - 1;
    return Value(per_client(x, out_axis, [&](const TensorValue &t) {
      return kernels::reduce_axis(t, agg.axis, kind);
    }));
  }

  Value eval_perm(const Permutation &tau, const Value &a) {
    if (a.is_shared()) return Value(kernels::permute(a.shared(), tau));
    const FederatedValue &x = a.federated();
    return Value(per_client(x, tau.image(x.record_axis()),
                            [&](const TensorValue &t) {
                              return kernels::permute(t, tau);
                            }));
  }

  Value eval_matmul_fed_sh(const Value &a, const Value &b) {
    const FederatedValue &x = a.federated();
    const TensorValue &s = b.shared();
    return Value(per_client(x, 1, [&](const TensorValue &t) {
      return kernels::matmul(t, s);
    }));
  }

  Value eval_matmul_sh_fed(const Value &a, const Value &b) {
    const TensorValue &s = a.shared();
    const FederatedValue &x = b.federated();
    return Value(per_client(x, 2, [&](const TensorValue &t) {
      return kernels::matmul(s, t);
    }));
  }

  Value eval_matmul_fed_fed(const Value &a, const Value &b) {
    const FederatedValue &x = a.federated();
    const FederatedValue &z = b.federated();
    require_same_federation(x, z, "matmul_fed_fed");
    const std::int64_t rows = x.nonrecord_shape().extent(1);
    const std::int64_t cols = z.nonrecord_shape().extent(1);
    TensorValue acc = TensorValue::zeros(Shape({rows, cols}));
    const kernels::BinaryFn add = binary_fn(BinaryOp::Add);
    for (std::size_t c = 0; c < x.locals().size(); ++c) {
      if (x.record_count(c) != z.record_count(c)) {
        throw EvalError("matmul_fed_fed: client '" + x.federation().client(c) +
                        "' contracts " + std::to_string(x.record_count(c)) +
                        " against " + std::to_string(z.record_count(c)) +
                        " records");
      }
      acc = kernels::map_binary(acc, kernels::matmul(x.local(c), z.local(c)),
                                add);
    }
    return Value(std::move(acc));
  }

  Value eval_ext(const std::string &name, const std::vector<Value> &args) {
    const ExtPrimitive &p = reg_.get(name);
    bool any_federated = false;
    for (const auto &v : args) any_federated |= v.is_federated();

    if (!any_federated) {
      std::vector<TensorValue> shared_args;
      for (const auto &v : args) shared_args.push_back(v.shared());
      return Value(p.ordinary_impl(shared_args));
    }
    if (p.kind == ExtPrimitive::Kind::SharedOnly) {
      throw EvalError("shared-only primitive '" + name +
                      "' received a federated value");
    }

    const Federation *fed = nullptr;
    for (const auto &v : args) {
      if (v.is_federated()) {
        if (fed && *fed != v.federated().federation()) {
          throw EvalError("'" + name + "': operands live on different "
                          "federations");
        }
        fed = &v.federated().federation();
      }
    }

    std::vector<TensorType> arg_types;
    for (const auto &v : args) arg_types.push_back(v.type());
    const TensorType result_type = p.typing(arg_types);
    if (!result_type.is_federated()) {
      throw EvalError("client-local primitive '" + name +
                      "' produced a shared type from federated input");
    }
    const FedType &rf = result_type.as_federated();

    std::vector<TensorValue> locals;
    for (std::size_t c = 0; c < fed->size(); ++c) {
      std::vector<TensorValue> client_args;
      for (const auto &v : args) {
        client_args.push_back(v.is_federated() ? v.federated().local(c)
                                               : v.shared());
      }
      locals.push_back(p.local_impl(client_args, c));
    }
    try {
      return Value(FederatedValue(*fed, rf.record_axis, rf.nonrecord,
                                  std::move(locals)));
    } catch (const ValueError &err) {
      throw EvalError("'" + name + "' produced locals inconsistent with its "
                      "typing rule: " +
                      err.what());
    }
  }

  const Environment &env_;
  const ExtensionRegistry &reg_;
};

class CentralizedEvaluator {
public:
  CentralizedEvaluator(const Environment &env, const ExtensionRegistry &reg)
      : env_(env), reg_(reg) {}

  TensorValue eval(const Expr &e) {
    if (e.is_var()) {
      const Value &v = env_.lookup(e.var_name());
      return v.is_shared() ? v.shared() : virtual_global(v.federated());
    }

    std::vector<TensorValue> args;
    args.reserve(e.args().size());
    for (const Expr &a : e.args()) args.push_back(eval(a));

    const PrimitiveSymbol &sym = e.symbol();
    if (const auto *u = std::get_if<UnarySymbol>(&sym)) {
      return kernels::map_unary(args[0], unary_fn(u->op));
    }
    if (const auto *b = std::get_if<BinarySymbol>(&sym)) {
      return kernels::map_binary(args[0], args[1], binary_fn(b->op));
    }
    if (const auto *c = std::get_if<CompareSymbol>(&sym)) {
      return kernels::map_binary(args[0], args[1], compare_fn(c->op));
    }
    if (const auto *agg = std::get_if<AggSymbol>(&sym)) {
      return kernels::reduce_axis(args[0], agg->axis, reduce_kind(agg->schema));
    }
    if (const auto *perm = std::get_if<PermSymbol>(&sym)) {
      return kernels::permute(args[0], perm->perm);
    }
    if (std::holds_alternative<MatMulFedShSymbol>(sym) ||
        std::holds_alternative<MatMulShFedSymbol>(sym) ||
        std::holds_alternative<MatMulFedFedSymbol>(sym)) {
      return kernels::matmul(args[0], args[1]);
    }
    if (const auto *lit = std::get_if<LiteralSymbol>(&sym)) {
      return lit->value;
    }
    return reg_.get(std::get<ExtSymbol>(sym).name).ordinary_impl(args);
  }

private:
  const Environment &env_;
  const ExtensionRegistry &reg_;
};

} // namespace

Value eval_distributed(const Environment &env, const Expr &e,
                       const ExtensionRegistry &reg) {
  DistributedEvaluator ev(env, reg);
  return ev.eval(e);
}

CentralizedResult eval_centralized(const Environment &env, const Expr &e,
                                   const ExtensionRegistry &reg) {
  const TensorType type = typecheck(env.context(), e, reg);
  CentralizedEvaluator ev(env, reg);
  return {ev.eval(e), type};
}

ConsistencyReport check_consistency(const Environment &env, const Expr &e,
                                    double tol, const ExtensionRegistry &reg) {
  const Value distributed = eval_distributed(env, e, reg);
  const CentralizedResult central = eval_centralized(env, e, reg);

  ConsistencyReport report;
  report.distributed_federated = distributed.is_federated();
  const TensorValue left = distributed.is_federated()
                               ? virtual_global(distributed.federated())
                               : distributed.shared();
  const TensorValue &right = central.value;

  if (left.shape() != right.shape()) {
    report.max_abs_deviation = std::numeric_limits<double>::infinity();
    report.max_rel_deviation = std::numeric_limits<double>::infinity();
    report.pass = false;
    return report;
  }
  for (std::int64_t i = 0; i < left.numel(); ++i) {
    const double a = left.at_linear(i);
    const double b = right.at_linear(i);
    if (std::isnan(a) || std::isnan(b)) {
      if (std::isnan(a) != std::isnan(b)) report.nan_mismatch = true;
      continue;
    }
    const double abs_dev = std::fabs(a - b);
    const double rel_dev = abs_dev / std::max({1.0, std::fabs(a), std::fabs(b)});
    report.max_abs_deviation = std::max(report.max_abs_deviation, abs_dev);
    report.max_rel_deviation = std::max(report.max_rel_deviation, rel_dev);
  }
  report.pass = !report.nan_mismatch && report.max_rel_deviation <= tol;
  return report;
}

} // namespace fedtensor
