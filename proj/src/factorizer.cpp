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

#include "fedtensor/factorizer.hpp"

#include <limits>
#include <set>

namespace fedtensor {

const char *to_string(MergeTag tag) {
  switch (tag) {
  case MergeTag::Sum: return "sum";
  case MergeTag::Min: return "min";
  case MergeTag::Max: return "max";
  case MergeTag::MatrixAdd: return "matrix-add";
  }
  return "?";
}

double merge_identity(MergeTag tag) {
  switch (tag) {
  case MergeTag::Sum:
  case MergeTag::MatrixAdd: return 0.0;
  case MergeTag::Min: return std::numeric_limits<double>::infinity();
  case MergeTag::Max: return -std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

TensorValue merge_combine(MergeTag tag, const TensorValue &a,
                          const TensorValue &b) {
  if (a.shape() != b.shape()) {
    throw EvalError("merge of differently shaped states " + a.shape().str() +
                    " and " + b.shape().str());
  }
  kernels::BinaryFn f = nullptr;
  switch (tag) {
  case MergeTag::Sum:
  case MergeTag::MatrixAdd:
    f = binary_fn(BinaryOp::Add);
    break;
  case MergeTag::Min:
    f = +[](double x, double y) { return y < x ? y : x; };
    break;
  case MergeTag::Max:
    f = +[](double x, double y) { return y > x ? y : x; };
    break;
  }
  return kernels::map_binary(a, b, f);
}

namespace {

MergeTag merge_for_schema(AggSchema schema) {
  switch (schema) {
  case AggSchema::Sum: return MergeTag::Sum;
  case AggSchema::Min: return MergeTag::Min;
  case AggSchema::Max: return MergeTag::Max;
  }
  return MergeTag::Sum;
}

Context program_context(const OneRoundProgram &p) {
  Context ctx;
  ctx.emplace(p.input_name, TensorType(p.input_type));
  for (const auto &[name, shape] : p.shared_params) {
    ctx.emplace(name, TensorType::shared(shape));
  }
  return ctx;
}

// Checks one client-local expression; appends violations.
std::optional<FedType> check_client_local(const Context &ctx, const Expr &e,
                                          const ExtensionRegistry &reg,
                                          int index, const char *what,
                                          std::vector<Violation> &out) {
  TensorType t = TensorType::shared(Shape());
  try {
    t = typecheck(ctx, e, reg);
  } catch (const TypeCheckError &err) {
    out.push_back({index, std::string(what) + " does not typecheck: " +
                              err.what()});
    return std::nullopt;
  }
  if (!t.is_federated()) {
    out.push_back({index, std::string(what) + " must have federated type, "
                                              "got " +
                              t.str()});
    return std::nullopt;
  }
  const LocalityReport locality = is_client_local(ctx, e, reg);
  if (!locality.client_local) {
    for (const auto &v : locality.violations) {
      out.push_back({index, std::string(what) + " is not client-local: " +
                                v.message + " at " + path_to_string(v.path)});
    }
    return std::nullopt;
  }
  return t.as_federated();
}

} // namespace

std::vector<Violation> validate_one_round(const OneRoundProgram &p,
                                          const ExtensionRegistry &reg) {
  std::vector<Violation> out;
  if (p.components.empty()) {
    out.push_back({-1, "a one-round program needs at least one component"});
    return out;
  }

  const Context ctx = program_context(p);
  Context decoder_ctx;
  for (const auto &[name, shape] : p.shared_params) {
    decoder_ctx.emplace(name, TensorType::shared(shape));
  }

  std::set<std::string> names;
  for (std::size_t i = 0; i < p.components.size(); ++i) {
    const auto &comp = p.components[i];
    const int index = static_cast<int>(i);
    if (comp.name.empty() || !names.insert(comp.name).second ||
        ctx.count(comp.name)) {
      out.push_back({index, "component name '" + comp.name +
                                "' is empty, duplicated, or shadows an input"});
      continue;
    }

    if (const auto *agg = std::get_if<AggComponent>(&comp.form)) {
      const auto t =
          check_client_local(ctx, agg->expr, reg, index, "encoder", out);
      if (!t) continue;
      // The schema's record-axis aggregation merges client-wise: the three
      // shipped schemas are all commutative monoids, so mergeability holds
      // by construction and is property-tested.
      decoder_ctx.emplace(comp.name, TensorType::shared(t->nonrecord));
    } else {
      const auto &mat = std::get<MatComponent>(comp.form);
      const auto ta = check_client_local(ctx, mat.a, reg, index,
                                         "matrix-form left factor", out);
      const auto tb = check_client_local(ctx, mat.b, reg, index,
                                         "matrix-form right factor", out);
      if (!ta || !tb) continue;
      const bool a_ok = ta->record_axis == 2 && ta->nonrecord.rank() == 1;
      const bool b_ok = tb->record_axis == 1 && tb->nonrecord.rank() == 1;
      if (!a_ok || !b_ok) {
        out.push_back({index,
                       "matrix-form factors must have types Fed_2((m)) and "
                       "Fed_1((n)), got " +
                           TensorType(*ta).str() + " and " +
                           TensorType(*tb).str()});
        continue;
      }
      decoder_ctx.emplace(comp.name,
                          TensorType::shared(Shape({ta->nonrecord.extent(1),
                                                    tb->nonrecord.extent(1)})));
    }
  }
  if (!out.empty()) return out;

  // Decoder: shared-only over the component outputs and shared parameters.
  for (const std::string &name : p.decoder.free_vars()) {
    if (!decoder_ctx.count(name)) {
      out.push_back({-1, name == p.input_name
                             ? "decoder is not shared-only: it references the "
                               "federated input '" +
                                   name + "'"
                             : "decoder references unknown variable '" + name +
                                   "'"});
    }
  }
  if (!out.empty()) return out;
  try {
    if (!is_shared_only(decoder_ctx, p.decoder)) {
      out.push_back({-1, "decoder is not shared-only"});
    }
    (void)typecheck(decoder_ctx, p.decoder, reg);
  } catch (const TypeCheckError &err) {
    out.push_back({-1, std::string("decoder does not typecheck: ") +
                           err.what()});
  }
  return out;
}

std::int64_t SharedStatePlan::state_elements() const {
  std::int64_t n = 0;
  for (const auto &c : components) n += c.state_shape.numel();
  return n;
}

SharedStatePlan extract_plan(const OneRoundProgram &p,
                             const ExtensionRegistry &reg) {
  SharedStatePlan plan;
  plan.input_name = p.input_name;
  plan.input_type = p.input_type;
  plan.shared_params = p.shared_params;
  plan.decoder = p.decoder;

  const Context ctx = program_context(p);
  for (const auto &comp : p.components) {
    PlanComponent pc;
    pc.name = comp.name;
    pc.form = comp.form;
    if (const auto *agg = std::get_if<AggComponent>(&comp.form)) {
      const TensorType t = typecheck(ctx, agg->expr, reg);
      if (!t.is_federated()) {
        throw Error("component '" + comp.name + "' is not federated");
      }
      pc.state_shape = t.as_federated().nonrecord;
      pc.merge = merge_for_schema(agg->schema);
      pc.agg_record_axis = t.as_federated().record_axis;
    } else {
      const auto &mat = std::get<MatComponent>(comp.form);
      const TensorType ta = typecheck(ctx, mat.a, reg);
      const TensorType tb = typecheck(ctx, mat.b, reg);
      pc.state_shape = Shape({ta.as_federated().nonrecord.extent(1),
                              tb.as_federated().nonrecord.extent(1)});
      pc.merge = MergeTag::MatrixAdd;
    }
    plan.components.push_back(std::move(pc));
  }
  return plan;
}

OneRoundProgram realize_program(const SharedStatePlan &plan) {
  OneRoundProgram p;
  p.input_name = plan.input_name;
  p.input_type = plan.input_type;
  p.shared_params = plan.shared_params;
  p.decoder = plan.decoder;
  for (const auto &pc : plan.components) {
    p.components.push_back({pc.name, pc.form});
  }
  return p;
}

namespace {

Environment client_environment(const SharedStatePlan &plan,
                               const TensorValue &local,
                               const Environment &shared_env) {
  // A one-client federation realizes the local map: client-locality makes
  // the per-client output independent of the rest of the federation.
  Federation solo({"local"});
  Environment env;
  env.bind(plan.input_name,
           Value(FederatedValue(solo, plan.input_type.record_axis,
                                plan.input_type.nonrecord, {local})));
  for (const auto &[name, shape] : plan.shared_params) {
    const Value &v = shared_env.lookup(name);
    if (!v.is_shared() || v.shared().shape() != shape) {
      throw EvalError("shared parameter '" + name + "' missing or not of "
                      "shape " +
                      shape.str());
    }
    env.bind(name, v);
  }
  return env;
}

} // namespace

EncodedState encode_client(const SharedStatePlan &plan,
                           const TensorValue &local,
                           const Environment &shared_env,
                           const ExtensionRegistry &reg) {
  const Environment env = client_environment(plan, local, shared_env);
  EncodedState state;
  state.reserve(plan.components.size());
  for (const auto &comp : plan.components) {
    if (const auto *agg = std::get_if<AggComponent>(&comp.form)) {
      const Value v = eval_distributed(env, agg->expr, reg);
      state.push_back(kernels::reduce_axis(v.federated().local(0),
                                           comp.agg_record_axis,
                                           reduce_kind(agg->schema)));
    } else {
      const auto &mat = std::get<MatComponent>(comp.form);
      const Value a = eval_distributed(env, mat.a, reg);
      const Value b = eval_distributed(env, mat.b, reg);
      if (a.federated().record_count(0) != b.federated().record_count(0)) {
        throw EvalError("matrix-form factors contract different record "
                        "counts");
      }
      state.push_back(
          kernels::matmul(a.federated().local(0), b.federated().local(0)));
    }
    if (state.back().shape() != comp.state_shape) {
      throw EvalError("component '" + comp.name + "' produced state shape " +
                      state.back().shape().str() + ", plan expects " +
                      comp.state_shape.str());
    }
  }
  return state;
}

std::vector<EncodedState> encode_all(const SharedStatePlan &plan,
                                     const FederatedValue &x,
                                     const Environment &shared_env,
                                     const ExtensionRegistry &reg) {
  if (x.record_axis() != plan.input_type.record_axis ||
      x.nonrecord_shape() != plan.input_type.nonrecord) {
    throw EvalError("input of type Fed_" + std::to_string(x.record_axis()) +
                    x.nonrecord_shape().str() + " does not match plan input " +
                    TensorType(plan.input_type).str());
  }
  std::vector<EncodedState> states(x.locals().size());
  for (std::size_t c = 0; c < x.locals().size(); ++c) {
    states[c] = encode_client(plan, x.local(c), shared_env, reg);
  }
  return states;
}

EncodedState merge_states(const SharedStatePlan &plan,
                          const std::vector<EncodedState> &states) {
  EncodedState merged;
  merged.reserve(plan.components.size());
  for (const auto &comp : plan.components) merged.push_back(comp.identity_state());
  for (const auto &state : states) {
    if (state.size() != merged.size()) {
      throw EvalError("client state has wrong component count");
    }
    for (std::size_t i = 0; i < merged.size(); ++i) {
      merged[i] = merge_combine(plan.components[i].merge, merged[i], state[i]);
    }
  }
  return merged;
}

TensorValue decode_state(const SharedStatePlan &plan,
                         const EncodedState &merged,
                         const Environment &shared_env,
                         const ExtensionRegistry &reg) {
  Environment env;
  for (std::size_t i = 0; i < plan.components.size(); ++i) {
    env.bind(plan.components[i].name, Value(merged[i]));
  }
  for (const auto &[name, shape] : plan.shared_params) {
    (void)shape;
    env.bind(name, shared_env.lookup(name));
  }
  const Value v = eval_distributed(env, plan.decoder, reg);
  return v.shared();
}

TensorValue run_plan(const SharedStatePlan &plan, const FederatedValue &x,
                     const Environment &shared_env,
                     const ExtensionRegistry &reg) {
  return decode_state(plan, merge_states(plan, encode_all(plan, x, shared_env,
                                                          reg)),
                      shared_env, reg);
}

TensorValue run_direct(const OneRoundProgram &p, const FederatedValue &x,
                       const Environment &shared_env,
                       const ExtensionRegistry &reg) {
  Environment env;
  env.bind(p.input_name, Value(FederatedValue(x)));
  for (const auto &[name, shape] : p.shared_params) {
    (void)shape;
    env.bind(name, shared_env.lookup(name));
  }
  const Context ctx = env.context();

  // Evaluate each shared-state expression g_i = alpha_r(e_i) or
  // MatMulFedFed(a_i, b_i) under the distributed semantics, then the
  // decoder over the shared outputs.
  Environment decoder_env;
  for (const auto &[name, shape] : p.shared_params) {
    (void)shape;
    decoder_env.bind(name, shared_env.lookup(name));
  }
  for (const auto &comp : p.components) {
    Expr g = Expr::var("unset");
    if (const auto *agg = std::get_if<AggComponent>(&comp.form)) {
      const TensorType t = typecheck(ctx, agg->expr, reg);
      g = ops::agg(agg->schema, t.as_federated().record_axis, agg->expr);
    } else {
      const auto &mat = std::get<MatComponent>(comp.form);
      g = ops::matmul_fed_fed(mat.a, mat.b);
    }
    decoder_env.bind(comp.name, eval_distributed(env, g, reg));
  }
  return eval_distributed(decoder_env, p.decoder, reg).shared();
}

TensorValue run_centralized(const OneRoundProgram &p, const FederatedValue &x,
                            const Environment &shared_env,
                            const ExtensionRegistry &reg) {
  Environment env;
  env.bind(p.input_name, Value(FederatedValue(x)));
  for (const auto &[name, shape] : p.shared_params) {
    (void)shape;
    env.bind(name, shared_env.lookup(name));
  }
  const Context ctx = env.context();

  Environment decoder_env;
  for (const auto &[name, shape] : p.shared_params) {
    (void)shape;
    decoder_env.bind(name, shared_env.lookup(name));
  }
  for (const auto &comp : p.components) {
    Expr g = Expr::var("unset");
    if (const auto *agg = std::get_if<AggComponent>(&comp.form)) {
      const TensorType t = typecheck(ctx, agg->expr, reg);
      g = ops::agg(agg->schema, t.as_federated().record_axis, agg->expr);
    } else {
      const auto &mat = std::get<MatComponent>(comp.form);
      g = ops::matmul_fed_fed(mat.a, mat.b);
    }
    decoder_env.bind(comp.name, Value(eval_centralized(env, g, reg).value));
  }
  return eval_centralized(decoder_env, p.decoder, reg).value;
}

namespace {

OneRoundProgram round_as_one_round(const IterativeProgram &p, const Round &r,
                                   const Shape &state_shape) {
  OneRoundProgram one;
  one.input_name = p.input_name;
  one.input_type = p.input_type;
  one.shared_params = {{p.state_name, state_shape}};
  one.components = r.components;
  one.decoder = r.decoder;
  return one;
}

} // namespace

std::vector<Violation> validate_iterative(const IterativeProgram &p,
                                          const ExtensionRegistry &reg) {
  std::vector<Violation> out;
  if (p.rounds < 1) {
    out.push_back({-1, "iterative programs need at least one round"});
    return out;
  }
  if (!p.round_at) {
    out.push_back({-1, "missing round factory"});
    return out;
  }
  if (!p.initial_state.shape().all_positive()) {
    out.push_back({-1, "initial state shape must have positive extents"});
    return out;
  }
  // Rounds are structurally fixed; round 0 stands in for all of them.
  return validate_one_round(
      round_as_one_round(p, p.round_at(0), p.initial_state.shape()), reg);
}

IterativeRunResult run_iterative(const IterativeProgram &p,
                                 const FederatedValue &x,
                                 const ExtensionRegistry &reg,
                                 const RoundRunner &round_runner) {
  const std::vector<Violation> violations = validate_iterative(p, reg);
  if (!violations.empty()) {
    throw EvalError("iterative program is invalid: " + violations[0].message);
  }

  IterativeRunResult result;
  TensorValue state = p.initial_state;
  for (int t = 0; t < p.rounds; ++t) {
    const Round round = p.round_at(t);
    const OneRoundProgram one = round_as_one_round(p, round, state.shape());
    // Structure is fixed across rounds; only literals vary. Validation ran
    // on round 0, so later rounds go straight to extraction.
    SharedStatePlan plan;
    try {
      plan = extract_plan(one, reg);
    } catch (const Error &err) {
      throw EvalError("round " + std::to_string(t) + ": " + err.what());
    }

    Environment shared_env;
    shared_env.bind(p.state_name, Value(state));

    RoundTrace trace;
    trace.state_before = state;
    try {
      if (round_runner) {
        // The runner owns the round (e.g. a privacy-lifted execution); no
        // merged-state trace is recorded for it.
        state = round_runner(plan, x, shared_env);
      } else {
        trace.merged_state =
            merge_states(plan, encode_all(plan, x, shared_env, reg));
        state = decode_state(plan, trace.merged_state, shared_env, reg);
      }
    } catch (const Error &err) {
      throw EvalError("round " + std::to_string(t) + ": " + err.what());
    }
    result.trace.push_back(std::move(trace));
  }
  result.final_state = std::move(state);
  return result;
}

} // namespace fedtensor
