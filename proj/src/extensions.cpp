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

#include "fedtensor/extensions.hpp"

#include <cmath>
#include <random>

#include "fedtensor/federation.hpp"
#include "fedtensor/kernels.hpp"
#include "fedtensor/linalg.hpp"

namespace fedtensor {

namespace {

// Type battery used to probe registered typing rules for structural kind
// violations at registration time. Not exhaustive; the same guard is also
// enforced on every typechecked application.
std::vector<TensorType> probe_types() {
  return {
      TensorType::shared(Shape()),
      TensorType::shared(Shape({1})),
      TensorType::shared(Shape({2})),
      TensorType::shared(Shape({3})),
      TensorType::shared(Shape({2, 2})),
      TensorType::shared(Shape({2, 3})),
      TensorType::federated(1, Shape()),
      TensorType::federated(1, Shape({1})),
      TensorType::federated(1, Shape({2})),
      TensorType::federated(1, Shape({3})),
      TensorType::federated(2, Shape({2})),
      TensorType::federated(1, Shape({2, 2})),
  };
}

void probe_combinations(int arity,
                        const std::function<void(std::vector<TensorType> &)> &f) {
  const auto battery = probe_types();
  std::vector<TensorType> args(static_cast<std::size_t>(arity));
  if (arity == 1) {
    for (const auto &t : battery) {
      args[0] = t;
      f(args);
    }
    return;
  }
  if (arity == 2) {
    for (const auto &a : battery) {
      for (const auto &b : battery) {
        args[0] = a;
        args[1] = b;
        f(args);
      }
    }
    return;
  }
  // Higher arities: probe each slot with every battery entry, others scalar.
  for (int slot = 0; slot < arity; ++slot) {
    for (const auto &t : battery) {
      for (auto &a : args) a = TensorType::shared(Shape());
      args[static_cast<std::size_t>(slot)] = t;
      f(args);
    }
  }
}

} // namespace

void ExtensionRegistry::register_primitive(ExtPrimitive p) {
  if (p.name.empty()) throw ValueError("extension name must be nonempty");
  if (primitives_.count(p.name)) {
    throw ValueError("extension '" + p.name + "' is already registered");
  }
  if (!p.typing) throw ValueError("extension '" + p.name + "' has no typing rule");
  if (!p.ordinary_impl) {
    throw ValueError("extension '" + p.name +
                     "' has no ordinary interpretation");
  }
  if (p.kind == ExtPrimitive::Kind::ClientLocal && !p.local_impl) {
    throw ValueError("client-local extension '" + p.name +
                     "' has no per-client implementation");
  }

  // Structural satisfiability of the kind constraints.
  std::string violation;
  probe_combinations(p.arity, [&](std::vector<TensorType> &args) {
    if (!violation.empty()) return;
    bool any_federated = false;
    for (const auto &t : args) any_federated |= t.is_federated();
    if (!any_federated) return;
    TensorType result = TensorType::shared(Shape());
    try {
      result = p.typing(args);
    } catch (const TypeCheckError &) {
      return; // rejected combination, fine
    }
    if (p.kind == ExtPrimitive::Kind::SharedOnly) {
      violation = "shared-only primitive accepts a federated argument";
    } else if (result.is_shared()) {
      violation = "client-local primitive maps federated input to shared "
                  "output";
    }
  });
  if (!violation.empty()) {
    throw ValueError("extension '" + p.name + "' rejected: " + violation);
  }

  primitives_.emplace(p.name, std::move(p));
}

bool ExtensionRegistry::contains(const std::string &name) const {
  return primitives_.count(name) > 0;
}

const ExtPrimitive &ExtensionRegistry::get(const std::string &name) const {
  const auto it = primitives_.find(name);
  if (it == primitives_.end()) {
    throw TypeCheckError(TypeErrorKind::ExtensionMisuse, {},
                         "unknown extension primitive '" + name + "'");
  }
  return it->second;
}

std::vector<std::string> ExtensionRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(primitives_.size());
  for (const auto &kv : primitives_) out.push_back(kv.first);
  return out;
}

namespace {

TypeCheckError ext_type_error(const std::string &msg) {
  return TypeCheckError(TypeErrorKind::ExtensionMisuse, {}, msg);
}

const FedType &expect_fed(const TensorType &t, const std::string &what) {
  if (!t.is_federated()) throw ext_type_error(what + " must be federated");
  return t.as_federated();
}

// Drop (or keep only) the trailing column of per-record feature rows.
TensorValue slice_last_axis(const TensorValue &t, bool keep_last) {
  const int k = t.rank();
  const std::int64_t q = t.shape().extent(k);
  const std::int64_t width = keep_last ? 1 : q - 1;
  const std::int64_t lead = keep_last ? q - 1 : 0;
  const std::int64_t rows = q == 0 ? 0 : t.numel() / q;
  Shape out_shape = t.shape().drop_axis(k);
  if (!keep_last) out_shape = out_shape.insert_axis(k, width);
  std::vector<double> out(static_cast<std::size_t>(rows * width));
  const double *src = t.data().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t j = 0; j < width; ++j) {
      out[static_cast<std::size_t>(r * width + j)] = src[r * q + lead + j];
    }
  }
  return TensorValue(out_shape, std::move(out));
}

ExtPrimitive make_proj_features() {
  ExtPrimitive p;
  p.name = "proj_features";
  p.kind = ExtPrimitive::Kind::ClientLocal;
  p.arity = 1;
  p.typing = [](const std::vector<TensorType> &args) -> TensorType {
    const FedType &f = expect_fed(args[0], "proj_features argument");
    if (f.record_axis != 1 || f.nonrecord.rank() != 1 ||
        f.nonrecord.extent(1) < 2) {
      throw ext_type_error("proj_features expects Fed_1((q)) with q >= 2");
    }
    return TensorType::federated(1, Shape({f.nonrecord.extent(1) - 1}));
  };
  p.local_impl = [](const std::vector<TensorValue> &args, std::size_t) {
    return slice_last_axis(args[0], /*keep_last=*/false);
  };
  p.ordinary_impl = [](const std::vector<TensorValue> &args) {
    return slice_last_axis(args[0], /*keep_last=*/false);
  };
  return p;
}

ExtPrimitive make_proj_response() {
  ExtPrimitive p;
  p.name = "proj_response";
  p.kind = ExtPrimitive::Kind::ClientLocal;
  p.arity = 1;
  p.typing = [](const std::vector<TensorType> &args) -> TensorType {
    const FedType &f = expect_fed(args[0], "proj_response argument");
    if (f.record_axis != 1 || f.nonrecord.rank() != 1 ||
        f.nonrecord.extent(1) < 2) {
      throw ext_type_error("proj_response expects Fed_1((q)) with q >= 2");
    }
    return TensorType::federated(1, Shape());
  };
  auto impl = [](const TensorValue &t) {
    return slice_last_axis(t, /*keep_last=*/true);
  };
  p.local_impl = [impl](const std::vector<TensorValue> &args, std::size_t) {
    return impl(args[0]);
  };
  p.ordinary_impl = [impl](const std::vector<TensorValue> &args) {
    return impl(args[0]);
  };
  return p;
}

// View a record vector as an (n,1) federated matrix, e.g. to use responses
// as the right operand of a federated-federated product.
ExtPrimitive make_as_record_column() {
  ExtPrimitive p;
  p.name = "as_record_column";
  p.kind = ExtPrimitive::Kind::ClientLocal;
  p.arity = 1;
  p.typing = [](const std::vector<TensorType> &args) -> TensorType {
    const FedType &f = expect_fed(args[0], "as_record_column argument");
    if (f.record_axis != 1 || f.nonrecord.rank() != 0) {
      throw ext_type_error("as_record_column expects Fed_1(())");
    }
    return TensorType::federated(1, Shape({1}));
  };
  auto impl = [](const TensorValue &t) {
    return TensorValue(Shape({t.shape().extent(1), 1}), t.data());
  };
  p.local_impl = [impl](const std::vector<TensorValue> &args, std::size_t) {
    return impl(args[0]);
  };
  p.ordinary_impl = [impl](const std::vector<TensorValue> &args) {
    return impl(args[0]);
  };
  return p;
}

// result[a, ...] = s[a] * v[a, ...]: broadcast a per-record scalar across
// each record's slice. Base federated element-wise operations require equal
// local shapes, which rules out this pattern there.
ExtPrimitive make_per_record_scale() {
  ExtPrimitive p;
  p.name = "per_record_scale";
  p.kind = ExtPrimitive::Kind::ClientLocal;
  p.arity = 2;
  p.typing = [](const std::vector<TensorType> &args) -> TensorType {
    const FedType &s = expect_fed(args[0], "per_record_scale scale");
    const FedType &v = expect_fed(args[1], "per_record_scale value");
    if (s.record_axis != 1 || s.nonrecord.rank() != 0) {
      throw ext_type_error("per_record_scale scale must be Fed_1(())");
    }
    if (v.record_axis != 1) {
      throw ext_type_error("per_record_scale value must have record axis 1");
    }
    return TensorType(v);
  };
  auto impl = [](const TensorValue &s, const TensorValue &v) {
    const std::int64_t n = s.shape().extent(1);
    if (v.shape().extent(1) != n) {
      throw EvalError("per_record_scale record counts differ: " +
                      std::to_string(n) + " vs " +
                      std::to_string(v.shape().extent(1)));
    }
    const std::int64_t inner = n == 0 ? 0 : v.numel() / n;
    std::vector<double> out(v.data().size());
    for (std::int64_t a = 0; a < n; ++a) {
      const double scale = s.at_linear(a);
      for (std::int64_t j = 0; j < inner; ++j) {
        out[static_cast<std::size_t>(a * inner + j)] =
            scale * v.at_linear(a * inner + j);
      }
    }
    return TensorValue(v.shape(), std::move(out));
  };
  p.local_impl = [impl](const std::vector<TensorValue> &args, std::size_t) {
    return impl(args[0], args[1]);
  };
  p.ordinary_impl = [impl](const std::vector<TensorValue> &args) {
    return impl(args[0], args[1]);
  };
  return p;
}

// result[a, j, k] = v[a, j] * v[a, k]: per-record outer product, the
// curvature block of Gaussian linear regression.
ExtPrimitive make_per_record_outer() {
  ExtPrimitive p;
  p.name = "per_record_outer";
  p.kind = ExtPrimitive::Kind::ClientLocal;
  p.arity = 1;
  p.typing = [](const std::vector<TensorType> &args) -> TensorType {
    const FedType &f = expect_fed(args[0], "per_record_outer argument");
    if (f.record_axis != 1 || f.nonrecord.rank() != 1) {
      throw ext_type_error("per_record_outer expects Fed_1((p))");
    }
    const std::int64_t pdim = f.nonrecord.extent(1);
    return TensorType::federated(1, Shape({pdim, pdim}));
  };
  auto impl = [](const TensorValue &v) {
    const std::int64_t n = v.shape().extent(1);
    const std::int64_t pdim = v.shape().extent(2);
    std::vector<double> out(static_cast<std::size_t>(n * pdim * pdim));
    for (std::int64_t a = 0; a < n; ++a) {
      for (std::int64_t j = 0; j < pdim; ++j) {
        for (std::int64_t k = 0; k < pdim; ++k) {
          out[static_cast<std::size_t>((a * pdim + j) * pdim + k)] =
              v.at_linear(a * pdim + j) * v.at_linear(a * pdim + k);
        }
      }
    }
    return TensorValue(Shape({n, pdim, pdim}), std::move(out));
  };
  p.local_impl = [impl](const std::vector<TensorValue> &args, std::size_t) {
    return impl(args[0]);
  };
  p.ordinary_impl = [impl](const std::vector<TensorValue> &args) {
    return impl(args[0]);
  };
  return p;
}

ExtPrimitive make_solve() {
  ExtPrimitive p;
  p.name = "solve";
  p.kind = ExtPrimitive::Kind::SharedOnly;
  p.arity = 2;
  p.typing = [](const std::vector<TensorType> &args) -> TensorType {
    if (args[0].is_federated() || args[1].is_federated()) {
      throw ext_type_error("solve is shared-only");
    }
    const Shape &a = args[0].as_shared().shape;
    const Shape &b = args[1].as_shared().shape;
    if (a.rank() != 2 || a.extent(1) != a.extent(2)) {
      throw ext_type_error("solve matrix must be square, got " + a.str());
    }
    if (b.rank() < 1 || b.rank() > 2 || b.extent(1) != a.extent(1)) {
      throw ext_type_error("solve right-hand side " + b.str() +
                           " does not match " + a.str());
    }
    return args[1];
  };
  p.ordinary_impl = [](const std::vector<TensorValue> &args) {
    return solve_linear_system(args[0], args[1]);
  };
  return p;
}

ExtPrimitive make_shared_matmul() {
  ExtPrimitive p;
  p.name = "shared_matmul";
  p.kind = ExtPrimitive::Kind::SharedOnly;
  p.arity = 2;
  p.typing = [](const std::vector<TensorType> &args) -> TensorType {
    if (args[0].is_federated() || args[1].is_federated()) {
      throw ext_type_error("shared_matmul is shared-only");
    }
    const Shape &a = args[0].as_shared().shape;
    const Shape &b = args[1].as_shared().shape;
    if (a.rank() != 2 || b.rank() != 2 || a.extent(2) != b.extent(1)) {
      throw ext_type_error("shared_matmul needs (a,b) x (b,c), got " +
                           a.str() + " and " + b.str());
    }
    return TensorType::shared(Shape({a.extent(1), b.extent(2)}));
  };
  p.ordinary_impl = [](const std::vector<TensorValue> &args) {
    return kernels::matmul(args[0], args[1]);
  };
  return p;
}

ExtensionRegistry make_builtin_registry() {
  ExtensionRegistry reg;
  reg.register_primitive(make_proj_features());
  reg.register_primitive(make_proj_response());
  reg.register_primitive(make_as_record_column());
  reg.register_primitive(make_per_record_scale());
  reg.register_primitive(make_per_record_outer());
  reg.register_primitive(make_solve());
  reg.register_primitive(make_shared_matmul());
  return reg;
}

} // namespace

const ExtensionRegistry &builtin_registry() {
  static const ExtensionRegistry reg = make_builtin_registry();
  return reg;
}

ExtensionRegistry &default_registry() {
  static ExtensionRegistry reg = make_builtin_registry();
  return reg;
}

namespace {

struct SampledArgs {
  std::vector<TensorType> types;
  // For federated args: per-client locals. For shared args: a single value.
  struct Value {
    bool federated = false;
    std::vector<TensorValue> locals; // federated: one per client
    TensorValue shared;
  };
  std::vector<Value> values;
};

TensorValue random_value(const Shape &shape, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  std::vector<double> data(static_cast<std::size_t>(shape.numel()));
  for (auto &v : data) v = dist(rng);
  return TensorValue(shape, std::move(data));
}

// Argument combinations from the probe battery that the typing rule accepts.
std::vector<std::vector<TensorType>> accepted_combinations(const ExtPrimitive &p) {
  std::vector<std::vector<TensorType>> accepted;
  probe_combinations(p.arity, [&](std::vector<TensorType> &args) {
    try {
      (void)p.typing(args);
      accepted.push_back(args);
    } catch (const TypeCheckError &) {
    }
  });
  return accepted;
}

// Attach random data for a typable combination, over `clients` clients with
// record counts shared across the federated arguments.
void sample_args(const std::vector<std::vector<TensorType>> &accepted,
                 std::size_t clients, std::mt19937_64 &rng, SampledArgs &out) {
  std::uniform_int_distribution<std::size_t> pick(0, accepted.size() - 1);
  out.types = accepted[pick(rng)];

  std::uniform_int_distribution<std::int64_t> count(0, 4);
  std::vector<std::int64_t> records(clients);
  for (auto &n : records) n = count(rng);

  out.values.clear();
  for (const auto &t : out.types) {
    SampledArgs::Value v;
    if (t.is_federated()) {
      v.federated = true;
      const FedType &f = t.as_federated();
      for (std::size_t c = 0; c < clients; ++c) {
        v.locals.push_back(random_value(
            f.nonrecord.insert_axis(f.record_axis, records[c]), rng));
      }
    } else {
      v.shared = random_value(t.as_shared().shape, rng);
    }
    out.values.push_back(std::move(v));
  }
}

std::vector<TensorValue> args_at_client(const SampledArgs &sampled,
                                        std::size_t c) {
  std::vector<TensorValue> args;
  for (const auto &v : sampled.values) {
    args.push_back(v.federated ? v.locals[c] : v.shared);
  }
  return args;
}

bool nearly_equal(const TensorValue &a, const TensorValue &b, double tol) {
  if (a.shape() != b.shape()) return false;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double x = a.at_linear(i), y = b.at_linear(i);
    if (std::isnan(x) != std::isnan(y)) return false;
    if (std::isnan(x)) continue;
    const double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
    if (std::fabs(x - y) > tol * scale) return false;
  }
  return true;
}

} // namespace

AuditReport audit_extension(const ExtensionRegistry &reg,
                            const std::string &name, int trials,
                            std::uint64_t seed) {
  const ExtPrimitive &p = reg.get(name);
  AuditReport report;
  report.primitive = name;
  report.trials = trials;
  std::mt19937_64 rng(seed);

  if (p.kind == ExtPrimitive::Kind::SharedOnly) {
    // The typing rule must reject every battery combination containing a
    // federated argument (also enforced by the typechecker guard).
    probe_combinations(p.arity, [&](std::vector<TensorType> &args) {
      bool any_federated = false;
      for (const auto &t : args) any_federated |= t.is_federated();
      if (!any_federated) return;
      try {
        (void)p.typing(args);
        report.failures.push_back(
            {"shared-only-guard", "typing accepted a federated argument"});
      } catch (const TypeCheckError &) {
      }
    });
    return report;
  }

  const auto accepted = accepted_combinations(p);
  if (accepted.empty()) {
    report.failures.push_back(
        {"consistency", "no typable argument combination found"});
    return report;
  }

  const std::size_t clients = 3;
  for (int trial = 0; trial < trials; ++trial) {
    SampledArgs sampled;
    sample_args(accepted, clients, rng, sampled);
    const TensorType result_type = p.typing(sampled.types);
    bool any_federated = false;
    for (const auto &t : sampled.types) any_federated |= t.is_federated();
    if (!any_federated) continue;

    std::vector<TensorValue> outputs;
    for (std::size_t c = 0; c < clients; ++c) {
      outputs.push_back(p.local_impl(args_at_client(sampled, c), c));
    }

    // Client-identity independence: recompute client 0's output under a
    // different claimed index.
    const TensorValue relabeled = p.local_impl(args_at_client(sampled, 0), 1);
    if (!relabeled.same_bits(outputs[0])) {
      report.failures.push_back(
          {"identity-independence",
           "local output depends on the client index (trial " +
               std::to_string(trial) + ")"});
      continue;
    }

    // Locality perturbation: changing client 2's federated data must leave
    // client 0's output bit-identical.
    {
      SampledArgs perturbed = sampled;
      bool changed = false;
      for (auto &v : perturbed.values) {
        if (v.federated && v.locals[2].numel() > 0) {
          std::vector<double> data = v.locals[2].data();
          data[0] += 1.0;
          v.locals[2] = TensorValue(v.locals[2].shape(), std::move(data));
          changed = true;
        }
      }
      if (changed) {
        const TensorValue replay = p.local_impl(args_at_client(perturbed, 0), 0);
        if (!replay.same_bits(outputs[0])) {
          report.failures.push_back(
              {"locality", "client 0 output changed when client 2 data "
                           "changed (trial " +
                               std::to_string(trial) + ")"});
          continue;
        }
      }
    }

    // Virtual-global consistency against the supplied ordinary
    // interpretation, at 1e-10.
    if (result_type.is_federated()) {
      try {
        Federation fed({"a", "b", "c"});
        const FedType &rf = result_type.as_federated();
        FederatedValue fed_out(fed, rf.record_axis, rf.nonrecord, outputs);
        std::vector<TensorValue> global_args;
        for (std::size_t i = 0; i < sampled.values.size(); ++i) {
          const auto &v = sampled.values[i];
          if (!v.federated) {
            global_args.push_back(v.shared);
            continue;
          }
          const FedType &f = sampled.types[i].as_federated();
          std::vector<TensorValue> locals = v.locals;
          FederatedValue fv(fed, f.record_axis, f.nonrecord, std::move(locals));
          global_args.push_back(virtual_global(fv));
        }
        const TensorValue expected = p.ordinary_impl(global_args);
        if (!nearly_equal(virtual_global(fed_out), expected, 1e-10)) {
          report.failures.push_back(
              {"consistency",
               "virtual global of local outputs differs from the ordinary "
               "interpretation (trial " +
                   std::to_string(trial) + ")"});
        }
      } catch (const Error &err) {
        report.failures.push_back(
            {"consistency", std::string("evaluation failed: ") + err.what()});
      }
    }
  }
  return report;
}

} // namespace fedtensor
