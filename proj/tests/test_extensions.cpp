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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedtensor/extensions.hpp"
#include "support/corpus.hpp"

using namespace fedtensor;
using namespace fedtensor::testsupport;
namespace fo = fedtensor::ops;

namespace {

ExtPrimitive shared_double() {
  ExtPrimitive p;
  p.name = "test_double";
  p.kind = ExtPrimitive::Kind::SharedOnly;
  p.arity = 1;
  p.typing = [](const std::vector<TensorType> &args) -> TensorType {
    if (args[0].is_federated()) {
      throw TypeCheckError(TypeErrorKind::ExtensionMisuse, {},
                           "test_double is shared-only");
    }
    return args[0];
  };
  p.ordinary_impl = [](const std::vector<TensorValue> &args) {
    return kernels::map_unary(args[0], +[](double v) { return 2.0 * v; });
  };
  return p;
}

} // namespace

TEST_CASE("registration guards") {
  ExtensionRegistry reg;
  reg.register_primitive(shared_double());
  CHECK(reg.contains("test_double"));
  CHECK_THROWS_AS(reg.register_primitive(shared_double()), ValueError);

  SUBCASE("a fed-to-shared leak is rejected") {
    ExtPrimitive leak;
    leak.name = "leak";
    leak.kind = ExtPrimitive::Kind::ClientLocal;
    leak.arity = 1;
    leak.typing = [](const std::vector<TensorType> &args) -> TensorType {
      if (args[0].is_federated()) {
        // exposes federated contents as a shared scalar
        return TensorType::shared(Shape());
      }
      return args[0];
    };
    leak.local_impl = [](const std::vector<TensorValue> &args, std::size_t) {
      return args[0];
    };
    leak.ordinary_impl = [](const std::vector<TensorValue> &args) {
      return args[0];
    };
    CHECK_THROWS_WITH_AS(reg.register_primitive(leak),
                         doctest::Contains("shared output"), ValueError);
  }

  SUBCASE("a shared-only rule accepting federated inputs is rejected") {
    ExtPrimitive bad;
    bad.name = "bad_shared";
    bad.kind = ExtPrimitive::Kind::SharedOnly;
    bad.arity = 1;
    bad.typing = [](const std::vector<TensorType> &args) { return args[0]; };
    bad.ordinary_impl = [](const std::vector<TensorValue> &args) {
      return args[0];
    };
    CHECK_THROWS_WITH_AS(reg.register_primitive(bad),
                         doctest::Contains("federated argument"), ValueError);
  }
}

TEST_CASE("registered primitives reach the typechecker and both evaluators") {
  ExtensionRegistry reg;
  reg.register_primitive(shared_double());

  Context ctx{{"a", TensorType::shared(Shape({2}))}};
  CHECK(typecheck(ctx, fo::ext("test_double", {fo::var("a")}), reg) ==
        TensorType::shared(Shape({2})));

  Environment env;
  env.bind("a", Value(TensorValue(Shape({2}), {1.0, -3.0})));
  const Expr e = fo::ext("test_double", {fo::var("a")});
  CHECK(eval_distributed(env, e, reg).shared().data() ==
        std::vector<double>{2.0, -6.0});
  CHECK(eval_centralized(env, e, reg).value.data() ==
        std::vector<double>{2.0, -6.0});
  CHECK(check_consistency(env, e, 0.0, reg).pass);
}

TEST_CASE("built-in extensions pass their audits") {
  for (const std::string &name : builtin_registry().names()) {
    CAPTURE(name);
    const AuditReport report =
        audit_extension(builtin_registry(), name, 30, 1234);
    for (const auto &f : report.failures) {
      CAPTURE(f.check);
      CAPTURE(f.detail);
    }
    CHECK(report.passed());
  }
}

TEST_CASE("the audit flags a client-identity-dependent primitive") {
  ExtensionRegistry reg;
  ExtPrimitive biased;
  biased.name = "biased_scale";
  biased.kind = ExtPrimitive::Kind::ClientLocal;
  biased.arity = 1;
  biased.typing = [](const std::vector<TensorType> &args) -> TensorType {
    if (!args[0].is_federated()) {
      throw TypeCheckError(TypeErrorKind::ExtensionMisuse, {},
                           "needs a federated argument");
    }
    return args[0];
  };
  biased.local_impl = [](const std::vector<TensorValue> &args,
                         std::size_t client_index) {
    // deliberately depends on the client position
    return kernels::map_binary(
        args[0], TensorValue::scalar(static_cast<double>(client_index)),
        +[](double a, double b) { return a + b; });
  };
  biased.ordinary_impl = [](const std::vector<TensorValue> &args) {
    return args[0];
  };
  reg.register_primitive(biased);

  const AuditReport report = audit_extension(reg, "biased_scale", 20, 7);
  CHECK_FALSE(report.passed());
  bool found = false;
  for (const auto &f : report.failures) {
    found |= f.check == "identity-independence";
  }
  CHECK(found);
}

TEST_CASE("the audit flags an inconsistent ordinary interpretation") {
  ExtensionRegistry reg;
  ExtPrimitive wrong;
  wrong.name = "wrong_ord";
  wrong.kind = ExtPrimitive::Kind::ClientLocal;
  wrong.arity = 1;
  wrong.typing = [](const std::vector<TensorType> &args) -> TensorType {
    if (!args[0].is_federated()) {
      throw TypeCheckError(TypeErrorKind::ExtensionMisuse, {},
                           "needs a federated argument");
    }
    return args[0];
  };
  wrong.local_impl = [](const std::vector<TensorValue> &args, std::size_t) {
    return kernels::map_unary(args[0], +[](double v) { return v + 1.0; });
  };
  wrong.ordinary_impl = [](const std::vector<TensorValue> &args) {
    return kernels::map_unary(args[0], +[](double v) { return v + 2.0; });
  };
  reg.register_primitive(wrong);

  const AuditReport report = audit_extension(reg, "wrong_ord", 20, 7);
  CHECK_FALSE(report.passed());
  bool found = false;
  for (const auto &f : report.failures) found |= f.check == "consistency";
  CHECK(found);
}

TEST_CASE("factorizer invariants hold on programs using extensions") {
  // X^T y uses three extension primitives; its plan must agree with both
  // direct and centralized evaluation.
  std::mt19937_64 rng(55);
  const OneRoundProgram prog = make_xty_program(3);
  CHECK(validate_one_round(prog).empty());
  const SharedStatePlan plan = extract_plan(prog);
  for (int trial = 0; trial < 20; ++trial) {
    const FederatedValue x = random_federated(prog.input_type, 1 + trial % 4,
                                              rng);
    const TensorValue via_plan = run_plan(plan, x);
    CHECK(nearly_equal(via_plan, run_direct(prog, x), 1e-10));
    CHECK(nearly_equal(via_plan, run_centralized(prog, x), 1e-10));
  }
}
