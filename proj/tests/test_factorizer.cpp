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

#include "support/corpus.hpp"

using namespace fedtensor;
using namespace fedtensor::testsupport;
namespace fo = fedtensor::ops;

TEST_CASE("validation accepts the statistics corpus") {
  for (const auto &entry : statistics_corpus()) {
    CAPTURE(entry.name);
    CHECK(validate_one_round(entry.program).empty());
  }
}

TEST_CASE("validation rejects non-client-local encoders") {
  OneRoundProgram p = make_sum_program();
  // an inner record-axis sum converts federated data to shared state
  p.components[0] = {"y1", AggComponent{fo::mul(fo::var("x"),
                                                fo::sum(1, fo::var("x"))),
                                        AggSchema::Sum}};
  const auto violations = validate_one_round(p);
  REQUIRE_FALSE(violations.empty());
  CHECK(violations[0].component == 0);
  CHECK(violations[0].message.find("not client-local") != std::string::npos);
}

TEST_CASE("validation rejects decoders touching the federated input") {
  OneRoundProgram p = make_sum_program();
  p.decoder = fo::add(fo::var("y1"), fo::var("x"));
  const auto violations = validate_one_round(p);
  REQUIRE_FALSE(violations.empty());
  CHECK(violations[0].component == -1);
  CHECK(violations[0].message.find("shared-only") != std::string::npos);
}

TEST_CASE("validation rejects malformed matrix components") {
  OneRoundProgram p = make_xtx_program(3);
  // both factors record-axis 1: not the Fed_2 x Fed_1 form
  p.components[0] = {"y1", MatComponent{fo::var("x"), fo::var("x")}};
  const auto violations = validate_one_round(p);
  REQUIRE_FALSE(violations.empty());
  CHECK(violations[0].message.find("Fed_2((m))") != std::string::npos);
}

TEST_CASE("extracted plans carry the constructive state layout") {
  SUBCASE("scalar sum") {
    const SharedStatePlan plan = extract_plan(make_sum_program());
    REQUIRE(plan.components.size() == 1);
    CHECK(plan.components[0].state_shape == Shape());
    CHECK(plan.components[0].merge == MergeTag::Sum);
    CHECK(plan.components[0].identity_state().at_linear(0) == 0.0);
    CHECK(plan.state_elements() == 1);
  }
  SUBCASE("XtX block") {
    const SharedStatePlan plan = extract_plan(make_xtx_program(4));
    REQUIRE(plan.components.size() == 1);
    CHECK(plan.components[0].state_shape == Shape({4, 4}));
    CHECK(plan.components[0].merge == MergeTag::MatrixAdd);
  }
  SUBCASE("mean has a two-scalar state") {
    const SharedStatePlan plan = extract_plan(make_mean_program());
    REQUIRE(plan.components.size() == 2);
    CHECK(plan.components[0].state_shape == Shape());
    CHECK(plan.components[1].state_shape == Shape());
    CHECK(plan.state_elements() == 2);
  }
  SUBCASE("min merges with a +inf identity") {
    const SharedStatePlan plan = extract_plan(make_min_program());
    CHECK(plan.components[0].merge == MergeTag::Min);
    CHECK(plan.components[0].identity_state().at_linear(0) ==
          std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("run_plan on the worked examples") {
  SUBCASE("mean of {1,2} and {3} is 2") {
    Federation fed({"c1", "c2"});
    FederatedValue x(fed, 1, Shape(),
                     {TensorValue(Shape({2}), {1, 2}),
                      TensorValue(Shape({1}), {3})});
    const SharedStatePlan plan = extract_plan(make_mean_program());
    CHECK(run_plan(plan, x).at_linear(0) == 2.0);
  }
  SUBCASE("single-client federation folds once") {
    Federation fed({"solo"});
    FederatedValue x(fed, 1, Shape(), {TensorValue(Shape({3}), {5, 6, 7})});
    const SharedStatePlan plan = extract_plan(make_sum_program());
    CHECK(run_plan(plan, x).at_linear(0) == 18.0);
  }
  SUBCASE("XtX equals the dense product on the concatenated matrix") {
    std::mt19937_64 rng(42);
    const FedType type{1, Shape({3})};
    const FederatedValue x = random_federated(type, 4, rng);
    const SharedStatePlan plan = extract_plan(make_xtx_program(3));
    const TensorValue got = run_plan(plan, x);

    const TensorValue global = virtual_global(x);
    const TensorValue expected = kernels::matmul_serial(
        kernels::permute_serial(global, Permutation({2, 1})), global);
    CHECK(nearly_equal(got, expected, 1e-10));
  }
}

TEST_CASE("factorization identity on the corpus") {
  std::mt19937_64 rng(7);
  for (const auto &entry : statistics_corpus()) {
    CAPTURE(entry.name);
    const SharedStatePlan plan = extract_plan(entry.program);
    for (int trial = 0; trial < 10; ++trial) {
      const FederatedValue x =
          random_federated(entry.program.input_type, 1 + trial % 5, rng);
      const TensorValue via_plan = run_plan(plan, x);
      const TensorValue direct = run_direct(entry.program, x);
      const TensorValue central = run_centralized(entry.program, x);
      CHECK(nearly_equal(via_plan, direct, entry.exact ? 0.0 : 1e-10));
      CHECK(nearly_equal(via_plan, central, entry.exact ? 0.0 : 1e-10));
    }
  }
}

TEST_CASE("realization round-trip induces the same computation") {
  std::mt19937_64 rng(99);
  for (const auto &entry : statistics_corpus()) {
    CAPTURE(entry.name);
    const SharedStatePlan plan = extract_plan(entry.program);
    const OneRoundProgram realized = realize_program(plan);
    CHECK(validate_one_round(realized).empty());
    for (int trial = 0; trial < 5; ++trial) {
      const FederatedValue x =
          random_federated(entry.program.input_type, 3, rng);
      CHECK(run_direct(realized, x)
                .same_bits(run_direct(entry.program, x)));
      CHECK(run_plan(extract_plan(realized), x).same_bits(run_plan(plan, x)));
    }
  }
}

TEST_CASE("merge monoid laws") {
  std::mt19937_64 rng(123);
  const Shape shape({2, 2});
  for (const MergeTag tag : {MergeTag::Sum, MergeTag::Min, MergeTag::Max,
                             MergeTag::MatrixAdd}) {
    CAPTURE(to_string(tag));
    const bool exact = tag == MergeTag::Min || tag == MergeTag::Max;
    for (int trial = 0; trial < 50; ++trial) {
      const TensorValue a = random_tensor(shape, rng);
      const TensorValue b = random_tensor(shape, rng);
      const TensorValue c = random_tensor(shape, rng);
      const TensorValue ab_c = merge_combine(tag, merge_combine(tag, a, b), c);
      const TensorValue a_bc = merge_combine(tag, a, merge_combine(tag, b, c));
      CHECK(nearly_equal(ab_c, a_bc, exact ? 0.0 : 1e-12));
      CHECK(nearly_equal(merge_combine(tag, a, b), merge_combine(tag, b, a),
                         exact ? 0.0 : 1e-12));
      const TensorValue identity =
          TensorValue::full(shape, merge_identity(tag));
      CHECK(merge_combine(tag, a, identity).same_bits(a));
    }
  }
}

TEST_CASE("client permutation invariance of plan outputs") {
  std::mt19937_64 rng(31);
  for (const auto &entry : statistics_corpus()) {
    CAPTURE(entry.name);
    const SharedStatePlan plan = extract_plan(entry.program);
    const FederatedValue x = random_federated(entry.program.input_type, 4, rng);

    // reverse the federation order
    std::vector<std::string> ids(x.federation().clients().rbegin(),
                                 x.federation().clients().rend());
    std::vector<TensorValue> locals(x.locals().rbegin(), x.locals().rend());
    const FederatedValue reversed(Federation(ids), x.record_axis(),
                                  x.nonrecord_shape(), locals);

    const TensorValue a = run_plan(plan, x);
    const TensorValue b = run_plan(plan, reversed);
    CHECK(nearly_equal(a, b, entry.exact ? 0.0 : 1e-10));
  }
}

TEST_CASE("state size never depends on records or clients") {
  const SharedStatePlan plan = extract_plan(make_mean_program());
  std::mt19937_64 rng(5);
  for (const std::size_t clients : {std::size_t{1}, std::size_t{5}}) {
    for (const std::int64_t n : {std::int64_t{1}, std::int64_t{50}}) {
      const FederatedValue x = random_federated(plan.input_type, clients, rng,
                                                n, n, false);
      for (const EncodedState &msg : encode_all(plan, x)) {
        std::int64_t elements = 0;
        for (const auto &t : msg) elements += t.numel();
        CHECK(elements == plan.state_elements());
      }
    }
  }
}

TEST_CASE("iterative programs: fixed point and tracing") {
  // a round whose decoder ignores the aggregate and returns theta unchanged
  IterativeProgram prog;
  prog.input_name = "x";
  prog.input_type = FedType{1, Shape()};
  prog.state_name = "theta";
  prog.initial_state = TensorValue(Shape({2}), {4.0, -1.0});
  prog.rounds = 3;
  prog.round_at = [](int) {
    Round r;
    r.components.push_back({"g", AggComponent{fo::var("x"), AggSchema::Sum}});
    r.decoder = fo::var("theta");
    return r;
  };
  CHECK(validate_iterative(prog).empty());

  std::mt19937_64 rng(77);
  const FederatedValue x = random_federated(prog.input_type, 3, rng);
  const IterativeRunResult result = run_iterative(prog, x);
  CHECK(result.final_state.same_bits(prog.initial_state));
  REQUIRE(result.trace.size() == 3);
  CHECK(result.trace[1].state_before.same_bits(prog.initial_state));
  REQUIRE(result.trace[0].merged_state.size() == 1);

  // T=1 reduces to a plan run with theta bound as a shared input
  prog.rounds = 1;
  prog.round_at = [](int) {
    Round r;
    r.components.push_back({"g", AggComponent{fo::var("x"), AggSchema::Sum}});
    r.decoder = fo::mul(fo::var("g"), fo::sum(1, fo::var("theta")));
    return r;
  };
  const IterativeRunResult one = run_iterative(prog, x);
  OneRoundProgram as_one;
  as_one.input_name = "x";
  as_one.input_type = prog.input_type;
  as_one.shared_params = {{"theta", Shape({2})}};
  as_one.components.push_back({"g", AggComponent{fo::var("x"), AggSchema::Sum}});
  as_one.decoder = fo::mul(fo::var("g"), fo::sum(1, fo::var("theta")));
  Environment shared_env;
  shared_env.bind("theta", Value(prog.initial_state));
  CHECK(one.final_state.same_bits(
      run_plan(extract_plan(as_one), x, shared_env)));
}

TEST_CASE("invalid iterative programs are rejected at run time") {
  IterativeProgram prog;
  prog.input_name = "x";
  prog.input_type = FedType{1, Shape()};
  prog.initial_state = TensorValue::scalar(0.0);
  prog.rounds = 0;
  std::mt19937_64 rng(1);
  const FederatedValue x = random_federated(prog.input_type, 1, rng);
  CHECK_THROWS_AS(run_iterative(prog, x), EvalError);
}
