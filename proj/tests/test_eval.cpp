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

#include <cmath>

#include "fedtensor/eval.hpp"

using namespace fedtensor;
namespace fo = fedtensor::ops;

namespace {

FederatedValue fed_vec(const Federation &fed,
                       std::vector<std::vector<double>> locals) {
  std::vector<TensorValue> tensors;
  for (auto &l : locals) {
    const auto n = static_cast<std::int64_t>(l.size());
    tensors.emplace_back(Shape({n}), std::move(l));
  }
  return FederatedValue(fed, 1, Shape(), std::move(tensors));
}

} // namespace

TEST_CASE("per-client elementwise evaluation") {
  Federation fed({"c1", "c2"});
  Environment env;
  env.bind("x", Value(fed_vec(fed, {{0.0}, {std::log(2.0)}})));

  const Value v = eval_distributed(env, fo::exp(fo::var("x")));
  REQUIRE(v.is_federated());
  CHECK(v.federated().local(0).at_linear(0) == doctest::Approx(1.0));
  CHECK(v.federated().local(1).at_linear(0) == doctest::Approx(2.0));
}

TEST_CASE("record-axis sum merges client aggregates") {
  Federation fed({"c1", "c2"});
  Environment env;
  env.bind("x", Value(fed_vec(fed, {{1.0, 2.0}, {3.0}})));

  const Value v = eval_distributed(env, fo::sum(1, fo::var("x")));
  REQUIRE(v.is_shared());
  CHECK(v.shared().shape() == Shape());
  CHECK(v.shared().at_linear(0) == 6.0);

  const CentralizedResult c = eval_centralized(env, fo::sum(1, fo::var("x")));
  CHECK(c.value.at_linear(0) == 6.0);
  CHECK(c.type == TensorType::shared(Shape()));
}

TEST_CASE("federated-federated product sums local products") {
  Federation fed({"c1", "c2"});
  Environment env;
  env.bind("x", Value(FederatedValue(fed, 2, Shape({1}),
                                     {TensorValue(Shape({1, 2}), {1, 2}),
                                      TensorValue(Shape({1, 1}), {5})})));
  env.bind("z", Value(FederatedValue(fed, 1, Shape({1}),
                                     {TensorValue(Shape({2, 1}), {3, 4}),
                                      TensorValue(Shape({1, 1}), {6})})));

  const Expr e = fo::matmul_fed_fed(fo::var("x"), fo::var("z"));
  const Value v = eval_distributed(env, e);
  REQUIRE(v.is_shared());
  CHECK(v.shared().shape() == Shape({1, 1}));
  CHECK(v.shared().at_linear(0) == 41.0);

  // centralized: vglob(x) (1x3) times vglob(z) (3x1)
  CHECK(eval_centralized(env, e).value.at_linear(0) == 41.0);
  CHECK(check_consistency(env, e, 1e-12).pass);
}

TEST_CASE("record count mismatch in fedfed product raises") {
  Federation fed({"c1", "c2"});
  Environment env;
  env.bind("x", Value(FederatedValue(fed, 2, Shape({1}),
                                     {TensorValue(Shape({1, 2}), {1, 2}),
                                      TensorValue(Shape({1, 1}), {5})})));
  env.bind("z", Value(FederatedValue(fed, 1, Shape({1}),
                                     {TensorValue(Shape({1, 1}), {3}),
                                      TensorValue(Shape({2, 1}), {6, 7})})));
  CHECK_THROWS_WITH_AS(
      eval_distributed(env, fo::matmul_fed_fed(fo::var("x"), fo::var("z"))),
      doctest::Contains("c1"), EvalError);
}

TEST_CASE("federated elementwise requires equal local shapes") {
  Federation fed({"c1", "c2"});
  Environment env;
  env.bind("x", Value(fed_vec(fed, {{1, 2}, {3}})));
  env.bind("z", Value(fed_vec(fed, {{1}, {3, 4}})));
  CHECK_THROWS_WITH_AS(eval_distributed(env, fo::add(fo::var("x"), fo::var("z"))),
                       doctest::Contains("c1"), EvalError);
}

TEST_CASE("local broadcast of shared operands") {
  Federation fed({"c1", "c2"});
  Environment env;
  env.bind("x", Value(FederatedValue(fed, 1, Shape({3}),
                                     {TensorValue(Shape({2, 3}), {1, 2, 3, 4, 5, 6}),
                                      TensorValue(Shape({0, 3}), {})})));
  env.bind("s", Value(TensorValue(Shape({3}), {10, 20, 30})));

  const Expr e = fo::mul(fo::var("x"), fo::var("s"));
  const Value v = eval_distributed(env, e);
  REQUIRE(v.is_federated());
  CHECK(v.federated().local(0).data() ==
        std::vector<double>{10, 40, 90, 40, 100, 180});
  CHECK(v.federated().local(1).numel() == 0);
  CHECK(check_consistency(env, e, 1e-12).pass);
}

TEST_CASE("aggregation over an empty client returns the identity") {
  Federation fed({"empty", "full"});
  Environment env;
  env.bind("x", Value(fed_vec(fed, {{}, {4.0, -2.0}})));

  CHECK(eval_distributed(env, fo::sum(1, fo::var("x"))).shared().at_linear(0) ==
        2.0);
  CHECK(eval_distributed(env, fo::min(1, fo::var("x"))).shared().at_linear(0) ==
        -2.0);
  CHECK(eval_distributed(env, fo::max(1, fo::var("x"))).shared().at_linear(0) ==
        4.0);

  // all clients empty: the aggregation identity itself
  Environment none;
  none.bind("x", Value(fed_vec(fed, {{}, {}})));
  CHECK(eval_distributed(none, fo::min(1, fo::var("x"))).shared().at_linear(0) ==
        std::numeric_limits<double>::infinity());
  CHECK(eval_distributed(none, fo::sum(1, fo::var("x"))).shared().at_linear(0) ==
        0.0);
}

TEST_CASE("permutation of a federated value moves the record axis") {
  Federation fed({"c1", "c2"});
  Environment env;
  env.bind("x", Value(FederatedValue(fed, 1, Shape({2}),
                                     {TensorValue(Shape({2, 2}), {1, 2, 3, 4}),
                                      TensorValue(Shape({1, 2}), {5, 6})})));

  const Expr e = fo::transpose2(fo::var("x"));
  const Value v = eval_distributed(env, e);
  REQUIRE(v.is_federated());
  CHECK(v.federated().record_axis() == 2);
  CHECK(v.federated().local(0).shape() == Shape({2, 2}));
  CHECK(v.federated().local(1).shape() == Shape({2, 1}));

  // centralized tau(vglob X) equals vglob of the distributed tau(X)
  const ConsistencyReport report = check_consistency(env, e, 1e-12);
  CHECK(report.pass);
  CHECK(report.max_abs_deviation == 0.0);
}

TEST_CASE("matmul fed-sh and sh-fed act per client") {
  Federation fed({"a", "b"});
  Environment env;
  env.bind("x", Value(FederatedValue(fed, 1, Shape({2}),
                                     {TensorValue(Shape({1, 2}), {1, 2}),
                                      TensorValue(Shape({2, 2}), {3, 4, 5, 6})})));
  env.bind("w", Value(TensorValue(Shape({2, 1}), {10, 100})));

  const Value v =
      eval_distributed(env, fo::matmul_fed_sh(fo::var("x"), fo::var("w")));
  REQUIRE(v.is_federated());
  CHECK(v.federated().local(0).data() == std::vector<double>{210});
  CHECK(v.federated().local(1).data() == std::vector<double>{430, 650});

  env.bind("y", Value(FederatedValue(fed, 2, Shape({2}),
                                     {TensorValue(Shape({2, 1}), {1, 2}),
                                      TensorValue(Shape({2, 2}), {3, 4, 5, 6})})));
  env.bind("m", Value(TensorValue(Shape({1, 2}), {1, 1})));
  const Value u =
      eval_distributed(env, fo::matmul_sh_fed(fo::var("m"), fo::var("y")));
  REQUIRE(u.is_federated());
  CHECK(u.federated().record_axis() == 2);
  CHECK(u.federated().local(0).data() == std::vector<double>{3});
  CHECK(u.federated().local(1).data() == std::vector<double>{8, 10});

  CHECK(check_consistency(env, fo::matmul_sh_fed(fo::var("m"), fo::var("y")),
                          1e-12)
            .pass);
}

TEST_CASE("shared-only expressions deviate by exactly zero") {
  Environment env;
  env.bind("a", Value(TensorValue(Shape({2}), {1.5, -0.25})));
  const Expr e = fo::mul(fo::exp(fo::var("a")), fo::lit(2.0));
  const ConsistencyReport report = check_consistency(env, e, 0.0);
  CHECK(report.pass);
  CHECK(report.max_abs_deviation == 0.0);
}

TEST_CASE("evaluation is deterministic across runs") {
  Federation fed({"c1", "c2", "c3"});
  Environment env;
  env.bind("x", Value(fed_vec(fed, {{0.1, 0.2, 0.3}, {}, {0.7, 1.9}})));
  const Expr e = fo::sum(1, fo::sigmoid(fo::var("x")));
  const Value v1 = eval_distributed(env, e);
  const Value v2 = eval_distributed(env, e);
  CHECK(v1.shared().same_bits(v2.shared()));
}

TEST_CASE("client-locality: other clients' outputs are bit-identical under "
          "perturbation") {
  Federation fed({"c1", "c2", "c3"});
  Environment env;
  env.bind("x", Value(fed_vec(fed, {{0.5, -1.0}, {2.0}, {0.25, 0.75, 1.0}})));
  env.bind("s", Value(TensorValue::scalar(3.0)));

  const Expr e = fo::mul(fo::sigmoid(fo::var("x")), fo::var("s"));
  const Value before = eval_distributed(env, e);

  Environment perturbed;
  FederatedValue x2 = env.lookup("x").federated().with_local(
      1, TensorValue(Shape({1}), {-9.0}));
  perturbed.bind("x", Value(std::move(x2)));
  perturbed.bind("s", Value(TensorValue::scalar(3.0)));
  const Value after = eval_distributed(perturbed, e);

  CHECK(before.federated().local(0).same_bits(after.federated().local(0)));
  CHECK(before.federated().local(2).same_bits(after.federated().local(2)));
  CHECK_FALSE(before.federated().local(1).same_bits(after.federated().local(1)));
}

TEST_CASE("NaN mismatches are flagged") {
  // log of a negative number is NaN in both semantics at the same
  // positions, so this passes.
  Federation fed({"c"});
  Environment env;
  env.bind("x", Value(fed_vec(fed, {{-1.0, 4.0}})));
  const ConsistencyReport ok =
      check_consistency(env, fo::log(fo::var("x")), 1e-12);
  CHECK(ok.pass);
  CHECK_FALSE(ok.nan_mismatch);
}

TEST_CASE("extension primitives evaluate in both semantics") {
  Federation fed({"c1", "c2"});
  Environment env;
  env.bind("x", Value(FederatedValue(
                    fed, 1, Shape({3}),
                    {TensorValue(Shape({2, 3}), {1, 2, 10, 3, 4, 20}),
                     TensorValue(Shape({1, 3}), {5, 6, 30})})));

  const Expr feats = fo::ext("proj_features", {fo::var("x")});
  const Value v = eval_distributed(env, feats);
  REQUIRE(v.is_federated());
  CHECK(v.federated().local(0).data() == std::vector<double>{1, 2, 3, 4});
  CHECK(v.federated().local(1).data() == std::vector<double>{5, 6});
  CHECK(check_consistency(env, feats, 1e-12).pass);

  const Expr resp = fo::ext("proj_response", {fo::var("x")});
  CHECK(eval_distributed(env, resp).federated().local(0).data() ==
        std::vector<double>{10, 20});
  CHECK(check_consistency(env, resp, 1e-12).pass);

  const Expr scaled =
      fo::ext("per_record_scale", {resp, feats});
  const Value sv = eval_distributed(env, scaled);
  CHECK(sv.federated().local(0).data() ==
        std::vector<double>{10, 20, 60, 80});
  CHECK(check_consistency(env, scaled, 1e-12).pass);

  const Expr outer = fo::ext("per_record_outer", {feats});
  CHECK(eval_distributed(env, outer).federated().local(1).data() ==
        std::vector<double>{25, 30, 30, 36});
  CHECK(check_consistency(env, outer, 1e-12).pass);
}

TEST_CASE("environment validation") {
  Federation f1({"a"});
  Federation f2({"b"});
  Environment env;
  env.bind("x", Value(fed_vec(f1, {{1.0}})));
  env.bind("y", Value(fed_vec(f2, {{2.0}})));
  CHECK_THROWS_AS(env.federation(), EvalError);
}
