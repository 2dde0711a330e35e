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
#include <random>

#include "fedtensor/federation.hpp"
#include "fedtensor/kernels.hpp"

using namespace fedtensor;

namespace {

TensorValue random_tensor(const Shape &shape, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> data(static_cast<std::size_t>(shape.numel()));
  for (auto &v : data) v = dist(rng);
  return TensorValue(shape, std::move(data));
}

} // namespace

TEST_CASE("shape basics") {
  Shape s({2, 3});
  CHECK(s.rank() == 2);
  CHECK(s.numel() == 6);
  CHECK(s.extent(1) == 2);
  CHECK(s.extent(2) == 3);
  CHECK(Shape::scalar().numel() == 1);
  CHECK(s.drop_axis(1) == Shape({3}));
  CHECK(s.insert_axis(3, 7) == Shape({2, 3, 7}));
  CHECK_THROWS_AS(Shape({-1}), ValueError);
}

TEST_CASE("broadcast shape follows the left-padded max rule") {
  CHECK(broadcast_shape(Shape({2, 1}), Shape({3})) == Shape({2, 3}));
  CHECK(broadcast_shape(Shape(), Shape({4, 2})) == Shape({4, 2}));
  CHECK_THROWS_WITH_AS(broadcast_shape(Shape({2, 3}), Shape({2, 4})),
                       doctest::Contains("axis 2"), ValueError);
  // commutative, idempotent on equal shapes
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> d(1, 4);
    Shape a({d(rng), 1}), b({d(rng) % 2 ? 1 : a.extent(1), d(rng)});
    if (broadcast_compatible(a, b)) {
      CHECK(broadcast_shape(a, b) == broadcast_shape(b, a));
    }
    CHECK(broadcast_shape(a, a) == a);
  }
}

TEST_CASE("broadcast_to replicates extent-1 axes") {
  TensorValue t(Shape({1}), {5.0});
  CHECK(kernels::broadcast_to(t, Shape({3})).data() ==
        std::vector<double>{5.0, 5.0, 5.0});

  TensorValue col(Shape({2, 1}), {1.0, 2.0});
  CHECK(kernels::broadcast_to(col, Shape({2, 3})).data() ==
        std::vector<double>{1, 1, 1, 2, 2, 2});

  TensorValue sc = TensorValue::scalar(7.0);
  CHECK(kernels::broadcast_to(sc, Shape({2, 2})).data() ==
        std::vector<double>{7, 7, 7, 7});

  CHECK_THROWS_AS(kernels::broadcast_to(col, Shape({3, 3})), ValueError);

  // broadcast_to(T, shape(T)) == T
  std::mt19937_64 rng(3);
  TensorValue r = random_tensor(Shape({3, 2, 2}), rng);
  CHECK(kernels::broadcast_to(r, r.shape()).same_bits(r));
}

TEST_CASE("permute matches the direct re-indexing rule") {
  TensorValue t(Shape({2, 2}), {1, 2, 3, 4});
  TensorValue tt = kernels::permute(t, Permutation({2, 1}));
  CHECK(tt.data() == std::vector<double>{1, 3, 2, 4});

  CHECK(kernels::permute(t, Permutation::identity(2)).same_bits(t));

  // oracle: element-by-element re-index for a (2,3,4) tensor and
  // tau mapping 1->3, 2->1, 3->2
  std::mt19937_64 rng(11);
  TensorValue x = random_tensor(Shape({2, 3, 4}), rng);
  Permutation tau({3, 1, 2});
  TensorValue y = kernels::permute(x, tau);
  CHECK(y.shape() == tau.apply_to_shape(x.shape()));
  CHECK(y.shape() == Shape({3, 4, 2}));
  std::vector<std::int64_t> idx(3), src(3);
  for (std::int64_t i = 0; i < y.numel(); ++i) {
    unflatten_index(i, y.shape(), idx);
    // y[i1,i2,i3] = x[i_{tau(1)}, i_{tau(2)}, i_{tau(3)}]
    for (int j = 1; j <= 3; ++j) src[j - 1] = idx[tau.image(j) - 1];
    CHECK(y.at_linear(i) == x.at(src));
  }

  // permute then inverse-permute round-trips bit-exactly
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> rk(1, 4), ext(1, 4);
    const int k = rk(rng);
    std::vector<std::int64_t> dims;
    for (int j = 0; j < k; ++j) dims.push_back(ext(rng));
    TensorValue v = random_tensor(Shape(dims), rng);
    std::vector<int> images(static_cast<std::size_t>(k));
    std::iota(images.begin(), images.end(), 1);
    std::shuffle(images.begin(), images.end(), rng);
    Permutation p(images);
    CHECK(kernels::permute(kernels::permute(v, p), p.inverse()).same_bits(v));
  }
}

TEST_CASE("reduce_axis handles interior axes and empty extents") {
  TensorValue t(Shape({2, 3}), {1, 2, 3, 4, 5, 6});
  CHECK(kernels::reduce_axis(t, 1, kernels::ReduceKind::Sum).data() ==
        std::vector<double>{5, 7, 9});
  CHECK(kernels::reduce_axis(t, 2, kernels::ReduceKind::Sum).data() ==
        std::vector<double>{6, 15});
  CHECK(kernels::reduce_axis(t, 2, kernels::ReduceKind::Min).data() ==
        std::vector<double>{1, 4});
  CHECK(kernels::reduce_axis(t, 2, kernels::ReduceKind::Max).data() ==
        std::vector<double>{3, 6});

  TensorValue empty(Shape({0, 2}), {});
  TensorValue r = kernels::reduce_axis(empty, 1, kernels::ReduceKind::Min);
  CHECK(r.shape() == Shape({2}));
  CHECK(r.at_linear(0) == std::numeric_limits<double>::infinity());
  CHECK(kernels::reduce_axis(empty, 1, kernels::ReduceKind::Sum).at_linear(1) ==
        0.0);
}

TEST_CASE("matmul") {
  TensorValue a(Shape({1, 2}), {1, 2});
  TensorValue b(Shape({2, 1}), {3, 4});
  CHECK(kernels::matmul(a, b).data() == std::vector<double>{11});
  CHECK(kernels::matmul(b, a).data() == std::vector<double>{3, 6, 4, 8});
  CHECK_THROWS_AS(kernels::matmul(a, a), ValueError);
}

TEST_CASE("virtual_global concatenates along the record axis") {
  Federation fed({"c1", "c2"});
  SUBCASE("vectors, r=1") {
    FederatedValue x(fed, 1, Shape(),
                     {TensorValue(Shape({2}), {1, 2}),
                      TensorValue(Shape({1}), {3})});
    CHECK(virtual_global(x).data() == std::vector<double>{1, 2, 3});
    CHECK(x.total_records() == 3);
  }
  SUBCASE("matrices, r=2") {
    FederatedValue x(fed, 2, Shape({2}),
                     {TensorValue(Shape({2, 1}), {1, 3}),
                      TensorValue(Shape({2, 2}), {4, 5, 6, 7})});
    TensorValue g = virtual_global(x);
    CHECK(g.shape() == Shape({2, 3}));
    CHECK(g.data() == std::vector<double>{1, 4, 5, 3, 6, 7});
  }
  SUBCASE("single client is identity") {
    Federation solo({"only"});
    TensorValue local(Shape({3, 2}), {1, 2, 3, 4, 5, 6});
    FederatedValue x(solo, 1, Shape({2}), {local});
    CHECK(virtual_global(x).same_bits(local));
  }
  SUBCASE("empty clients are allowed") {
    FederatedValue x(fed, 1, Shape({2}),
                     {TensorValue(Shape({0, 2}), {}),
                      TensorValue(Shape({1, 2}), {8, 9})});
    CHECK(virtual_global(x).shape() == Shape({1, 2}));
    CHECK(x.record_count(0) == 0);
  }
  SUBCASE("shape mismatch rejected") {
    CHECK_THROWS_AS(FederatedValue(fed, 1, Shape({2}),
                                   {TensorValue(Shape({1, 3}), {1, 2, 3}),
                                    TensorValue(Shape({1, 2}), {4, 5})}),
                    ValueError);
  }
}

TEST_CASE("federation validation") {
  CHECK_THROWS_AS(Federation({}), ValueError);
  CHECK_THROWS_AS(Federation({"a", "a"}), ValueError);
  Federation fed({"b", "a"});
  CHECK(fed.index_of("a") == 1);
}

TEST_CASE("row-major flatten/unflatten round-trips") {
  Shape s({3, 1, 4});
  const auto strides = row_major_strides(s);
  std::vector<std::int64_t> idx;
  for (std::int64_t i = 0; i < s.numel(); ++i) {
    unflatten_index(i, s, idx);
    CHECK(flatten_index(idx, strides) == i);
  }
}

TEST_CASE("OpenMP kernels are bit-identical to the serial reference") {
  std::mt19937_64 rng(2026);
  const Shape big({64, 33, 5}); // above the parallel grain
  TensorValue a = random_tensor(big, rng);
  TensorValue b = random_tensor(Shape({33, 5}), rng);

  auto square = [](double v) { return v * v; };
  CHECK(kernels::map_unary(a, +[](double v) { return std::exp(v); })
            .same_bits(kernels::map_unary_serial(
                a, +[](double v) { return std::exp(v); })));
  (void)square;

  auto add = +[](double x, double y) { return x + y; };
  CHECK(kernels::map_binary(a, b, add).same_bits(
      kernels::map_binary_serial(a, b, add)));

  CHECK(kernels::broadcast_to(b, big).same_bits(
      kernels::broadcast_to_serial(b, big)));

  for (int axis = 1; axis <= 3; ++axis) {
    for (auto kind : {kernels::ReduceKind::Sum, kernels::ReduceKind::Min,
                      kernels::ReduceKind::Max}) {
      CHECK(kernels::reduce_axis(a, axis, kind)
                .same_bits(kernels::reduce_axis_serial(a, axis, kind)));
    }
  }

  Permutation tau({2, 3, 1});
  CHECK(kernels::permute(a, tau).same_bits(kernels::permute_serial(a, tau)));

  TensorValue m1 = random_tensor(Shape({40, 30}), rng);
  TensorValue m2 = random_tensor(Shape({30, 50}), rng);
  CHECK(kernels::matmul(m1, m2).same_bits(kernels::matmul_serial(m1, m2)));
}
