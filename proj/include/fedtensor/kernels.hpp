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

#ifndef FEDTENSOR_KERNELS_HPP
#define FEDTENSOR_KERNELS_HPP

#include "fedtensor/tensor.hpp"

namespace fedtensor {
namespace kernels {

// Dense tensor kernels. Every kernel ships in two variants: the default
// entry point parallelizes independent output elements with OpenMP, and a
// *_serial reference implementation is kept for testing and benchmarking.
// Both variants compute each output element with the same operation order,
// so results are bit-identical regardless of thread count. Reductions and
// contractions keep a serial inner loop per output element for the same
// reason.

using UnaryFn = double (*)(double);
using BinaryFn = double (*)(double, double);

enum class ReduceKind { Sum, Min, Max };

/// Identity element of the reduction: 0, +inf, -inf.
double reduce_identity(ReduceKind kind);

double reduce_combine(ReduceKind kind, double acc, double v);

TensorValue map_unary(const TensorValue &t, UnaryFn f);
TensorValue map_unary_serial(const TensorValue &t, UnaryFn f);

/// Element-wise binary map with two-sided broadcast (left-pad with 1s).
TensorValue map_binary(const TensorValue &a, const TensorValue &b, BinaryFn f);
TensorValue map_binary_serial(const TensorValue &a, const TensorValue &b,
                              BinaryFn f);

/// Materialize the broadcast of `t` to `target`. Requires
/// broadcastable_to(t.shape(), target).
TensorValue broadcast_to(const TensorValue &t, const Shape &target);
TensorValue broadcast_to_serial(const TensorValue &t, const Shape &target);

/// Reduce the given 1-based axis. An extent-0 axis reduces to the identity.
TensorValue reduce_axis(const TensorValue &t, int axis, ReduceKind kind);
TensorValue reduce_axis_serial(const TensorValue &t, int axis,
                               ReduceKind kind);

TensorValue permute(const TensorValue &t, const Permutation &tau);
TensorValue permute_serial(const TensorValue &t, const Permutation &tau);

/// Ordinary matrix product of an (m,k) by a (k,n) matrix.
TensorValue matmul(const TensorValue &a, const TensorValue &b);
TensorValue matmul_serial(const TensorValue &a, const TensorValue &b);

/// Concatenate along a 1-based axis. All parts must agree on every other
/// extent.
TensorValue concat_axis(const std::vector<const TensorValue *> &parts,
                        int axis);

} // namespace kernels
} // namespace fedtensor

#endif // FEDTENSOR_KERNELS_HPP
