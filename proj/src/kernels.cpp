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

#include "fedtensor/kernels.hpp"

#include <algorithm>
#include <limits>

namespace fedtensor {
namespace kernels {

namespace {

// Below this element count the OpenMP variants run the loop inline; the
// fork/join overhead dwarfs the work for small tensors.
constexpr std::int64_t kParallelGrain = 1 << 12;

// Effective strides of `s` left-padded to `rank` axes: stride 0 on padded and
// extent-1 axes, so a flat output index maps straight to the source offset.
std::vector<std::int64_t> broadcast_strides(const Shape &s, int rank) {
  const auto strides = row_major_strides(s);
  std::vector<std::int64_t> out(static_cast<std::size_t>(rank), 0);
  const int offset = rank - s.rank();
  for (int i = 0; i < s.rank(); ++i) {
    out[static_cast<std::size_t>(offset + i)] =
        s.dims()[static_cast<std::size_t>(i)] == 1
            ? 0
            : strides[static_cast<std::size_t>(i)];
  }
  return out;
}

inline std::int64_t source_offset(std::int64_t linear,
                                  const std::vector<std::int64_t> &out_dims,
                                  const std::vector<std::int64_t> &strides) {
  std::int64_t off = 0;
  for (int i = static_cast<int>(out_dims.size()) - 1; i >= 0; --i) {
    const std::int64_t d = std::max<std::int64_t>(out_dims[static_cast<std::size_t>(i)], 1);
    off += (linear % d) * strides[static_cast<std::size_t>(i)];
    linear /= d;
  }
  return off;
}

struct ReduceDecomp {
  std::int64_t outer;
  std::int64_t mid;
  std::int64_t inner;
  Shape out_shape;
};

ReduceDecomp reduce_decomp(const Shape &s, int axis) {
  if (axis < 1 || axis > s.rank()) {
    throw ValueError("reduction axis " + std::to_string(axis) +
                     " out of range for shape " + s.str());
  }
  ReduceDecomp d{1, s.extent(axis), 1, s.drop_axis(axis)};
  for (int i = 1; i < axis; ++i) d.outer *= s.extent(i);
  for (int i = axis + 1; i <= s.rank(); ++i) d.inner *= s.extent(i);
  return d;
}

struct MatDims {
  std::int64_t m, k, n;
};

MatDims matmul_dims(const TensorValue &a, const TensorValue &b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ValueError("matmul expects rank-2 operands, got " +
                     a.shape().str() + " and " + b.shape().str());
  }
  if (a.shape().extent(2) != b.shape().extent(1)) {
    throw ValueError("matmul contraction mismatch: " + a.shape().str() +
                     " times " + b.shape().str());
  }
  return {a.shape().extent(1), a.shape().extent(2), b.shape().extent(2)};
}

} // namespace

double reduce_identity(ReduceKind kind) {
  switch (kind) {
  case ReduceKind::Sum: return 0.0;
  case ReduceKind::Min: return std::numeric_limits<double>::infinity();
  case ReduceKind::Max: return -std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double reduce_combine(ReduceKind kind, double acc, double v) {
  switch (kind) {
  case ReduceKind::Sum: return acc + v;
  case ReduceKind::Min: return v < acc ? v : acc;
  case ReduceKind::Max: return v > acc ? v : acc;
  }
  return acc;
}

TensorValue map_unary_serial(const TensorValue &t, UnaryFn f) {
  std::vector<double> out(t.data().size());
  const double *in = t.data().data();
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    out[static_cast<std::size_t>(i)] = f(in[i]);
  }
  return TensorValue(t.shape(), std::move(out));
}

TensorValue map_unary(const TensorValue &t, UnaryFn f) {
  const std::int64_t n = t.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  const double *in = t.data().data();
  double *o = out.data();
#pragma omp parallel for schedule(static) if (n >= kParallelGrain)
  for (std::int64_t i = 0; i < n; ++i) {
    o[i] = f(in[i]);
  }
  return TensorValue(t.shape(), std::move(out));
}

TensorValue map_binary_serial(const TensorValue &a, const TensorValue &b,
                              BinaryFn f) {
  const Shape u = broadcast_shape(a.shape(), b.shape());
  const auto sa = broadcast_strides(a.shape(), u.rank());
  const auto sb = broadcast_strides(b.shape(), u.rank());
  const std::int64_t n = u.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  const double *pa = a.data().data();
  const double *pb = b.data().data();
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        f(pa[source_offset(i, u.dims(), sa)], pb[source_offset(i, u.dims(), sb)]);
  }
  return TensorValue(u, std::move(out));
}

TensorValue map_binary(const TensorValue &a, const TensorValue &b, BinaryFn f) {
  const Shape u = broadcast_shape(a.shape(), b.shape());
  const std::int64_t n = u.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  const double *pa = a.data().data();
  const double *pb = b.data().data();
  double *o = out.data();
  if (a.shape() == b.shape()) {
#pragma omp parallel for schedule(static) if (n >= kParallelGrain)
    for (std::int64_t i = 0; i < n; ++i) {
      o[i] = f(pa[i], pb[i]);
    }
    return TensorValue(u, std::move(out));
  }
  const auto sa = broadcast_strides(a.shape(), u.rank());
  const auto sb = broadcast_strides(b.shape(), u.rank());
#pragma omp parallel for schedule(static) if (n >= kParallelGrain)
  for (std::int64_t i = 0; i < n; ++i) {
    o[i] = f(pa[source_offset(i, u.dims(), sa)],
             pb[source_offset(i, u.dims(), sb)]);
  }
  return TensorValue(u, std::move(out));
}

TensorValue broadcast_to_serial(const TensorValue &t, const Shape &target) {
  if (!broadcastable_to(t.shape(), target)) {
    throw ValueError("cannot broadcast " + t.shape().str() + " to " +
                     target.str());
  }
  const auto st = broadcast_strides(t.shape(), target.rank());
  const std::int64_t n = target.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  const double *p = t.data().data();
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = p[source_offset(i, target.dims(), st)];
  }
  return TensorValue(target, std::move(out));
}

TensorValue broadcast_to(const TensorValue &t, const Shape &target) {
  if (!broadcastable_to(t.shape(), target)) {
    throw ValueError("cannot broadcast " + t.shape().str() + " to " +
                     target.str());
  }
  const auto st = broadcast_strides(t.shape(), target.rank());
  const std::int64_t n = target.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  const double *p = t.data().data();
  double *o = out.data();
#pragma omp parallel for schedule(static) if (n >= kParallelGrain)
  for (std::int64_t i = 0; i < n; ++i) {
    o[i] = p[source_offset(i, target.dims(), st)];
  }
  return TensorValue(target, std::move(out));
}

TensorValue reduce_axis_serial(const TensorValue &t, int axis,
                               ReduceKind kind) {
  const ReduceDecomp d = reduce_decomp(t.shape(), axis);
  std::vector<double> out(static_cast<std::size_t>(d.outer * d.inner));
  const double *in = t.data().data();
  for (std::int64_t o = 0; o < d.outer; ++o) {
    for (std::int64_t i = 0; i < d.inner; ++i) {
      double acc = reduce_identity(kind);
      for (std::int64_t m = 0; m < d.mid; ++m) {
        acc = reduce_combine(kind, acc, in[(o * d.mid + m) * d.inner + i]);
      }
      out[static_cast<std::size_t>(o * d.inner + i)] = acc;
    }
  }
  return TensorValue(d.out_shape, std::move(out));
}

TensorValue reduce_axis(const TensorValue &t, int axis, ReduceKind kind) {
  const ReduceDecomp d = reduce_decomp(t.shape(), axis);
  const std::int64_t n = d.outer * d.inner;
  std::vector<double> out(static_cast<std::size_t>(n));
  const double *in = t.data().data();
  double *po = out.data();
  const std::int64_t mid = d.mid;
  const std::int64_t inner = d.inner;
#pragma omp parallel for schedule(static) if (n >= kParallelGrain)
  for (std::int64_t oi = 0; oi < n; ++oi) {
    const std::int64_t o = oi / inner;
    const std::int64_t i = oi % inner;
    double acc = reduce_identity(kind);
    for (std::int64_t m = 0; m < mid; ++m) {
      acc = reduce_combine(kind, acc, in[(o * mid + m) * inner + i]);
    }
    po[oi] = acc;
  }
  return TensorValue(d.out_shape, std::move(out));
}

namespace {

// tau(T)[i_1..i_k] = T[i_{tau(1)},..,i_{tau(k)}], indices over tau·shape(T).
struct PermuteMap {
  Shape out_shape;
  std::vector<std::int64_t> in_strides;  // reordered so out index dots in
};

PermuteMap permute_map(const TensorValue &t, const Permutation &tau) {
  if (tau.size() != t.rank()) {
    throw ValueError("permutation size " + std::to_string(tau.size()) +
                     " does not match tensor rank " + std::to_string(t.rank()));
  }
  PermuteMap map{tau.apply_to_shape(t.shape()), {}};
  const auto in_strides = row_major_strides(t.shape());
  // Output index component u contributes to input axis tau^{-1}... derive:
  // in index axis q equals out index component tau(q), so the stride seen by
  // out component u is in_strides[tau^{-1}(u)].
  const Permutation inv = tau.inverse();
  map.in_strides.resize(static_cast<std::size_t>(t.rank()));
  for (int u = 1; u <= t.rank(); ++u) {
    map.in_strides[static_cast<std::size_t>(u - 1)] =
        in_strides[static_cast<std::size_t>(inv.image(u) - 1)];
  }
  return map;
}

} // namespace

TensorValue permute_serial(const TensorValue &t, const Permutation &tau) {
  const PermuteMap map = permute_map(t, tau);
  const std::int64_t n = t.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  const double *in = t.data().data();
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        in[source_offset(i, map.out_shape.dims(), map.in_strides)];
  }
  return TensorValue(map.out_shape, std::move(out));
}

TensorValue permute(const TensorValue &t, const Permutation &tau) {
  const PermuteMap map = permute_map(t, tau);
  const std::int64_t n = t.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  const double *in = t.data().data();
  double *o = out.data();
#pragma omp parallel for schedule(static) if (n >= kParallelGrain)
  for (std::int64_t i = 0; i < n; ++i) {
    o[i] = in[source_offset(i, map.out_shape.dims(), map.in_strides)];
  }
  return TensorValue(map.out_shape, std::move(out));
}

TensorValue matmul_serial(const TensorValue &a, const TensorValue &b) {
  const MatDims d = matmul_dims(a, b);
  std::vector<double> out(static_cast<std::size_t>(d.m * d.n), 0.0);
  const double *pa = a.data().data();
  const double *pb = b.data().data();
  for (std::int64_t i = 0; i < d.m; ++i) {
    for (std::int64_t j = 0; j < d.n; ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < d.k; ++k) {
        acc += pa[i * d.k + k] * pb[k * d.n + j];
      }
      out[static_cast<std::size_t>(i * d.n + j)] = acc;
    }
  }
  return TensorValue(Shape({d.m, d.n}), std::move(out));
}

TensorValue matmul(const TensorValue &a, const TensorValue &b) {
  const MatDims d = matmul_dims(a, b);
  std::vector<double> out(static_cast<std::size_t>(d.m * d.n), 0.0);
  const double *pa = a.data().data();
  const double *pb = b.data().data();
  double *o = out.data();
  const std::int64_t total = d.m * d.n;
#pragma omp parallel for schedule(static) if (total >= kParallelGrain)
  for (std::int64_t ij = 0; ij < total; ++ij) {
    const std::int64_t i = ij / d.n;
    const std::int64_t j = ij % d.n;
    double acc = 0.0;
    for (std::int64_t k = 0; k < d.k; ++k) {
      acc += pa[i * d.k + k] * pb[k * d.n + j];
    }
    o[ij] = acc;
  }
  return TensorValue(Shape({d.m, d.n}), std::move(out));
}

TensorValue concat_axis(const std::vector<const TensorValue *> &parts,
                        int axis) {
  if (parts.empty()) throw ValueError("concat of zero parts");
  const Shape &first = parts[0]->shape();
  if (axis < 1 || axis > first.rank()) {
    throw ValueError("concat axis " + std::to_string(axis) +
                     " out of range for shape " + first.str());
  }
  std::int64_t total = 0;
  for (const TensorValue *p : parts) {
    if (p->rank() != first.rank()) {
      throw ValueError("concat rank mismatch");
    }
    for (int ax = 1; ax <= first.rank(); ++ax) {
      if (ax != axis && p->shape().extent(ax) != first.extent(ax)) {
        throw ValueError("concat extent mismatch at axis " +
                         std::to_string(ax));
      }
    }
    total += p->shape().extent(axis);
  }
  Shape out_shape = first.drop_axis(axis).insert_axis(axis, total);
  std::int64_t outer = 1, inner = 1;
  for (int ax = 1; ax < axis; ++ax) outer *= first.extent(ax);
  for (int ax = axis + 1; ax <= first.rank(); ++ax) inner *= first.extent(ax);

  std::vector<double> out(static_cast<std::size_t>(out_shape.numel()));
  std::int64_t offset = 0;
  for (const TensorValue *p : parts) {
    const std::int64_t mid = p->shape().extent(axis);
    const double *src = p->data().data();
    for (std::int64_t o = 0; o < outer; ++o) {
      std::copy(src + o * mid * inner, src + (o + 1) * mid * inner,
                out.begin() + (o * total + offset) * inner);
    }
    offset += mid;
  }
  return TensorValue(out_shape, std::move(out));
}

} // namespace kernels
} // namespace fedtensor
