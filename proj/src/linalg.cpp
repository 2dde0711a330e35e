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

#include "fedtensor/linalg.hpp"

#include <cmath>
#include <numeric>

#include "fedtensor/errors.hpp"

namespace fedtensor {

TensorValue solve_linear_system(const TensorValue &a, const TensorValue &b,
                                double pivot_rel_tol) {
  if (a.rank() != 2 || a.shape().extent(1) != a.shape().extent(2)) {
    throw EvalError("solve expects a square matrix, got " + a.shape().str());
  }
  const std::int64_t p = a.shape().extent(1);
  if (b.rank() < 1 || b.rank() > 2 || b.shape().extent(1) != p) {
    throw EvalError("solve right-hand side " + b.shape().str() +
                    " does not match matrix " + a.shape().str());
  }
  const std::int64_t k = b.rank() == 2 ? b.shape().extent(2) : 1;

  std::vector<double> lu = a.data();
  std::vector<double> x = b.data();
  std::vector<std::int64_t> piv(static_cast<std::size_t>(p));
  std::iota(piv.begin(), piv.end(), 0);

  double max_entry = 0.0;
  for (double v : lu) max_entry = std::max(max_entry, std::fabs(v));
  const double pivot_floor = pivot_rel_tol * std::max(max_entry, 1e-300);

  auto lu_at = [&](std::int64_t i, std::int64_t j) -> double & {
    return lu[static_cast<std::size_t>(i * p + j)];
  };
  auto x_at = [&](std::int64_t i, std::int64_t j) -> double & {
    return x[static_cast<std::size_t>(i * k + j)];
  };

  for (std::int64_t col = 0; col < p; ++col) {
    std::int64_t best = col;
    for (std::int64_t row = col + 1; row < p; ++row) {
      if (std::fabs(lu_at(row, col)) > std::fabs(lu_at(best, col))) best = row;
    }
    if (std::fabs(lu_at(best, col)) < pivot_floor) {
      throw EvalError("singular system: pivot " +
                      std::to_string(lu_at(best, col)) + " at column " +
                      std::to_string(col + 1));
    }
    if (best != col) {
      for (std::int64_t j = 0; j < p; ++j) std::swap(lu_at(col, j), lu_at(best, j));
      for (std::int64_t j = 0; j < k; ++j) std::swap(x_at(col, j), x_at(best, j));
    }
    const double pivot = lu_at(col, col);
    for (std::int64_t row = col + 1; row < p; ++row) {
      const double factor = lu_at(row, col) / pivot;
      lu_at(row, col) = factor;
      for (std::int64_t j = col + 1; j < p; ++j) {
        lu_at(row, j) -= factor * lu_at(col, j);
      }
      for (std::int64_t j = 0; j < k; ++j) {
        x_at(row, j) -= factor * x_at(col, j);
      }
    }
  }

  for (std::int64_t col = p - 1; col >= 0; --col) {
    for (std::int64_t j = 0; j < k; ++j) {
      double v = x_at(col, j);
      for (std::int64_t m = col + 1; m < p; ++m) {
        v -= lu_at(col, m) * x_at(m, j);
      }
      x_at(col, j) = v / lu_at(col, col);
    }
  }

  return TensorValue(b.shape(), std::move(x));
}

} // namespace fedtensor
