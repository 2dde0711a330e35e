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

#ifndef FEDTENSOR_LINALG_HPP
#define FEDTENSOR_LINALG_HPP

#include "fedtensor/tensor.hpp"

namespace fedtensor {

/// Solves A x = b by LU factorization with partial pivoting. A must be
/// (p,p); b may be (p) or (p,k) and the result has b's shape. A pivot whose
/// magnitude falls below pivot_rel_tol times the largest magnitude of the
/// initial matrix raises EvalError (singular system).
TensorValue solve_linear_system(const TensorValue &a, const TensorValue &b,
                                double pivot_rel_tol = 1e-12);

} // namespace fedtensor

#endif // FEDTENSOR_LINALG_HPP
