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

#ifndef FEDTENSOR_LEARNING_HPP
#define FEDTENSOR_LEARNING_HPP

#include "fedtensor/factorizer.hpp"
#include "fedtensor/linalg.hpp"

namespace fedtensor {

/// Replace every free occurrence of `name` by `replacement`.
Expr substitute(const Expr &e, const std::string &name,
                const Expr &replacement);

/// Identity-matrix literal helper for shared-only decoders.
Expr identity_matrix_literal(std::int64_t p);

/// A per-record loss paired with its hand-built per-record gradient, both
/// client-local expressions over (data_name : input_type, param_name :
/// Sh(param_shape)). The gradient matching the loss derivative record by
/// record is a tested property, not an assumption the code relies on.
struct RepresentableLoss {
  FedType input_type{1, Shape()};
  Shape param_shape;
  std::string data_name = "x";
  std::string param_name = "theta";
  Expr loss = Expr::var("x");              // : Fed_1(())
  Expr grad = Expr::var("x");              // : Fed_1(param_shape)
  std::optional<Expr> curvature;           // : Fed_1((p,p)) when param is (p)
};

/// Binary logistic regression on packed records Fed_1((p+1)): columns 1..p
/// are features, column p+1 is the {0,1} response.
///   loss  = log(1 + exp(x.theta)) - y * (x.theta)
///   grad  = (sigmoid(x.theta) - y) * x
RepresentableLoss build_logistic(std::int64_t p);

/// Gaussian linear regression with known variance on the same packed layout.
///   loss = (y - x.theta)^2 / (2 sigma^2)
///   grad = (x.theta - y) x / sigma^2
///   curv = x x^T / sigma^2
RepresentableLoss build_gaussian_linear(std::int64_t p, double sigma2);

/// The gradient as a shared-state component: Sum along the record axis of
/// the per-record gradient expression. Its plan evaluates to the global
/// gradient.
ProgramComponent gradient_component(const RepresentableLoss &loss);

/// Sum of the per-record curvature blocks. Throws when the loss carries no
/// curvature expression.
ProgramComponent curvature_component(const RepresentableLoss &loss);

/// Test oracle: central finite differences of the empirical objective
/// L(theta) = sum over all records of the per-record loss, computed on the
/// virtual global tensor.
TensorValue finite_diff_gradient(const RepresentableLoss &loss,
                                 const FederatedValue &x,
                                 const TensorValue &theta, double h,
                                 const ExtensionRegistry &reg = builtin_registry());

/// The empirical objective itself, evaluated centrally.
double empirical_loss(const RepresentableLoss &loss, const FederatedValue &x,
                      const TensorValue &theta,
                      const ExtensionRegistry &reg = builtin_registry());

struct OptimizerSpec {
  enum class Kind { Gd, Momentum, Adam, DampedNewton };

  Kind kind = Kind::Gd;
  double eta = 0.1;
  /// Optional per-round step sizes; the last entry repeats past the end.
  std::vector<double> eta_schedule;
  double momentum_beta = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Damping for the curvature solve (damped Newton only).
  double lambda = 0.0;

  double eta_at(int t) const;
};

const char *to_string(OptimizerSpec::Kind kind);

/// Builds the iterative typed program for server-side optimization.
///
/// The shared cross-round state packs the parameter and any moment tensors
/// along a leading axis: gd and damped Newton carry Sh((p)) (the parameter
/// itself), momentum carries Sh((2,p)) with rows (theta, v), Adam carries
/// Sh((3,p)) with rows (theta, m, w). Row extraction and re-packing are
/// mask-literal expressions, so every decoder is shared-only. Adam bias
/// corrections enter as round-indexed literals rather than integer state.
IterativeProgram build_optimizer_program(const RepresentableLoss &loss,
                                         const OptimizerSpec &opt, int rounds,
                                         const TensorValue &theta0);

/// Parameter part of an optimizer state (row 1 for packed states).
TensorValue extract_parameter(const OptimizerSpec &opt,
                              const TensorValue &state);

/// Shared-only linear solve, also registered as the `solve` extension.
inline TensorValue solve(const TensorValue &a, const TensorValue &b,
                         double pivot_rel_tol = 1e-12) {
  return solve_linear_system(a, b, pivot_rel_tol);
}

} // namespace fedtensor

#endif // FEDTENSOR_LEARNING_HPP
