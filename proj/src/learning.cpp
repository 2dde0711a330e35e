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

#include "fedtensor/learning.hpp"

#include <cmath>

namespace fedtensor {

namespace fo = ops;

Expr substitute(const Expr &e, const std::string &name,
                const Expr &replacement) {
  if (e.is_var()) {
    return e.var_name() == name ? replacement : e;
  }
  std::vector<Expr> args;
  args.reserve(e.args().size());
  for (const Expr &a : e.args()) args.push_back(substitute(a, name, replacement));
  return Expr::apply(e.symbol(), std::move(args));
}

Expr identity_matrix_literal(std::int64_t p) {
  return fo::lit(TensorValue::identity_matrix(p));
}

namespace {

// Per-record linear predictor x.theta as Fed_1(()): broadcast theta across
// each record's feature row and reduce the feature axis.
Expr linear_predictor(const Expr &features, const Expr &theta) {
  return fo::sum(2, fo::mul(features, theta));
}

} // namespace

RepresentableLoss build_logistic(std::int64_t p) {
  if (p < 1) throw ValueError("logistic model needs p >= 1 features");
  RepresentableLoss out;
  out.input_type = FedType{1, Shape({p + 1})};
  out.param_shape = Shape({p});

  const Expr x = fo::var(out.data_name);
  const Expr theta = fo::var(out.param_name);
  const Expr feats = fo::ext("proj_features", {x});
  const Expr y = fo::ext("proj_response", {x});
  const Expr z = linear_predictor(feats, theta);

  out.loss = fo::sub(fo::log(fo::add(fo::lit(1.0), fo::exp(z))),
                     fo::mul(y, z));
  out.grad = fo::ext("per_record_scale",
                     {fo::sub(fo::sigmoid(z), y), feats});
  return out;
}

RepresentableLoss build_gaussian_linear(std::int64_t p, double sigma2) {
  if (p < 1) throw ValueError("gaussian linear model needs p >= 1 features");
  if (!(sigma2 > 0.0)) throw ValueError("sigma^2 must be positive");
  RepresentableLoss out;
  out.input_type = FedType{1, Shape({p + 1})};
  out.param_shape = Shape({p});

  const Expr x = fo::var(out.data_name);
  const Expr theta = fo::var(out.param_name);
  const Expr feats = fo::ext("proj_features", {x});
  const Expr y = fo::ext("proj_response", {x});
  const Expr z = linear_predictor(feats, theta);
  const Expr residual = fo::sub(z, y);

  out.loss = fo::div(fo::square(fo::sub(y, z)), fo::lit(2.0 * sigma2));
  out.grad = fo::ext("per_record_scale",
                     {fo::div(residual, fo::lit(sigma2)), feats});
  out.curvature =
      fo::div(fo::ext("per_record_outer", {feats}), fo::lit(sigma2));
  return out;
}

ProgramComponent gradient_component(const RepresentableLoss &loss) {
  return {"grad", AggComponent{loss.grad, AggSchema::Sum}};
}

ProgramComponent curvature_component(const RepresentableLoss &loss) {
  if (!loss.curvature) {
    throw Error("loss has no curvature expression");
  }
  return {"curv", AggComponent{*loss.curvature, AggSchema::Sum}};
}

namespace {

Environment loss_environment(const RepresentableLoss &loss,
                             const FederatedValue &x,
                             const TensorValue &theta) {
  if (theta.shape() != loss.param_shape) {
    throw EvalError("parameter shape " + theta.shape().str() +
                    " does not match the loss parameter shape " +
                    loss.param_shape.str());
  }
  Environment env;
  env.bind(loss.data_name, Value(x));
  env.bind(loss.param_name, Value(theta));
  return env;
}

} // namespace

double empirical_loss(const RepresentableLoss &loss, const FederatedValue &x,
                      const TensorValue &theta, const ExtensionRegistry &reg) {
  const Environment env = loss_environment(loss, x, theta);
  return eval_centralized(env, fo::sum(1, loss.loss), reg).value.at_linear(0);
}

TensorValue finite_diff_gradient(const RepresentableLoss &loss,
                                 const FederatedValue &x,
                                 const TensorValue &theta, double h,
                                 const ExtensionRegistry &reg) {
  if (!(h > 0.0)) throw ValueError("finite-difference step must be positive");
  std::vector<double> grad(theta.data().size());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    std::vector<double> up = theta.data(), down = theta.data();
    up[j] += h;
    down[j] -= h;
    const double lu =
        empirical_loss(loss, x, TensorValue(theta.shape(), std::move(up)), reg);
    const double ld = empirical_loss(
        loss, x, TensorValue(theta.shape(), std::move(down)), reg);
    grad[j] = (lu - ld) / (2.0 * h);
  }
  return TensorValue(theta.shape(), std::move(grad));
}

double OptimizerSpec::eta_at(int t) const {
  if (eta_schedule.empty()) return eta;
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t),
                                              eta_schedule.size() - 1);
  return eta_schedule[i];
}

const char *to_string(OptimizerSpec::Kind kind) {
  switch (kind) {
  case OptimizerSpec::Kind::Gd: return "gd";
  case OptimizerSpec::Kind::Momentum: return "momentum";
  case OptimizerSpec::Kind::Adam: return "adam";
  case OptimizerSpec::Kind::DampedNewton: return "damped-newton";
  }
  return "?";
}

namespace {

// Mask literal of shape (rows, 1) selecting `row` (1-based): used both to
// extract one row of a packed state (multiply then sum axis 1) and to place
// a vector into that row when re-packing.
Expr row_mask(std::int64_t rows, std::int64_t row) {
  std::vector<double> data(static_cast<std::size_t>(rows), 0.0);
  data[static_cast<std::size_t>(row - 1)] = 1.0;
  return fo::lit(TensorValue(Shape({rows, 1}), std::move(data)));
}

Expr extract_row(const Expr &state, std::int64_t rows, std::int64_t row) {
  return fo::sum(1, fo::mul(state, row_mask(rows, row)));
}

Expr place_row(const Expr &vec, std::int64_t rows, std::int64_t row) {
  return fo::mul(row_mask(rows, row), vec);
}

TensorValue packed_initial_state(const TensorValue &theta0,
                                 std::int64_t rows) {
  const std::int64_t p = theta0.shape().extent(1);
  std::vector<double> data(static_cast<std::size_t>(rows * p), 0.0);
  std::copy(theta0.data().begin(), theta0.data().end(), data.begin());
  return TensorValue(Shape({rows, p}), std::move(data));
}

} // namespace

IterativeProgram build_optimizer_program(const RepresentableLoss &loss,
                                         const OptimizerSpec &opt, int rounds,
                                         const TensorValue &theta0) {
  if (rounds < 1) throw ValueError("optimizer programs need rounds >= 1");
  if (theta0.shape() != loss.param_shape) {
    throw ValueError("theta0 shape " + theta0.shape().str() +
                     " does not match the loss parameter shape " +
                     loss.param_shape.str());
  }
  if (opt.kind == OptimizerSpec::Kind::DampedNewton) {
    if (!loss.curvature) {
      throw Error("damped Newton requires a loss with a curvature expression");
    }
    if (loss.param_shape.rank() != 1) {
      throw Error("damped Newton requires a vector parameter");
    }
  }

  IterativeProgram prog;
  prog.input_name = loss.data_name;
  prog.input_type = loss.input_type;
  prog.state_name = "state";
  prog.rounds = rounds;

  const std::string grad_name = "grad";
  const std::string curv_name = "curv";
  const Expr state = fo::var(prog.state_name);
  const Expr g = fo::var(grad_name);
  const RepresentableLoss loss_copy = loss;
  const OptimizerSpec spec = opt;

  switch (opt.kind) {
  case OptimizerSpec::Kind::Gd: {
    prog.initial_state = theta0;
    prog.round_at = [loss_copy, spec, grad_name, state, g](int t) {
      Round r;
      r.components.push_back(
          {grad_name, AggComponent{substitute(loss_copy.grad,
                                              loss_copy.param_name, state),
                                   AggSchema::Sum}});
      r.decoder = fo::sub(state, fo::mul(fo::lit(spec.eta_at(t)), g));
      return r;
    };
    break;
  }
  case OptimizerSpec::Kind::Momentum: {
    prog.initial_state = packed_initial_state(theta0, 2);
    prog.round_at = [loss_copy, spec, grad_name, state, g](int t) {
      const Expr theta = extract_row(state, 2, 1);
      const Expr v = extract_row(state, 2, 2);
      Round r;
      r.components.push_back(
          {grad_name, AggComponent{substitute(loss_copy.grad,
                                              loss_copy.param_name, theta),
                                   AggSchema::Sum}});
      const Expr v_next =
          fo::add(fo::mul(fo::lit(spec.momentum_beta), v), g);
      const Expr theta_next =
          fo::sub(theta, fo::mul(fo::lit(spec.eta_at(t)), v_next));
      r.decoder = fo::add(place_row(theta_next, 2, 1), place_row(v_next, 2, 2));
      return r;
    };
    break;
  }
  case OptimizerSpec::Kind::Adam: {
    prog.initial_state = packed_initial_state(theta0, 3);
    prog.round_at = [loss_copy, spec, grad_name, state, g](int t) {
      const Expr theta = extract_row(state, 3, 1);
      const Expr m = extract_row(state, 3, 2);
      const Expr w = extract_row(state, 3, 3);
      Round r;
      r.components.push_back(
          {grad_name, AggComponent{substitute(loss_copy.grad,
                                              loss_copy.param_name, theta),
                                   AggSchema::Sum}});
      const Expr m_next = fo::add(fo::mul(fo::lit(spec.adam_beta1), m),
                                  fo::mul(fo::lit(1.0 - spec.adam_beta1), g));
      const Expr w_next =
          fo::add(fo::mul(fo::lit(spec.adam_beta2), w),
                  fo::mul(fo::lit(1.0 - spec.adam_beta2), fo::square(g)));
      // Bias corrections as round-indexed literals; no integer state.
      const double c1 = 1.0 - std::pow(spec.adam_beta1, t + 1);
      const double c2 = 1.0 - std::pow(spec.adam_beta2, t + 1);
      const Expr m_hat = fo::div(m_next, fo::lit(c1));
      const Expr w_hat = fo::div(w_next, fo::lit(c2));
      const Expr theta_next =
          fo::sub(theta, fo::div(fo::mul(fo::lit(spec.eta_at(t)), m_hat),
                                 fo::add(fo::sqrt(w_hat),
                                         fo::lit(spec.adam_eps))));
      r.decoder = fo::add(fo::add(place_row(theta_next, 3, 1),
                                  place_row(m_next, 3, 2)),
                          place_row(w_next, 3, 3));
      return r;
    };
    break;
  }
  case OptimizerSpec::Kind::DampedNewton: {
    prog.initial_state = theta0;
    const std::int64_t p = loss.param_shape.extent(1);
    prog.round_at = [loss_copy, spec, grad_name, curv_name, state, g, p](int t) {
      Round r;
      r.components.push_back(
          {grad_name, AggComponent{substitute(loss_copy.grad,
                                              loss_copy.param_name, state),
                                   AggSchema::Sum}});
      r.components.push_back(
          {curv_name, AggComponent{substitute(*loss_copy.curvature,
                                              loss_copy.param_name, state),
                                   AggSchema::Sum}});
      const Expr damped =
          fo::add(fo::var(curv_name),
                  fo::mul(fo::lit(spec.lambda), identity_matrix_literal(p)));
      const Expr step = fo::ext("solve", {damped, g});
      r.decoder = fo::sub(state, fo::mul(fo::lit(spec.eta_at(t)), step));
      return r;
    };
    break;
  }
  }
  return prog;
}

TensorValue extract_parameter(const OptimizerSpec &opt,
                              const TensorValue &state) {
  switch (opt.kind) {
  case OptimizerSpec::Kind::Gd:
  case OptimizerSpec::Kind::DampedNewton:
    return state;
  case OptimizerSpec::Kind::Momentum:
  case OptimizerSpec::Kind::Adam: {
    const std::int64_t p = state.shape().extent(2);
    std::vector<double> data(state.data().begin(),
                             state.data().begin() + p);
    return TensorValue(Shape({p}), std::move(data));
  }
  }
  return state;
}

} // namespace fedtensor
