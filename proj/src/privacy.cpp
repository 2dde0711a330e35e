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

#include "fedtensor/privacy.hpp"

#include <cmath>

namespace fedtensor {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : base_(mix64(seed + kGolden) ^ mix64(stream * kGolden + 1)) {}

double CounterRng::next_uniform() {
  const std::uint64_t bits = mix64(base_ + (++counter_) * kGolden);
  // 53 random bits, nudged off the endpoints.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::next_gaussian() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

double CounterRng::next_laplace(double b) {
  const double u = next_uniform() - 0.5;
  const double mag = std::log(1.0 - 2.0 * std::fabs(u));
  return u < 0.0 ? b * mag : -b * mag;
}

const char *to_string(MechanismSpec::Kind kind) {
  switch (kind) {
  case MechanismSpec::Kind::GaussianCentral: return "gaussian-central";
  case MechanismSpec::Kind::LaplaceCentral: return "laplace-central";
  case MechanismSpec::Kind::GaussianLocal: return "gaussian-local";
  }
  return "?";
}

const char *to_string(MechanismSpec::Placement placement) {
  switch (placement) {
  case MechanismSpec::Placement::PerClientMessage: return "per-client-message";
  case MechanismSpec::Placement::MergedState: return "merged-state";
  case MechanismSpec::Placement::DecodedOutput: return "decoded-output";
  }
  return "?";
}

double calibrate_gaussian_sigma(double epsilon, double delta,
                                double sensitivity) {
  if (!(epsilon > 0.0)) throw ValueError("epsilon must be positive");
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ValueError("delta must lie in (0,1)");
  }
  if (!(sensitivity > 0.0)) throw ValueError("sensitivity must be positive");
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

namespace {

double draw(CounterRng &rng, const MechanismSpec &spec) {
  switch (spec.kind) {
  case MechanismSpec::Kind::GaussianCentral:
  case MechanismSpec::Kind::GaussianLocal:
    return spec.scale * rng.next_gaussian();
  case MechanismSpec::Kind::LaplaceCentral:
    return rng.next_laplace(spec.scale);
  }
  return 0.0;
}

EncodedState noise_state(const EncodedState &state, const MechanismSpec &spec,
                         std::uint64_t stream) {
  if (spec.scale == 0.0) return state; // identity mechanism
  CounterRng rng(spec.seed, stream);
  EncodedState out;
  out.reserve(state.size());
  for (const TensorValue &t : state) {
    std::vector<double> data = t.data();
    for (double &v : data) v += draw(rng, spec);
    out.emplace_back(t.shape(), std::move(data));
  }
  return out;
}

} // namespace

EncodedState noise_client_message(const EncodedState &message,
                                  const MechanismSpec &spec,
                                  std::size_t client_index) {
  return noise_state(message, spec, static_cast<std::uint64_t>(client_index) + 1);
}

EncodedState noise_merged_state(const EncodedState &state,
                                const MechanismSpec &spec) {
  return noise_state(state, spec, 0);
}

TensorValue noise_output(const TensorValue &output,
                         const MechanismSpec &spec) {
  EncodedState wrapped{output};
  return noise_state(wrapped, spec, 0)[0];
}

RandomizedPlan::RandomizedPlan(SharedStatePlan plan, MechanismSpec spec)
    : plan_(std::move(plan)), spec_(spec) {}

RandomizedPlan apply_mechanism(SharedStatePlan plan,
                               const MechanismSpec &spec) {
  if (spec.scale < 0.0) throw ValueError("noise scale must be nonnegative");
  const bool local = spec.kind == MechanismSpec::Kind::GaussianLocal;
  if (local != (spec.placement == MechanismSpec::Placement::PerClientMessage)) {
    throw ValueError(std::string("mechanism kind ") + to_string(spec.kind) +
                     " cannot be placed at " + to_string(spec.placement));
  }
  if (local) {
    for (const auto &comp : plan.components) {
      if (comp.merge == MergeTag::Min || comp.merge == MergeTag::Max) {
        throw ValueError("unsupported merge: per-client-message noise on a '" +
                         std::string(to_string(comp.merge)) +
                         "' merge breaks the state monoid; only additive "
                         "merges support local noise");
      }
    }
  }
  return RandomizedPlan(std::move(plan), spec);
}

TensorValue RandomizedPlan::run(const FederatedValue &x,
                                const Environment &shared_env,
                                const ExtensionRegistry &reg) const {
  std::vector<EncodedState> messages = encode_all(plan_, x, shared_env, reg);
  if (spec_.placement == MechanismSpec::Placement::PerClientMessage) {
    for (std::size_t c = 0; c < messages.size(); ++c) {
      messages[c] = noise_client_message(messages[c], spec_, c);
    }
  }
  EncodedState merged = merge_states(plan_, messages);
  if (spec_.placement == MechanismSpec::Placement::MergedState) {
    merged = noise_merged_state(merged, spec_);
  }
  TensorValue out = decode_state(plan_, merged, shared_env, reg);
  if (spec_.placement == MechanismSpec::Placement::DecodedOutput) {
    out = noise_output(out, spec_);
  }
  return out;
}

RoundRunner dp_round_runner(const MechanismSpec &spec,
                            const ExtensionRegistry &reg) {
  auto round = std::make_shared<std::uint64_t>(0);
  return [spec, reg = &reg, round](const SharedStatePlan &plan,
                                   const FederatedValue &x,
                                   const Environment &shared_env) {
    MechanismSpec round_spec = spec;
    round_spec.seed = spec.seed + (*round)++;
    return apply_mechanism(plan, round_spec).run(x, shared_env, *reg);
  };
}

double sensitivity_probe(const SharedStatePlan &plan, const FederatedValue &x,
                         const FederatedValue &x_prime,
                         const Environment &shared_env,
                         const ExtensionRegistry &reg) {
  if (x.record_axis() != x_prime.record_axis() ||
      x.nonrecord_shape() != x_prime.nonrecord_shape() ||
      x.federation() != x_prime.federation()) {
    throw EvalError("sensitivity probe inputs must share type and federation");
  }
  const EncodedState a = merge_states(plan, encode_all(plan, x, shared_env, reg));
  const EncodedState b =
      merge_states(plan, encode_all(plan, x_prime, shared_env, reg));
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::int64_t j = 0; j < a[i].numel(); ++j) {
      const double d = a[i].at_linear(j) - b[i].at_linear(j);
      sq += d * d;
    }
  }
  return std::sqrt(sq);
}

MergeTransport loopback_merge_transport() {
  return [](const SharedStatePlan &plan,
            const std::vector<EncodedState> &messages) {
    return merge_states(plan, messages);
  };
}

} // namespace fedtensor
