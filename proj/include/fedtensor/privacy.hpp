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

#ifndef FEDTENSOR_PRIVACY_HPP
#define FEDTENSOR_PRIVACY_HPP

#include "fedtensor/factorizer.hpp"

namespace fedtensor {

/// Identifier of the noise-sampling algorithm, recorded in run metadata so
/// results can be reproduced: a counter-mode splitmix64 finalizer feeding
/// Box-Muller (Gaussian) and inverse-CDF (Laplace) transforms.
inline constexpr const char *kNoiseAlgorithm = "ctr-splitmix64/v1";

/// Deterministic counter-based generator. Draw i of stream s under seed k is
/// a pure function of (k, s, i): concurrent clients get independent
/// substreams and replays are bit-identical on any platform with IEEE-754
/// doubles.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  /// Uniform in the open interval (0,1).
  double next_uniform();
  /// Standard normal via Box-Muller (consumes two uniforms).
  double next_gaussian();
  /// Laplace with scale b via the inverse CDF.
  double next_laplace(double b);

private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

struct MechanismSpec {
  enum class Kind { GaussianCentral, LaplaceCentral, GaussianLocal };
  enum class Placement { PerClientMessage, MergedState, DecodedOutput };

  Kind kind = Kind::GaussianCentral;
  Placement placement = Placement::MergedState;
  /// Noise scale: sigma for Gaussian kinds, b for Laplace.
  double scale = 0.0;
  std::uint64_t seed = 0;
};

const char *to_string(MechanismSpec::Kind kind);
const char *to_string(MechanismSpec::Placement placement);

/// Classical Gaussian-mechanism calibration
/// sigma = sensitivity * sqrt(2 ln(1.25/delta)) / epsilon; one valid
/// instantiation of the abstract (epsilon, delta) mechanism interface.
double calibrate_gaussian_sigma(double epsilon, double delta,
                                double sensitivity);

/// Adds i.i.d. noise to every coordinate of a client message, on the
/// client's own substream (stream = client index + 1).
EncodedState noise_client_message(const EncodedState &message,
                                  const MechanismSpec &spec,
                                  std::size_t client_index);

/// Adds i.i.d. noise to every coordinate of the merged state (stream 0).
EncodedState noise_merged_state(const EncodedState &state,
                                const MechanismSpec &spec);

/// Adds i.i.d. noise to every coordinate of the decoded output (stream 0).
TensorValue noise_output(const TensorValue &output, const MechanismSpec &spec);

/// A plan with a mechanism attached at one of the three factorization
/// integration points. Running it is deterministic given the seed.
class RandomizedPlan {
public:
  RandomizedPlan(SharedStatePlan plan, MechanismSpec spec);

  const SharedStatePlan &plan() const { return plan_; }
  const MechanismSpec &spec() const { return spec_; }

  TensorValue run(const FederatedValue &x, const Environment &shared_env = {},
                  const ExtensionRegistry &reg = builtin_registry()) const;

private:
  SharedStatePlan plan_;
  MechanismSpec spec_;
};

/// Wraps a plan with the mechanism, validating kind/placement pairing.
/// Local placement additionally requires every component merge to be
/// additive: noised messages must still merge in the state monoid, which
/// min/max merges do not support.
RandomizedPlan apply_mechanism(SharedStatePlan plan, const MechanismSpec &spec);

/// Round runner applying the mechanism to every round of an iterative
/// program (the seed is offset by the round index).
RoundRunner dp_round_runner(const MechanismSpec &spec,
                            const ExtensionRegistry &reg = builtin_registry());

/// Euclidean distance between the merged states produced by two inputs of
/// the same type: d_M for one adjacent pair. A testing aid, not a
/// sensitivity certification.
double sensitivity_probe(const SharedStatePlan &plan, const FederatedValue &x,
                         const FederatedValue &x_prime,
                         const Environment &shared_env = {},
                         const ExtensionRegistry &reg = builtin_registry());

/// Merge transport hook (the SMPC integration point): receives the encoded
/// client messages and must return their merge. The default loopback simply
/// folds with the plan's merges in federation order; no cryptography.
using MergeTransport = std::function<EncodedState(
    const SharedStatePlan &, const std::vector<EncodedState> &)>;

MergeTransport loopback_merge_transport();

} // namespace fedtensor

#endif // FEDTENSOR_PRIVACY_HPP
