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

#ifndef FEDTENSOR_DOCUMENT_HPP
#define FEDTENSOR_DOCUMENT_HPP

#include "fedtensor/factorizer.hpp"

namespace fedtensor {

// JSON interchange for programs, data, traces, and ledgers (see
// docs/FORMAT.md). One text format everywhere; the only binary format is
// the simulator's state message layout.

/// A parsed program file. Expression programs carry a body; one-round and
/// iterative programs carry components and a decoder; iterative programs
/// additionally carry the cross-round state declaration.
struct ProgramDocument {
  enum class Kind { Expr, OneRound, Iterative };

  int version = 1;
  Kind kind = Kind::Expr;
  /// Declared inputs in file order (variable name, type).
  std::vector<std::pair<std::string, TensorType>> inputs;

  std::optional<Expr> body; // Kind::Expr

  std::vector<ProgramComponent> components; // OneRound / Iterative
  std::optional<Expr> decoder;

  std::string state_name = "theta"; // Iterative
  TensorValue initial_state;
  int rounds = 1;

  /// The single federated input (one-round and iterative kinds).
  std::pair<std::string, FedType> federated_input() const;
  /// The shared inputs, in file order.
  std::vector<std::pair<std::string, Shape>> shared_inputs() const;
};

/// Parses and structurally validates a program document. Parse errors carry
/// line/column; schema errors name the offending field. Both raise
/// FormatError. Type and locality validation is the caller's step (check /
/// validate), not the loader's.
ProgramDocument load_program(const std::string &text);

std::string save_program(const ProgramDocument &doc);

OneRoundProgram to_one_round(const ProgramDocument &doc);
IterativeProgram to_iterative(const ProgramDocument &doc);

/// A parsed data file: the federation in order, per-client named tensors,
/// and shared inputs.
struct DataDocument {
  std::vector<std::string> federation;
  std::map<std::string, std::map<std::string, TensorValue>> client_tensors;
  std::map<std::string, TensorValue> shared;
};

DataDocument load_data(const std::string &text);

std::string save_data(const DataDocument &doc);

/// Binds the document against declared input types: federated inputs become
/// FederatedValue over the document federation (validating common non-record
/// shapes), shared inputs become tensors. Missing tensors and shape
/// mismatches raise FormatError.
Environment build_environment(const DataDocument &data,
                              const std::vector<std::pair<std::string, TensorType>>
                                  &inputs);

/// Expression serialization used inside documents; exposed for tooling.
Expr expr_from_json_text(const std::string &text);
std::string expr_to_json_text(const Expr &e);

} // namespace fedtensor

#endif // FEDTENSOR_DOCUMENT_HPP
