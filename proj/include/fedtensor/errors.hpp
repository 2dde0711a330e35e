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

#ifndef FEDTENSOR_ERRORS_HPP
#define FEDTENSOR_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace fedtensor {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Malformed values: bad shapes, data length mismatches, invalid federations.
class ValueError : public Error {
public:
  using Error::Error;
};

/// Runtime evaluation failures: semantic side conditions, singular systems.
class EvalError : public Error {
public:
  using Error::Error;
};

/// Malformed serialized payloads or interchange documents.
class FormatError : public Error {
public:
  using Error::Error;
};

enum class TypeErrorKind {
  ShapeMismatch,
  RecordAxisViolation,
  BroadcastIncompatible,
  UnboundVariable,
  Arity,
  FedFedForm,
  ExtensionMisuse,
};

const char *to_string(TypeErrorKind kind);

/// Path from the root of an expression to a subexpression, as 1-based
/// argument positions. Empty path addresses the root.
using ExprPath = std::vector<int>;

std::string path_to_string(const ExprPath &path);

/// Static typing failure. Carries the failing rule kind and the position of
/// the offending subexpression.
class TypeCheckError : public Error {
public:
  TypeCheckError(TypeErrorKind kind, ExprPath path, const std::string &msg)
      : Error(std::string(to_string(kind)) + " at " + path_to_string(path) +
              ": " + msg),
        kind_(kind), path_(std::move(path)) {}

  TypeErrorKind kind() const { return kind_; }
  const ExprPath &path() const { return path_; }

private:
  TypeErrorKind kind_;
  ExprPath path_;
};

} // namespace fedtensor

#endif // FEDTENSOR_ERRORS_HPP
