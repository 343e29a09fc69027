// Copyright 2026 The wildcensus Authors. All Rights Reserved.
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

#pragma once

#include <stdexcept>
#include <string>

namespace wildcensus {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition (maps to CLI exit code 1).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A record failed schema or referential validation.
class ValidationError : public InvalidInput {
 public:
  ValidationError(const std::string& what, std::size_t line = 0)
      : InvalidInput(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  /// 1-based line of the offending record, 0 when not line-oriented.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Referenced entity does not exist.
class NotFound : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// File system or network failure (maps to CLI exit code 2).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Review-service state machine refused a transition.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Event log is not a contiguous, duplicate-free sequence.
class CorruptLog : public Error {
 public:
  using Error::Error;
};

}  // namespace wildcensus
