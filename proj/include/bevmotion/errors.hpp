// Copyright 2026 The bevmotion Authors
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

namespace bevmotion {

/// Base class for every error raised by the library. `exit_code()` is the
/// process status the CLI reports for it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Malformed configuration, unknown registry names, invalid grid specs.
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Unreadable or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Wrong magic bytes or unsupported version in a binary container.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// Truncated payloads and checksum mismatches.
class CorruptionError : public DataError {
 public:
  using DataError::DataError;
};

/// Scene generation could not place all requested objects.
class GenerationError : public DataError {
 public:
  using DataError::DataError;
};

/// NaN/Inf in a loss, gradient or rollout step.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

/// Violated shape or argument precondition of a library call.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace bevmotion
