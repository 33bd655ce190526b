// Copyright 2026 The Cribtag Authors.
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

namespace cribtag {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 1,
  kData = 2,
  kNumeric = 3,
};

// Base of every error thrown by the library. Each error maps to an exit code
// so the CLI can translate failures without inspecting message text.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const { return ExitCode::kConfig; }
};

// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor or weight shape mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Problems with input data: unreadable files, malformed records.
class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kData; }
};

// Unsupported container or codec.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// Truncated or syntactically broken input.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

// Well-formed input whose content violates an invariant.
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// Non-finite values, undefined statistics, diverging training.
class NumericError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kNumeric; }
};

// A metric that is mathematically undefined for the given input.
class UndefinedMetricError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace cribtag
