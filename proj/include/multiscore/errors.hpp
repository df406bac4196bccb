// Copyright (c) 2026 The multiscore Authors. All Rights Reserved.
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace multiscore {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Two sequences that must share a length (hypnograms, features) do not.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Argument violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Experiment or model configuration cannot be satisfied.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A scorer has no usable epoch, so Soft-Agreement is undefined.
class UndefinedAgreementError : public Error {
 public:
  using Error::Error;
};

/// Agreement calibration could not reach its target.
class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, double low, double high)
      : Error(what), low_(low), high_(high) {}
  double achieved_low() const noexcept { return low_; }
  double achieved_high() const noexcept { return high_; }

 private:
  double low_;
  double high_;
};

/// Training produced a non-finite gradient or parameter.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant; indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace multiscore
