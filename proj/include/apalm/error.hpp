// Copyright 2026 The APALM Authors. All Rights Reserved.
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

#ifndef APALM_ERROR_HPP_
#define APALM_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apalm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension or index mismatch between a value and the space it is used in.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A gradient or objective oracle produced non-finite output.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// Stepsize above the prox-boundedness threshold of a regularizer.
class StepsizeDomainError : public Error {
 public:
  using Error::Error;
};

/// A read requested an iterate older than the retained window, or a delay
/// exceeded the configured staleness bound.
class StalenessError : public Error {
 public:
  using Error::Error;
};

/// The monitor lacks the metadata needed to assemble a certificate.
class MonitoringWindowError : public Error {
 public:
  using Error::Error;
};

/// Line search shrank too many times without meeting its acceptance test.
class StagnationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A referenced input file does not exist or cannot be opened.
class MissingFileError : public Error {
 public:
  explicit MissingFileError(const std::string& path)
      : Error("cannot open file: " + path), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Text input that does not parse. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace apalm

#endif  // APALM_ERROR_HPP_
