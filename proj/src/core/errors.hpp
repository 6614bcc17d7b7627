// Copyright 2026 The mmsel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MMSEL_CORE_ERRORS_HPP
#define MMSEL_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mmsel {

enum class ErrorKind {
  InvalidInput,
  InvalidMatrix,
  Index,
  OracleTooLarge,
  Divergence,
  DegeneratePool,
  DegenerateProjection,
  UndefinedMetric,
  Ingest,
  Config,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every error raised by the library. The kind maps one-to-one onto
/// the status codes of the C API.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by train_student when a loss value stops being finite.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error(ErrorKind::Divergence, what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Raised by ingestion with the 1-based line number of the offending record.
class IngestError : public Error {
 public:
  IngestError(std::size_t line, const std::string& what)
      : Error(ErrorKind::Ingest, "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace mmsel

#endif  // MMSEL_CORE_ERRORS_HPP
