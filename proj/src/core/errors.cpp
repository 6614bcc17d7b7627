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

#include "errors.hpp"

namespace mmsel {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::Index: return "IndexError";
    case ErrorKind::OracleTooLarge: return "OracleTooLarge";
    case ErrorKind::Divergence: return "DivergenceError";
    case ErrorKind::DegeneratePool: return "DegeneratePool";
    case ErrorKind::DegenerateProjection: return "DegenerateProjection";
    case ErrorKind::UndefinedMetric: return "UndefinedMetric";
    case ErrorKind::Ingest: return "IngestError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace mmsel
