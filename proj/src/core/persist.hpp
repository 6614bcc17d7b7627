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

#ifndef MMSEL_CORE_PERSIST_HPP
#define MMSEL_CORE_PERSIST_HPP

#include <map>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace mmsel::persist {

/// Versioned weight file: a format tag, integer/real metadata, and named
/// row-major arrays with declared shapes. Vectors are stored as 1 x n.
///
///   {"format":"...","version":1,"meta":{...},
///    "arrays":{"name":{"shape":[rows,cols],"data":[...]}, ...}}
struct ArrayFile {
  std::string format;
  int version = 1;
  std::map<std::string, double> meta;
  std::map<std::string, Matrix> arrays;

  const Matrix& array(const std::string& name) const;
  double meta_value(const std::string& name) const;
};

std::string serialize(const ArrayFile& file);
ArrayFile parse(const std::string& text);

/// Writes to a temporary sibling and renames over `path`.
void save(const ArrayFile& file, const std::string& path);
ArrayFile load(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace mmsel::persist

#endif  // MMSEL_CORE_PERSIST_HPP
