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

#ifndef MMSEL_CORE_JSON_OUT_HPP
#define MMSEL_CORE_JSON_OUT_HPP

#include <span>
#include <string>
#include <string_view>

namespace mmsel::json_out {

// Minimal emitter for the record files. Doubles are written with 17
// significant digits so that reading them back reproduces the same bits;
// non-finite values become null.

void number(std::string& out, double value);
void integer(std::string& out, long long value);
void string(std::string& out, std::string_view value);
void numbers(std::string& out, std::span<const double> values);

/// Appends `"key":` (with a leading comma unless `first`).
void key(std::string& out, std::string_view name, bool first = false);

}  // namespace mmsel::json_out

#endif  // MMSEL_CORE_JSON_OUT_HPP
