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

#ifndef MMSEL_CORE_CONFIG_HPP
#define MMSEL_CORE_CONFIG_HPP

#include <string>
#include <vector>

#include "align.hpp"
#include "dpp_teacher.hpp"
#include "vrp_student.hpp"

namespace mmsel {

struct SelectionConfig {
  vrp::SelectionRule rule = vrp::SelectionRule::TopK;
  std::size_t budget = 3;
  double threshold = 0.5;
};

struct AlignConfig {
  double tau = 1.0;
  double lambda_align = 1.0;
  double lambda_vrp = 1.0;
};

/// Full run configuration. Every field has a default, so an empty file is a
/// valid configuration.
///
/// File format: one `key = value` per line, `#` starts a comment. Keys are
/// dotted field names such as `teacher.gamma` or `selection.rule`; see
/// Config::keys().
struct Config {
  dpp::TeacherParams teacher;
  vrp::TrainConfig train;
  AlignConfig align;
  SelectionConfig selection;
  std::size_t pool_cap = 5;
  double relevance_threshold = 0.25;
  double holdout = 0.2;  // trailing fraction of articles held out by train

  /// Throws Config errors naming the key on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  void validate() const;

  static Config parse(const std::string& text);
  static Config load(const std::string& path);
  std::string to_string() const;
};

}  // namespace mmsel

#endif  // MMSEL_CORE_CONFIG_HPP
