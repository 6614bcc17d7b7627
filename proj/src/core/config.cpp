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

#include "config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "errors.hpp"
#include "persist.hpp"

namespace mmsel {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
    fail(ErrorKind::Config, "'" + key + "' expects a real number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail(ErrorKind::Config, "'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long n = to_int(key, v);
  if (n < 0) fail(ErrorKind::Config, "'" + key + "' must not be negative");
  return static_cast<std::size_t>(n);
}

std::string real_text(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Field {
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <typename Member>
Field real_field(Member member) {
  return {[member](Config& c, const std::string& k, const std::string& v) {
            std::invoke(member, c) = to_real(k, v);
          },
          [member](const Config& c) { return real_text(std::invoke(member, c)); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"teacher.gamma", real_field([](auto& c) -> auto& { return c.teacher.gamma; })},
      {"teacher.sigma", real_field([](auto& c) -> auto& { return c.teacher.sigma; })},
      {"teacher.epsilon", real_field([](auto& c) -> auto& { return c.teacher.epsilon; })},
      {"teacher.mu", real_field([](auto& c) -> auto& { return c.teacher.mu; })},
      {"teacher.alpha", real_field([](auto& c) -> auto& { return c.teacher.alpha; })},
      {"teacher.k_max",
       {[](Config& c, const std::string& k, const std::string& v) {
          c.teacher.k_max = static_cast<int>(to_int(k, v));
        },
        [](const Config& c) { return std::to_string(c.teacher.k_max); }}},
      {"train.learning_rate", real_field([](auto& c) -> auto& { return c.train.learning_rate; })},
      {"train.epochs",
       {[](Config& c, const std::string& k, const std::string& v) {
          c.train.epochs = static_cast<int>(to_int(k, v));
        },
        [](const Config& c) { return std::to_string(c.train.epochs); }}},
      {"train.alpha", real_field([](auto& c) -> auto& { return c.train.alpha; })},
      {"train.mu", real_field([](auto& c) -> auto& { return c.train.mu; })},
      {"train.seed",
       {[](Config& c, const std::string& k, const std::string& v) {
          std::uint64_t out = 0;
          const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
          if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
            fail(ErrorKind::Config, "'" + k + "' expects an unsigned integer, got '" + v + "'");
          c.train.seed = out;
        },
        [](const Config& c) { return std::to_string(c.train.seed); }}},
      {"train.optimizer",
       {[](Config& c, const std::string& k, const std::string& v) {
          if (v == "adam")
            c.train.optimizer = vrp::Optimizer::Adam;
          else if (v == "sgd")
            c.train.optimizer = vrp::Optimizer::Sgd;
          else
            fail(ErrorKind::Config, "'" + k + "' must be adam or sgd, got '" + v + "'");
        },
        [](const Config& c) {
          return std::string(c.train.optimizer == vrp::Optimizer::Adam ? "adam" : "sgd");
        }}},
      {"train.hidden_dim",
       {[](Config& c, const std::string& k, const std::string& v) {
          c.train.hidden_dim = to_count(k, v);
        },
        [](const Config& c) { return std::to_string(c.train.hidden_dim); }}},
      {"train.dropout", real_field([](auto& c) -> auto& { return c.train.dropout; })},
      {"train.batch_articles",
       {[](Config& c, const std::string& k, const std::string& v) {
          c.train.batch_articles = to_count(k, v);
        },
        [](const Config& c) { return std::to_string(c.train.batch_articles); }}},
      {"train.holdout", real_field([](auto& c) -> auto& { return c.holdout; })},
      {"align.tau", real_field([](auto& c) -> auto& { return c.align.tau; })},
      {"align.lambda_align", real_field([](auto& c) -> auto& { return c.align.lambda_align; })},
      {"align.lambda_vrp", real_field([](auto& c) -> auto& { return c.align.lambda_vrp; })},
      {"selection.rule",
       {[](Config& c, const std::string& k, const std::string& v) {
          if (v == "topk")
            c.selection.rule = vrp::SelectionRule::TopK;
          else if (v == "threshold")
            c.selection.rule = vrp::SelectionRule::Threshold;
          else
            fail(ErrorKind::Config, "'" + k + "' must be topk or threshold, got '" + v + "'");
        },
        [](const Config& c) {
          return std::string(c.selection.rule == vrp::SelectionRule::TopK ? "topk"
                                                                           : "threshold");
        }}},
      {"selection.budget",
       {[](Config& c, const std::string& k, const std::string& v) {
          c.selection.budget = to_count(k, v);
        },
        [](const Config& c) { return std::to_string(c.selection.budget); }}},
      {"selection.threshold", real_field([](auto& c) -> auto& { return c.selection.threshold; })},
      {"pool_cap",
       {[](Config& c, const std::string& k, const std::string& v) { c.pool_cap = to_count(k, v); },
        [](const Config& c) { return std::to_string(c.pool_cap); }}},
      {"relevance_threshold",
       real_field([](auto& c) -> auto& { return c.relevance_threshold; })},
  };
  return table;
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  const auto& table = fields();
  auto it = table.find(key);
  if (it == table.end()) fail(ErrorKind::Config, "unknown config key '" + key + "'");
  it->second.set(*this, key, trim(value));
}

std::string Config::get(const std::string& key) const {
  const auto& table = fields();
  auto it = table.find(key);
  if (it == table.end()) fail(ErrorKind::Config, "unknown config key '" + key + "'");
  return it->second.get(*this);
}

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, field] : fields()) out.push_back(name);
    return out;
  }();
  return names;
}

void Config::validate() const {
  try {
    teacher.validate();
    train.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  if (!(align.tau > 0.0)) fail(ErrorKind::Config, "align.tau must be positive");
  if (!(align.lambda_align >= 0.0) || !(align.lambda_vrp >= 0.0))
    fail(ErrorKind::Config, "loss weights must be non-negative");
  if (selection.budget < 1) fail(ErrorKind::Config, "selection.budget must be at least 1");
  if (pool_cap < 1) fail(ErrorKind::Config, "pool_cap must be at least 1");
  if (!(relevance_threshold >= -1.0 && relevance_threshold <= 1.0))
    fail(ErrorKind::Config, "relevance_threshold must lie in [-1, 1]");
  if (!(holdout >= 0.0 && holdout < 1.0))
    fail(ErrorKind::Config, "train.holdout must lie in [0, 1)");
}

Config Config::parse(const std::string& text) {
  Config config;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Config, "config line " + std::to_string(number) + ": expected key = value");
    try {
      config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorKind::Config, "config line " + std::to_string(number) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

Config Config::load(const std::string& path) {
  try {
    return parse(persist::read_text(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) fail(ErrorKind::Config, e.what());
    throw;
  }
}

std::string Config::to_string() const {
  std::string out;
  for (const auto& key : keys()) out += key + " = " + get(key) + "\n";
  return out;
}

}  // namespace mmsel
