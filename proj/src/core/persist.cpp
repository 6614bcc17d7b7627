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

#include "persist.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "json_out.hpp"

namespace mmsel::persist {

const Matrix& ArrayFile::array(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end())
    fail(ErrorKind::Io, format + " file is missing array '" + name + "'");
  return it->second;
}

double ArrayFile::meta_value(const std::string& name) const {
  auto it = meta.find(name);
  if (it == meta.end())
    fail(ErrorKind::Io, format + " file is missing meta field '" + name + "'");
  return it->second;
}

std::string serialize(const ArrayFile& file) {
  std::string out = "{";
  json_out::key(out, "format", true);
  json_out::string(out, file.format);
  json_out::key(out, "version");
  json_out::integer(out, file.version);
  json_out::key(out, "meta");
  out += '{';
  bool first = true;
  for (const auto& [name, value] : file.meta) {
    json_out::key(out, name, first);
    json_out::number(out, value);
    first = false;
  }
  out += '}';
  json_out::key(out, "arrays");
  out += "{\n";
  first = true;
  for (const auto& [name, m] : file.arrays) {
    if (!first) out += ",\n";
    json_out::string(out, name);
    out += ":{\"shape\":[";
    json_out::integer(out, static_cast<long long>(m.rows()));
    out += ',';
    json_out::integer(out, static_cast<long long>(m.cols()));
    out += "],\"data\":";
    json_out::numbers(out, m.data());
    out += '}';
    first = false;
  }
  out += "\n}}\n";
  return out;
}

ArrayFile parse(const std::string& text) {
  ArrayFile file;
  try {
    const auto j = nlohmann::json::parse(text);
    file.format = j.at("format").get<std::string>();
    file.version = j.at("version").get<int>();
    for (const auto& [name, value] : j.at("meta").items())
      file.meta[name] = value.get<double>();
    for (const auto& [name, value] : j.at("arrays").items()) {
      const auto shape = value.at("shape").get<std::vector<std::size_t>>();
      auto data = value.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] * shape[1] != data.size())
        fail(ErrorKind::Io, "array '" + name + "' shape does not match its data");
      file.arrays.emplace(name, Matrix(shape[0], shape[1], std::move(data)));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, std::string("malformed weight file: ") + e.what());
  }
  return file;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open '" + tmp + "' for writing");
    out << text;
    if (!out) fail(ErrorKind::Io, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

void save(const ArrayFile& file, const std::string& path) { write_text(path, serialize(file)); }

ArrayFile load(const std::string& path) { return parse(read_text(path)); }

}  // namespace mmsel::persist
