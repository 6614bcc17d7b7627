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

#include "corpus.hpp"

#include <json.hpp>

#include "errors.hpp"
#include "json_out.hpp"
#include "persist.hpp"

namespace mmsel {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw IngestError(line, std::string("missing field '") + field + "'");
  return *it;
}

Vector read_vector(const json& value, const std::string& what, std::size_t line) {
  if (!value.is_array() || value.empty())
    throw IngestError(line, what + " must be a non-empty array of numbers");
  Vector out;
  out.reserve(value.size());
  for (const auto& x : value) {
    if (!x.is_number()) throw IngestError(line, what + " contains a non-numeric entry");
    out.push_back(x.get<double>());
  }
  return out;
}

ArticleRecord parse_article(const std::string& text, std::size_t line, std::size_t pool_cap) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IngestError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw IngestError(line, "record must be a JSON object");

  ArticleRecord article;
  const json& id = require(obj, "id", line);
  if (!id.is_string()) throw IngestError(line, "'id' must be a string");
  article.id = id.get<std::string>();
  article.text_embedding = read_vector(require(obj, "text_embedding", line), "text_embedding", line);
  const std::size_t d = article.text_embedding.size();

  const json& images = require(obj, "images", line);
  if (!images.is_array() || images.empty())
    throw IngestError(line, "'images' must be a non-empty array");
  for (const auto& img : images) {
    if (!img.is_object()) throw IngestError(line, "image entries must be objects");
    ImageRecord rec;
    const json& image_id = require(img, "id", line);
    if (!image_id.is_string()) throw IngestError(line, "image 'id' must be a string");
    rec.id = image_id.get<std::string>();
    rec.embedding = read_vector(require(img, "embedding", line), "image '" + rec.id + "' embedding", line);
    if (rec.embedding.size() != d)
      throw IngestError(line, "image '" + rec.id + "' has dimension " +
                                  std::to_string(rec.embedding.size()) + ", text has " +
                                  std::to_string(d));
    if (auto g = img.find("gold"); g != img.end() && !g->is_null()) {
      if (!g->is_boolean()) throw IngestError(line, "image 'gold' must be a boolean");
      rec.gold = g->get<bool>();
    }
    article.images.push_back(std::move(rec));
  }
  if (article.images.size() > pool_cap) article.images.resize(pool_cap);
  try {
    normalize_article(article);
  } catch (const Error& e) {
    throw IngestError(line, e.what());
  }
  return article;
}

}  // namespace

std::vector<ArticleRecord> parse_corpus(const std::string& text, std::size_t pool_cap) {
  if (pool_cap < 1) fail(ErrorKind::InvalidInput, "pool_cap must be at least 1");
  std::vector<ArticleRecord> out;
  for_each_line(text, [&](std::size_t number, const std::string& line) {
    out.push_back(parse_article(line, number, pool_cap));
  });
  return out;
}

std::vector<ArticleRecord> ingest(const std::string& path, std::size_t pool_cap) {
  return parse_corpus(persist::read_text(path), pool_cap);
}

std::string format_corpus(const std::vector<ArticleRecord>& articles) {
  std::string out;
  for (const auto& a : articles) {
    out += '{';
    json_out::key(out, "id", true);
    json_out::string(out, a.id);
    json_out::key(out, "text_embedding");
    json_out::numbers(out, a.text_embedding);
    json_out::key(out, "images");
    out += '[';
    for (std::size_t i = 0; i < a.images.size(); ++i) {
      if (i) out += ',';
      out += '{';
      json_out::key(out, "id", true);
      json_out::string(out, a.images[i].id);
      json_out::key(out, "embedding");
      json_out::numbers(out, a.images[i].embedding);
      if (a.images[i].gold) {
        json_out::key(out, "gold");
        out += *a.images[i].gold ? "true" : "false";
      }
      out += '}';
    }
    out += "]}\n";
  }
  return out;
}

}  // namespace mmsel
