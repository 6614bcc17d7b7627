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

#ifndef MMSEL_CORE_CORPUS_HPP
#define MMSEL_CORE_CORPUS_HPP

#include <string>
#include <vector>

#include "article.hpp"

namespace mmsel {

/// Parses JSON-lines embeddings, one article per line:
///   {"id": "...", "text_embedding": [...],
///    "images": [{"id": "...", "embedding": [...], "gold": true}, ...]}
/// Embeddings are renormalized and each pool is truncated to the first
/// `pool_cap` images. Blank lines are skipped. Throws IngestError carrying
/// the 1-based line number.
std::vector<ArticleRecord> parse_corpus(const std::string& text, std::size_t pool_cap);
std::vector<ArticleRecord> ingest(const std::string& path, std::size_t pool_cap);

/// Serializes articles back to the JSON-lines layout above.
std::string format_corpus(const std::vector<ArticleRecord>& articles);

/// Calls `fn(line_number, line)` for every non-blank line.
template <typename F>
void for_each_line(const std::string& text, F&& fn) {
  std::size_t start = 0, number = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++number;
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) fn(number, line);
    start = end + 1;
  }
}

}  // namespace mmsel

#endif  // MMSEL_CORE_CORPUS_HPP
