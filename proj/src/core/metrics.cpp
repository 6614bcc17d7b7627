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

#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "errors.hpp"

namespace mmsel::metrics {

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    fail(ErrorKind::InvalidInput, "embedding dimensions differ");
  const double aa = dot(a, a), bb = dot(b, b);
  if (aa == 0.0 || bb == 0.0) return 0.0;
  // sqrt(x * x) == x in IEEE arithmetic, so identical inputs give exactly 1.
  return std::clamp(dot(a, b) / std::sqrt(aa * bb), -1.0, 1.0);
}

}  // namespace

std::vector<std::size_t> relevance_filter(std::span<const double> summary,
                                          std::span<const Vector> images, double threshold) {
  if (!(threshold >= -1.0 && threshold <= 1.0))
    fail(ErrorKind::InvalidInput, "relevance threshold must lie in [-1, 1]");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < images.size(); ++i)
    if (cosine(summary, images[i]) >= threshold) kept.push_back(i);
  return kept;
}

DiversityReport pairwise_cosine_distance(std::span<const Vector> embeddings) {
  DiversityReport report;
  report.filtered_count = embeddings.size();
  if (embeddings.size() < 2) return report;
  double sum = 0.0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      const double dist = 100.0 * (1.0 - cosine(embeddings[i], embeddings[j]));
      sum += dist;
      report.max_pcd = std::max(report.max_pcd, dist);
      ++report.n_pairs;
    }
  }
  report.mean_pcd = std::min(sum / static_cast<double>(report.n_pairs), report.max_pcd);
  return report;
}

double image_precision(std::span<const std::string> selected, std::span<const std::string> gold) {
  const std::set<std::string> picks(selected.begin(), selected.end());
  if (picks.empty()) fail(ErrorKind::UndefinedMetric, "image precision of an empty selection");
  const std::set<std::string> truth(gold.begin(), gold.end());
  std::size_t hits = 0;
  for (const auto& id : picks) hits += truth.count(id);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(picks.size());
}

}  // namespace mmsel::metrics
