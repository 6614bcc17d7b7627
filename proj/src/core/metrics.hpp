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

#ifndef MMSEL_CORE_METRICS_HPP
#define MMSEL_CORE_METRICS_HPP

#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace mmsel::metrics {

inline constexpr double kDefaultRelevanceThreshold = 0.25;

/// Distances are 1 - cosine, reported x100, over unordered pairs.
struct DiversityReport {
  double mean_pcd = 0.0;
  double max_pcd = 0.0;
  std::size_t n_pairs = 0;
  std::size_t filtered_count = 0;  // number of embeddings scored
};

/// Indices i with cos(summary, e_i) >= threshold, in input order.
std::vector<std::size_t> relevance_filter(std::span<const double> summary,
                                          std::span<const Vector> images, double threshold);

DiversityReport pairwise_cosine_distance(std::span<const Vector> embeddings);

/// 100 |selected ∩ gold| / |selected| with duplicate selections counted
/// once. Throws UndefinedMetric on an empty selection.
double image_precision(std::span<const std::string> selected, std::span<const std::string> gold);

}  // namespace mmsel::metrics

#endif  // MMSEL_CORE_METRICS_HPP
