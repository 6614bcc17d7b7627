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

#ifndef MMSEL_CORE_PIPELINE_HPP
#define MMSEL_CORE_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "article.hpp"
#include "config.hpp"
#include "dpp_teacher.hpp"
#include "vrp_student.hpp"

namespace mmsel::pipeline {

// File-level commands behind the CLI. Output rows always follow input
// order, whatever the worker count.

struct LabelRow {
  std::string id;
  double t_star = 0.0;
  Vector pi;
};

struct LabelSummary {
  std::size_t labelled = 0;
  std::vector<std::string> errors;  // one message per failed article
};

/// `{"id":...,"t_star":...,"pi":[...]}` per article; a failed article gets
/// `{"id":...,"error":"..."}` and the run continues.
LabelSummary cmd_label(const std::vector<ArticleRecord>& articles, const Config& config,
                       const std::string& output_path, unsigned workers);
std::string format_label_row(const std::string& id, const dpp::DppLabels& labels);

/// Reads label rows, skipping error rows.
std::vector<LabelRow> parse_labels(const std::string& text);
std::vector<LabelRow> read_labels(const std::string& path);

struct TrainSummary {
  std::size_t train_articles = 0;
  std::size_t heldout_articles = 0;
  std::size_t skipped_articles = 0;  // no label row
  std::vector<double> loss_curve;
  double train_mae = 0.0;
  std::optional<double> heldout_mae;
};

/// Pairs articles with labels by id, holds out the trailing
/// `config.holdout` fraction, trains, and writes the model plus a
/// `<model>.loss.json` sidecar.
TrainSummary cmd_train(const std::vector<ArticleRecord>& articles,
                       const std::vector<LabelRow>& labels, const Config& config,
                       const std::string& model_path);
std::string sidecar_path(const std::string& model_path);

/// `{"id":...,"rule":...,"image_ids":[...],"indices":[...],"probabilities":[...]}`.
std::size_t cmd_select(const vrp::StudentModel& model, const std::vector<ArticleRecord>& articles,
                       const Config& config, const std::string& output_path, unsigned workers);

struct EvalSummary {
  std::size_t articles = 0;
  std::size_t scored_articles = 0;  // at least one pair after filtering
  double mean_pcd = 0.0;            // averaged over scored articles
  double max_pcd = 0.0;
  std::size_t ip_articles = 0;
  std::optional<double> mean_ip;
};

/// Relevance filter + pairwise cosine distance + image precision per
/// selection row: `{"id","filtered_count","mean_pcd","max_pcd","n_pairs","ip"}`.
/// `ip` is null when the article has no gold annotations or the selection
/// is empty.
EvalSummary cmd_eval(const std::string& selections_path, const std::vector<ArticleRecord>& articles,
                     const Config& config, const std::string& output_path, unsigned workers);

struct OracleOptions {
  double tol = 1e-8;
  unsigned workers = 1;
  bool corrupt_marginals = false;  // test hook: perturbs the eigen path
};

struct OracleReport {
  std::size_t articles = 0;
  std::size_t checks = 0;
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

inline constexpr double kLossGradTol = 1e-6;
inline constexpr double kBackpropGradTol = 1e-4;
inline constexpr double kCardinalityTol = 1e-6;

/// Per article: eigen marginals against exhaustive enumeration (at t* and
/// t = 1), calibration of sum(pi), and finite-difference checks of the
/// student loss, student backprop and alignment-loss gradients.
OracleReport cmd_oracle(const std::vector<ArticleRecord>& articles, const Config& config,
                        const OracleOptions& options);

}  // namespace mmsel::pipeline

#endif  // MMSEL_CORE_PIPELINE_HPP
