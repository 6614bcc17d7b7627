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

#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "align.hpp"
#include "corpus.hpp"
#include "errors.hpp"
#include "gradcheck.hpp"
#include "json_out.hpp"
#include "metrics.hpp"
#include "persist.hpp"
#include "rng.hpp"

namespace mmsel::pipeline {

namespace {

using nlohmann::json;

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all threads join.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string join_rows(const std::vector<std::string>& rows) {
  std::string out;
  for (const auto& r : rows) out += r;
  return out;
}

Vector flatten(const vrp::StudentModel& m) {
  Vector x(m.w1.data().begin(), m.w1.data().end());
  x.insert(x.end(), m.b1.begin(), m.b1.end());
  x.insert(x.end(), m.w2.begin(), m.w2.end());
  x.push_back(m.b2);
  return x;
}

Vector flatten(const vrp::StudentGradients& g) {
  Vector x(g.w1.data().begin(), g.w1.data().end());
  x.insert(x.end(), g.b1.begin(), g.b1.end());
  x.insert(x.end(), g.w2.begin(), g.w2.end());
  x.push_back(g.b2);
  return x;
}

void unflatten(vrp::StudentModel& m, const Vector& x) {
  std::size_t k = 0;
  for (double& w : m.w1.data()) w = x[k++];
  for (double& w : m.b1) w = x[k++];
  for (double& w : m.w2) w = x[k++];
  m.b2 = x[k];
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

struct ArticleChecks {
  std::size_t checks = 0;
  std::vector<std::string> violations;

  void expect(bool ok, const std::string& article, const std::string& what) {
    ++checks;
    if (!ok) violations.push_back("article '" + article + "': " + what);
  }
};

}  // namespace

std::string format_label_row(const std::string& id, const dpp::DppLabels& labels) {
  std::string out = "{";
  json_out::key(out, "id", true);
  json_out::string(out, id);
  json_out::key(out, "t_star");
  json_out::number(out, labels.t_star);
  json_out::key(out, "pi");
  json_out::numbers(out, labels.pi);
  out += "}\n";
  return out;
}

LabelSummary cmd_label(const std::vector<ArticleRecord>& articles, const Config& config,
                       const std::string& output_path, unsigned workers) {
  config.validate();
  std::vector<std::string> rows(articles.size());
  std::vector<std::string> errors(articles.size());
  parallel_for(articles.size(), workers, [&](std::size_t i) {
    try {
      rows[i] = format_label_row(articles[i].id, dpp::label_article(articles[i], config.teacher));
    } catch (const Error& e) {
      errors[i] = e.what();
      std::string row = "{";
      json_out::key(row, "id", true);
      json_out::string(row, articles[i].id);
      json_out::key(row, "error");
      json_out::string(row, e.what());
      row += "}\n";
      rows[i] = std::move(row);
    }
  });
  persist::write_text(output_path, join_rows(rows));
  LabelSummary summary;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    if (errors[i].empty())
      ++summary.labelled;
    else
      summary.errors.push_back("article '" + articles[i].id + "': " + errors[i]);
  }
  return summary;
}

std::vector<LabelRow> parse_labels(const std::string& text) {
  std::vector<LabelRow> out;
  for_each_line(text, [&](std::size_t number, const std::string& line) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IngestError(number, std::string("malformed label row: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string())
      throw IngestError(number, "label row needs a string 'id'");
    if (obj.contains("error")) return;
    if (!obj.contains("pi") || !obj["pi"].is_array())
      throw IngestError(number, "label row needs a 'pi' array");
    LabelRow row;
    row.id = obj["id"].get<std::string>();
    if (obj.contains("t_star") && obj["t_star"].is_number()) row.t_star = obj["t_star"].get<double>();
    for (const auto& p : obj["pi"]) {
      if (!p.is_number()) throw IngestError(number, "'pi' entries must be numbers");
      const double v = p.get<double>();
      if (!(v >= 0.0 && v <= 1.0)) throw IngestError(number, "'pi' entries must lie in [0, 1]");
      row.pi.push_back(v);
    }
    out.push_back(std::move(row));
  });
  return out;
}

std::vector<LabelRow> read_labels(const std::string& path) {
  return parse_labels(persist::read_text(path));
}

std::string sidecar_path(const std::string& model_path) { return model_path + ".loss.json"; }

TrainSummary cmd_train(const std::vector<ArticleRecord>& articles,
                       const std::vector<LabelRow>& labels, const Config& config,
                       const std::string& model_path) {
  config.validate();
  std::map<std::string, const LabelRow*> by_id;
  for (const auto& row : labels) by_id.emplace(row.id, &row);

  TrainSummary summary;
  std::vector<vrp::TrainingExample> examples;
  for (const auto& article : articles) {
    auto it = by_id.find(article.id);
    if (it == by_id.end()) {
      ++summary.skipped_articles;
      continue;
    }
    examples.push_back(vrp::make_example(article, it->second->pi));
  }
  if (examples.empty()) fail(ErrorKind::InvalidInput, "no labelled articles to train on");

  std::size_t n_held = static_cast<std::size_t>(std::floor(config.holdout * examples.size()));
  if (n_held >= examples.size()) n_held = examples.size() - 1;
  const std::size_t n_train = examples.size() - n_held;
  const std::span<const vrp::TrainingExample> train_set(examples.data(), n_train);
  const std::span<const vrp::TrainingExample> held_set(examples.data() + n_train, n_held);

  const vrp::TrainResult result = vrp::train_student(train_set, config.train);
  summary.train_articles = n_train;
  summary.heldout_articles = n_held;
  summary.loss_curve = result.loss_curve;
  summary.train_mae = vrp::mean_absolute_error(result.model, train_set);
  if (n_held > 0) summary.heldout_mae = vrp::mean_absolute_error(result.model, held_set);

  vrp::save_model(result.model, model_path);
  std::string side = "{";
  json_out::key(side, "train_articles", true);
  json_out::integer(side, static_cast<long long>(summary.train_articles));
  json_out::key(side, "heldout_articles");
  json_out::integer(side, static_cast<long long>(summary.heldout_articles));
  json_out::key(side, "skipped_articles");
  json_out::integer(side, static_cast<long long>(summary.skipped_articles));
  json_out::key(side, "train_mae");
  json_out::number(side, summary.train_mae);
  json_out::key(side, "heldout_mae");
  if (summary.heldout_mae)
    json_out::number(side, *summary.heldout_mae);
  else
    side += "null";
  json_out::key(side, "loss_curve");
  json_out::numbers(side, summary.loss_curve);
  side += "}\n";
  persist::write_text(sidecar_path(model_path), side);
  return summary;
}

std::size_t cmd_select(const vrp::StudentModel& model, const std::vector<ArticleRecord>& articles,
                       const Config& config, const std::string& output_path, unsigned workers) {
  config.validate();
  std::vector<std::string> rows(articles.size());
  parallel_for(articles.size(), workers, [&](std::size_t i) {
    const auto sel = vrp::select_images(model, articles[i], config.selection.rule,
                                        config.selection.budget, config.selection.threshold);
    std::string row = "{";
    json_out::key(row, "id", true);
    json_out::string(row, articles[i].id);
    json_out::key(row, "rule");
    json_out::string(row, sel.rule == vrp::SelectionRule::TopK ? "topk" : "threshold");
    json_out::key(row, "image_ids");
    row += '[';
    for (std::size_t k = 0; k < sel.image_ids.size(); ++k) {
      if (k) row += ',';
      json_out::string(row, sel.image_ids[k]);
    }
    row += ']';
    json_out::key(row, "indices");
    row += '[';
    for (std::size_t k = 0; k < sel.indices.size(); ++k) {
      if (k) row += ',';
      json_out::integer(row, static_cast<long long>(sel.indices[k]));
    }
    row += ']';
    json_out::key(row, "probabilities");
    json_out::numbers(row, sel.probabilities);
    row += "}\n";
    rows[i] = std::move(row);
  });
  persist::write_text(output_path, join_rows(rows));
  return articles.size();
}

EvalSummary cmd_eval(const std::string& selections_path, const std::vector<ArticleRecord>& articles,
                     const Config& config, const std::string& output_path, unsigned workers) {
  config.validate();
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < articles.size(); ++i) by_id.emplace(articles[i].id, i);

  struct Selection {
    std::size_t line;
    std::size_t article;
    std::vector<std::string> image_ids;
  };
  std::vector<Selection> selections;
  for_each_line(persist::read_text(selections_path), [&](std::size_t number, const std::string& line) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IngestError(number, std::string("malformed selection row: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("image_ids") || !obj["image_ids"].is_array())
      throw IngestError(number, "selection row needs 'id' and 'image_ids'");
    auto it = by_id.find(obj["id"].get<std::string>());
    if (it == by_id.end())
      throw IngestError(number, "unknown article '" + obj["id"].get<std::string>() + "'");
    Selection sel{number, it->second, {}};
    for (const auto& id : obj["image_ids"]) {
      if (!id.is_string()) throw IngestError(number, "image ids must be strings");
      sel.image_ids.push_back(id.get<std::string>());
    }
    selections.push_back(std::move(sel));
  });

  struct Row {
    metrics::DiversityReport diversity;
    std::optional<double> ip;
  };
  std::vector<Row> results(selections.size());
  parallel_for(selections.size(), workers, [&](std::size_t s) {
    const Selection& sel = selections[s];
    const ArticleRecord& article = articles[sel.article];
    std::vector<Vector> chosen;
    for (const auto& id : sel.image_ids) {
      auto img = std::find_if(article.images.begin(), article.images.end(),
                              [&](const ImageRecord& r) { return r.id == id; });
      if (img == article.images.end())
        throw IngestError(sel.line, "article '" + article.id + "' has no image '" + id + "'");
      chosen.push_back(img->embedding);
    }
    std::vector<Vector> kept;
    for (std::size_t k : metrics::relevance_filter(article.text_embedding, chosen,
                                                   config.relevance_threshold))
      kept.push_back(chosen[k]);
    results[s].diversity = metrics::pairwise_cosine_distance(kept);

    const bool annotated = std::any_of(article.images.begin(), article.images.end(),
                                       [](const ImageRecord& r) { return r.gold.has_value(); });
    if (annotated && !sel.image_ids.empty()) {
      std::vector<std::string> gold;
      for (const auto& r : article.images)
        if (r.gold.value_or(false)) gold.push_back(r.id);
      results[s].ip = metrics::image_precision(sel.image_ids, gold);
    }
  });

  EvalSummary summary;
  summary.articles = selections.size();
  std::string out;
  double pcd_sum = 0.0, ip_sum = 0.0;
  for (std::size_t s = 0; s < selections.size(); ++s) {
    const Row& r = results[s];
    out += '{';
    json_out::key(out, "id", true);
    json_out::string(out, articles[selections[s].article].id);
    json_out::key(out, "filtered_count");
    json_out::integer(out, static_cast<long long>(r.diversity.filtered_count));
    json_out::key(out, "mean_pcd");
    json_out::number(out, r.diversity.mean_pcd);
    json_out::key(out, "max_pcd");
    json_out::number(out, r.diversity.max_pcd);
    json_out::key(out, "n_pairs");
    json_out::integer(out, static_cast<long long>(r.diversity.n_pairs));
    json_out::key(out, "ip");
    if (r.ip)
      json_out::number(out, *r.ip);
    else
      out += "null";
    out += "}\n";
    if (r.diversity.n_pairs > 0) {
      ++summary.scored_articles;
      pcd_sum += r.diversity.mean_pcd;
      summary.max_pcd = std::max(summary.max_pcd, r.diversity.max_pcd);
    }
    if (r.ip) {
      ++summary.ip_articles;
      ip_sum += *r.ip;
    }
  }
  if (summary.scored_articles > 0) summary.mean_pcd = pcd_sum / summary.scored_articles;
  if (summary.ip_articles > 0) summary.mean_ip = ip_sum / summary.ip_articles;
  persist::write_text(output_path, out);
  return summary;
}

OracleReport cmd_oracle(const std::vector<ArticleRecord>& articles, const Config& config,
                        const OracleOptions& options) {
  config.validate();
  if (!(options.tol > 0.0)) fail(ErrorKind::InvalidInput, "oracle tolerance must be positive");

  // Alignment batch shared by every article: teacher text and pooled images.
  align::AlignBatch shared;
  shared.tau = config.align.tau;
  for (const auto& a : articles) {
    shared.t_sig.push_back(a.text_embedding);
    std::vector<Vector> imgs;
    for (const auto& img : a.images) imgs.push_back(img.embedding);
    try {
      shared.v_sig.push_back(align::pooled_visual_embedding(imgs));
    } catch (const Error&) {
      shared.v_sig.push_back(a.text_embedding);
    }
  }

  std::vector<ArticleChecks> per_article(articles.size());
  parallel_for(articles.size(), options.workers, [&](std::size_t idx) {
    const ArticleRecord& article = articles[idx];
    ArticleChecks& out = per_article[idx];
    const auto& teacher = config.teacher;
    const std::size_t n = article.images.size();

    const dpp::KernelBundle bundle = dpp::build_kernel(article, teacher);
    const dpp::DppLabels labels = dpp::label_article(article, teacher);
    const double target = std::min(teacher.mu, static_cast<double>(n));
    double sum = 0.0;
    for (double p : labels.pi) sum += p;
    out.expect(std::fabs(sum - target) <= kCardinalityTol, article.id,
               "sum of marginals " + fmt(sum) + " misses target " + fmt(target));

    if (n <= dpp::kMaxOracleSize) {
      std::vector<double> temps{1.0};
      if (labels.t_star > 0.0) temps.push_back(labels.t_star);
      for (double t : temps) {
        Vector eig_path = dpp::marginals(labels.eigen, t);
        if (options.corrupt_marginals) eig_path[0] = std::min(1.0, eig_path[0] + 1e-3) - 5e-4;
        const Vector exact = dpp::brute_force_marginals(bundle.kernel, t);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::fabs(eig_path[i] - exact[i]));
        out.expect(diff <= options.tol, article.id,
                   "eigen marginals differ from enumeration by " + fmt(diff) + " at t=" + fmt(t) +
                       " (tol " + fmt(options.tol) + ")");
      }
    }
    if (labels.t_star == 0.0 && teacher.mu >= static_cast<double>(n))
      out.expect(std::all_of(labels.pi.begin(), labels.pi.end(), [](double p) { return p == 1.0; }),
                 article.id, "clamped article must select every image");

    Rng rng(0x5eed0000ULL + idx);
    // Student loss gradient.
    Vector z(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(labels.pi[i], 0.05, 0.95);
      z[i] = std::log(p / (1.0 - p)) + 0.5 * rng.normal();
    }
    const auto lg = vrp::vrp_loss(z, labels.pi, config.train.mu, config.train.alpha);
    const Vector num_z = gradcheck::central_difference(
        [&](const Vector& x) { return vrp::vrp_loss(x, labels.pi, config.train.mu, config.train.alpha).loss; },
        z);
    const double err_z = gradcheck::relative_error(lg.dloss_dz, num_z);
    out.expect(err_z <= kLossGradTol, article.id,
               "student loss gradient relative error " + fmt(err_z));

    // Full student backprop with dropout off.
    vrp::TrainConfig tc = config.train;
    tc.dropout = 0.0;
    vrp::StudentModel model = vrp::StudentModel::initialize(article.dim(), 8, 0.0, rng.next());
    const vrp::TrainingExample example = vrp::make_example(article, labels.pi);
    const std::span<const vrp::TrainingExample> batch(&example, 1);
    const Vector analytic = flatten(vrp::backprop_student(model, batch, tc, false, rng));
    const Vector numeric = gradcheck::central_difference(
        [&](const Vector& x) {
          vrp::StudentModel m = model;
          unflatten(m, x);
          return vrp::dataset_loss(m, batch, tc.mu, tc.alpha);
        },
        flatten(model));
    const double err_bp = gradcheck::relative_error(analytic, numeric);
    out.expect(err_bp <= kBackpropGradTol, article.id,
               "student backprop relative error " + fmt(err_bp));

    // Alignment loss gradient against up to 16 other articles.
    align::AlignBatch batch_align;
    batch_align.tau = shared.tau;
    batch_align.t_sig = shared.t_sig;
    batch_align.v_sig = shared.v_sig;
    Vector t_stu = article.text_embedding;
    for (double& x : t_stu) x += 0.1 * rng.normal();
    batch_align.t_stu = normalized(t_stu);
    for (std::size_t j = 0; j < articles.size() && batch_align.negatives.size() < 16; ++j)
      if (j != idx) batch_align.negatives.push_back(j);
    const auto al = align::alignment_loss(batch_align, idx);
    const Vector num_t = gradcheck::central_difference(
        [&](const Vector& x) {
          align::AlignBatch b = batch_align;
          b.t_stu = x;
          return align::alignment_loss(b, idx).loss;
        },
        batch_align.t_stu);
    const double err_al = gradcheck::relative_error(al.dloss_dt_stu, num_t);
    out.expect(err_al <= kLossGradTol, article.id,
               "alignment loss gradient relative error " + fmt(err_al));
  });

  OracleReport report;
  report.articles = articles.size();
  for (auto& a : per_article) {
    report.checks += a.checks;
    for (auto& v : a.violations) report.violations.push_back(std::move(v));
  }
  return report;
}

}  // namespace mmsel::pipeline
