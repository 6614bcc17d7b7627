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

#include "mmsel/mmsel.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <new>
#include <string>

#include "../core/config.hpp"
#include "../core/corpus.hpp"
#include "../core/dpp_teacher.hpp"
#include "../core/errors.hpp"
#include "../core/json_out.hpp"
#include "../core/persist.hpp"
#include "../core/pipeline.hpp"
#include "../core/synthetic.hpp"
#include "../core/vrp_student.hpp"

struct mmsel_config {
  mmsel::Config value;
};

struct mmsel_corpus {
  std::vector<mmsel::ArticleRecord> articles;
};

struct mmsel_model {
  mmsel::vrp::StudentModel value;
};

namespace {

thread_local std::string g_last_error;

mmsel_status status_for(mmsel::ErrorKind kind) {
  using mmsel::ErrorKind;
  switch (kind) {
    case ErrorKind::InvalidInput: return MMSEL_ERR_INVALID_INPUT;
    case ErrorKind::InvalidMatrix: return MMSEL_ERR_INVALID_MATRIX;
    case ErrorKind::Index: return MMSEL_ERR_INDEX;
    case ErrorKind::OracleTooLarge: return MMSEL_ERR_ORACLE_TOO_LARGE;
    case ErrorKind::Divergence: return MMSEL_ERR_DIVERGENCE;
    case ErrorKind::DegeneratePool:
    case ErrorKind::DegenerateProjection: return MMSEL_ERR_DEGENERATE;
    case ErrorKind::UndefinedMetric: return MMSEL_ERR_UNDEFINED_METRIC;
    case ErrorKind::Ingest: return MMSEL_ERR_INGEST;
    case ErrorKind::Config: return MMSEL_ERR_CONFIG;
    case ErrorKind::Io: return MMSEL_ERR_IO;
  }
  return MMSEL_ERR_INTERNAL;
}

mmsel_status set_error(mmsel_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

/// Runs `body`, translating exceptions into status codes.
template <typename F>
mmsel_status guarded(F&& body) noexcept {
  try {
    g_last_error.clear();
    return body();
  } catch (const mmsel::Error& e) {
    return set_error(status_for(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(MMSEL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(MMSEL_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(MMSEL_ERR_INTERNAL, "unknown error");
  }
}

#define MMSEL_REQUIRE(cond, what)                                   \
  do {                                                              \
    if (!(cond)) return set_error(MMSEL_ERR_INVALID_ARGUMENT, what); \
  } while (0)

mmsel::linalg::SymMatrix kernel_from(const double* data, std::size_t n) {
  return mmsel::linalg::SymMatrix(mmsel::Matrix(n, n, std::vector<double>(data, data + n * n)));
}

}  // namespace

extern "C" {

const char* mmsel_version(void) { return "1.0.0"; }

const char* mmsel_status_string(mmsel_status status) {
  switch (status) {
    case MMSEL_OK: return "ok";
    case MMSEL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MMSEL_ERR_INVALID_INPUT: return "invalid input";
    case MMSEL_ERR_INVALID_MATRIX: return "invalid matrix";
    case MMSEL_ERR_INDEX: return "index out of range";
    case MMSEL_ERR_ORACLE_TOO_LARGE: return "oracle too large";
    case MMSEL_ERR_DIVERGENCE: return "training diverged";
    case MMSEL_ERR_DEGENERATE: return "degenerate vector";
    case MMSEL_ERR_UNDEFINED_METRIC: return "undefined metric";
    case MMSEL_ERR_INGEST: return "ingest error";
    case MMSEL_ERR_CONFIG: return "config error";
    case MMSEL_ERR_IO: return "i/o error";
    case MMSEL_ERR_ORACLE_VIOLATION: return "oracle violation";
    case MMSEL_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case MMSEL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mmsel_last_error(void) { return g_last_error.c_str(); }

mmsel_status mmsel_config_create(mmsel_config** out) {
  return guarded([&] {
    MMSEL_REQUIRE(out, "out is NULL");
    *out = new mmsel_config{};
    return MMSEL_OK;
  });
}

mmsel_status mmsel_config_load(const char* path, mmsel_config** out) {
  return guarded([&] {
    MMSEL_REQUIRE(path && out, "path or out is NULL");
    *out = new mmsel_config{mmsel::Config::load(path)};
    return MMSEL_OK;
  });
}

mmsel_status mmsel_config_set(mmsel_config* config, const char* key, const char* value) {
  return guarded([&] {
    MMSEL_REQUIRE(config && key && value, "NULL argument");
    mmsel::Config next = config->value;
    next.set(key, value);
    next.validate();
    config->value = next;
    return MMSEL_OK;
  });
}

mmsel_status mmsel_config_get(const mmsel_config* config, const char* key, char* buf,
                              size_t buf_len, size_t* needed) {
  return guarded([&] {
    MMSEL_REQUIRE(config && key, "NULL argument");
    const std::string text = config->value.get(key);
    if (needed) *needed = text.size() + 1;
    if (!buf || buf_len < text.size() + 1)
      return set_error(MMSEL_ERR_BUFFER_TOO_SMALL, "buffer too small for '" + std::string(key) + "'");
    std::memcpy(buf, text.c_str(), text.size() + 1);
    return MMSEL_OK;
  });
}

void mmsel_config_destroy(mmsel_config* config) { delete config; }

mmsel_status mmsel_corpus_load(const char* path, const mmsel_config* config, mmsel_corpus** out) {
  return guarded([&] {
    MMSEL_REQUIRE(path && config && out, "NULL argument");
    *out = new mmsel_corpus{mmsel::ingest(path, config->value.pool_cap)};
    return MMSEL_OK;
  });
}

size_t mmsel_corpus_size(const mmsel_corpus* corpus) { return corpus ? corpus->articles.size() : 0; }

size_t mmsel_corpus_image_count(const mmsel_corpus* corpus, size_t article) {
  if (!corpus || article >= corpus->articles.size()) return 0;
  return corpus->articles[article].images.size();
}

void mmsel_corpus_destroy(mmsel_corpus* corpus) { delete corpus; }

mmsel_status mmsel_synthesize(const char* embeddings_path, const char* labels_path,
                              size_t n_articles, size_t images_per_article, size_t dim, double mu,
                              uint64_t seed) {
  return guarded([&] {
    MMSEL_REQUIRE(embeddings_path && labels_path, "NULL path");
    mmsel::synthetic::DistillableSpec spec;
    spec.n_articles = n_articles;
    spec.images_per_article = images_per_article;
    spec.dim = dim;
    spec.mu = mu;
    spec.seed = seed;
    const auto corpus = mmsel::synthetic::distillable_corpus(spec);
    mmsel::persist::write_text(embeddings_path, mmsel::format_corpus(corpus.articles));
    std::string labels;
    for (std::size_t a = 0; a < corpus.articles.size(); ++a) {
      labels += '{';
      mmsel::json_out::key(labels, "id", true);
      mmsel::json_out::string(labels, corpus.articles[a].id);
      mmsel::json_out::key(labels, "pi");
      mmsel::json_out::numbers(labels, corpus.pi[a]);
      labels += "}\n";
    }
    mmsel::persist::write_text(labels_path, labels);
    return MMSEL_OK;
  });
}

mmsel_status mmsel_model_load(const char* path, mmsel_model** out) {
  return guarded([&] {
    MMSEL_REQUIRE(path && out, "NULL argument");
    *out = new mmsel_model{mmsel::vrp::load_model(path)};
    return MMSEL_OK;
  });
}

mmsel_status mmsel_model_save(const mmsel_model* model, const char* path) {
  return guarded([&] {
    MMSEL_REQUIRE(model && path, "NULL argument");
    mmsel::vrp::save_model(model->value, path);
    return MMSEL_OK;
  });
}

size_t mmsel_model_input_dim(const mmsel_model* model) { return model ? model->value.input_dim : 0; }

mmsel_status mmsel_model_logit(const mmsel_model* model, const double* embedding, size_t dim,
                               double* logit) {
  return guarded([&] {
    MMSEL_REQUIRE(model && embedding && logit, "NULL argument");
    *logit = mmsel::vrp::student_logit(model->value, std::span<const double>(embedding, dim));
    return MMSEL_OK;
  });
}

void mmsel_model_destroy(mmsel_model* model) { delete model; }

mmsel_status mmsel_label(const mmsel_corpus* corpus, const mmsel_config* config,
                         const char* output_path, unsigned workers, mmsel_label_summary* summary) {
  return guarded([&] {
    MMSEL_REQUIRE(corpus && config && output_path, "NULL argument");
    const auto s = mmsel::pipeline::cmd_label(corpus->articles, config->value, output_path, workers);
    if (summary) *summary = mmsel_label_summary{s.labelled, s.errors.size()};
    if (!s.errors.empty()) {
      std::string msg;
      for (const auto& e : s.errors) msg += e + "\n";
      g_last_error = msg;
    }
    return MMSEL_OK;
  });
}

mmsel_status mmsel_train(const mmsel_corpus* corpus, const char* labels_path,
                         const mmsel_config* config, const char* model_path,
                         mmsel_train_summary* summary, mmsel_model** model_out) {
  return guarded([&] {
    MMSEL_REQUIRE(corpus && labels_path && config && model_path, "NULL argument");
    const auto labels = mmsel::pipeline::read_labels(labels_path);
    const auto s = mmsel::pipeline::cmd_train(corpus->articles, labels, config->value, model_path);
    if (summary) {
      summary->train_articles = s.train_articles;
      summary->heldout_articles = s.heldout_articles;
      summary->skipped_articles = s.skipped_articles;
      summary->epochs = s.loss_curve.size();
      summary->final_loss = s.loss_curve.empty() ? std::nan("") : s.loss_curve.back();
      summary->train_mae = s.train_mae;
      summary->heldout_mae = s.heldout_mae.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    if (model_out) *model_out = new mmsel_model{mmsel::vrp::load_model(model_path)};
    return MMSEL_OK;
  });
}

mmsel_status mmsel_select(const mmsel_model* model, const mmsel_corpus* corpus,
                          const mmsel_config* config, const char* output_path, unsigned workers) {
  return guarded([&] {
    MMSEL_REQUIRE(model && corpus && config && output_path, "NULL argument");
    mmsel::pipeline::cmd_select(model->value, corpus->articles, config->value, output_path, workers);
    return MMSEL_OK;
  });
}

mmsel_status mmsel_eval(const char* selections_path, const mmsel_corpus* corpus,
                        const mmsel_config* config, const char* output_path, unsigned workers,
                        mmsel_eval_summary* summary) {
  return guarded([&] {
    MMSEL_REQUIRE(selections_path && corpus && config && output_path, "NULL argument");
    const auto s = mmsel::pipeline::cmd_eval(selections_path, corpus->articles, config->value,
                                             output_path, workers);
    if (summary) {
      summary->articles = s.articles;
      summary->scored_articles = s.scored_articles;
      summary->mean_pcd = s.mean_pcd;
      summary->max_pcd = s.max_pcd;
      summary->ip_articles = s.ip_articles;
      summary->mean_ip = s.mean_ip.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    return MMSEL_OK;
  });
}

void mmsel_oracle_options_init(mmsel_oracle_options* options) {
  if (!options) return;
  options->tol = 1e-8;
  options->workers = 1;
  options->corrupt_marginals = 0;
}

mmsel_status mmsel_oracle(const mmsel_corpus* corpus, const mmsel_config* config,
                          const mmsel_oracle_options* options, mmsel_oracle_summary* summary,
                          char* report, size_t report_len) {
  return guarded([&] {
    MMSEL_REQUIRE(corpus && config, "NULL argument");
    mmsel::pipeline::OracleOptions opts;
    if (options) {
      opts.tol = options->tol;
      opts.workers = options->workers;
      opts.corrupt_marginals = options->corrupt_marginals != 0;
    }
    const auto r = mmsel::pipeline::cmd_oracle(corpus->articles, config->value, opts);
    if (summary) *summary = mmsel_oracle_summary{r.articles, r.checks, r.violations.size()};
    std::string text;
    for (const auto& v : r.violations) text += v + "\n";
    if (report && report_len > 0) {
      const std::size_t n = std::min(text.size(), report_len - 1);
      std::memcpy(report, text.data(), n);
      report[n] = '\0';
    }
    if (!r.ok()) return set_error(MMSEL_ERR_ORACLE_VIOLATION, text);
    return MMSEL_OK;
  });
}

mmsel_status mmsel_dpp_marginals(const double* kernel, size_t n, double mu, double* t_star,
                                 double* pi) {
  return guarded([&] {
    MMSEL_REQUIRE(kernel && t_star && pi && n > 0, "NULL argument or empty kernel");
    const auto eig = mmsel::linalg::sym_eig(kernel_from(kernel, n));
    if (mu >= static_cast<double>(n)) {
      *t_star = 0.0;
      for (std::size_t i = 0; i < n; ++i) pi[i] = 1.0;
      return MMSEL_OK;
    }
    *t_star = mmsel::dpp::calibrate_temperature(eig, mu);
    const auto m = mmsel::dpp::marginals(eig, *t_star);
    std::copy(m.begin(), m.end(), pi);
    return MMSEL_OK;
  });
}

mmsel_status mmsel_dpp_brute_force_marginals(const double* kernel, size_t n, double t, double* pi) {
  return guarded([&] {
    MMSEL_REQUIRE(kernel && pi && n > 0, "NULL argument or empty kernel");
    const auto m = mmsel::dpp::brute_force_marginals(kernel_from(kernel, n), t);
    std::copy(m.begin(), m.end(), pi);
    return MMSEL_OK;
  });
}

mmsel_status mmsel_vrp_loss(const double* z, const double* pi, size_t k, double mu, double alpha,
                            double* loss, double* grad) {
  return guarded([&] {
    MMSEL_REQUIRE(z && pi && loss, "NULL argument");
    const auto r = mmsel::vrp::vrp_loss(std::span<const double>(z, k),
                                         std::span<const double>(pi, k), mu, alpha);
    *loss = r.loss;
    if (grad) std::copy(r.dloss_dz.begin(), r.dloss_dz.end(), grad);
    return MMSEL_OK;
  });
}

}  // extern "C"
