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

#ifndef MMSEL_MMSEL_H
#define MMSEL_MMSEL_H

/* C interface to the mmsel image-selection toolkit.
 *
 * Every fallible call returns an mmsel_status. On failure a description is
 * available from mmsel_last_error() until the next call on the same thread.
 * Objects are opaque handles released with the matching _destroy call;
 * passing NULL to a _destroy call is a no-op. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MMSEL_BUILDING_LIBRARY)
#    define MMSEL_API __declspec(dllexport)
#  else
#    define MMSEL_API __declspec(dllimport)
#  endif
#else
#  define MMSEL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mmsel_status {
  MMSEL_OK = 0,
  MMSEL_ERR_INVALID_ARGUMENT = 1, /* NULL handle, bad buffer */
  MMSEL_ERR_INVALID_INPUT = 2,
  MMSEL_ERR_INVALID_MATRIX = 3,
  MMSEL_ERR_INDEX = 4,
  MMSEL_ERR_ORACLE_TOO_LARGE = 5,
  MMSEL_ERR_DIVERGENCE = 6,
  MMSEL_ERR_DEGENERATE = 7, /* zero pooled or projected vector */
  MMSEL_ERR_UNDEFINED_METRIC = 8,
  MMSEL_ERR_INGEST = 9,
  MMSEL_ERR_CONFIG = 10,
  MMSEL_ERR_IO = 11,
  MMSEL_ERR_ORACLE_VIOLATION = 12,
  MMSEL_ERR_BUFFER_TOO_SMALL = 13,
  MMSEL_ERR_INTERNAL = 99
} mmsel_status;

MMSEL_API const char* mmsel_version(void);
MMSEL_API const char* mmsel_status_string(mmsel_status status);
/* Message for the most recent failure on this thread; "" after success. */
MMSEL_API const char* mmsel_last_error(void);

/* ---- configuration ------------------------------------------------------ */

typedef struct mmsel_config mmsel_config;

/* Defaults for every key. */
MMSEL_API mmsel_status mmsel_config_create(mmsel_config** out);
/* Parses a `key = value` file; missing keys keep their defaults. */
MMSEL_API mmsel_status mmsel_config_load(const char* path, mmsel_config** out);
MMSEL_API mmsel_status mmsel_config_set(mmsel_config* config, const char* key, const char* value);
/* Writes the value as text. With a too-small buffer returns
 * MMSEL_ERR_BUFFER_TOO_SMALL and stores the needed size (with NUL) in
 * *needed when non-NULL. */
MMSEL_API mmsel_status mmsel_config_get(const mmsel_config* config, const char* key, char* buf,
                                        size_t buf_len, size_t* needed);
MMSEL_API void mmsel_config_destroy(mmsel_config* config);

/* ---- corpora ------------------------------------------------------------ */

typedef struct mmsel_corpus mmsel_corpus;

/* Reads JSON-lines embeddings, truncating each image pool to the config's
 * pool_cap. */
MMSEL_API mmsel_status mmsel_corpus_load(const char* path, const mmsel_config* config,
                                         mmsel_corpus** out);
MMSEL_API size_t mmsel_corpus_size(const mmsel_corpus* corpus);
MMSEL_API size_t mmsel_corpus_image_count(const mmsel_corpus* corpus, size_t article);
MMSEL_API void mmsel_corpus_destroy(mmsel_corpus* corpus);

/* Writes a synthetic corpus whose targets are a logistic function of each
 * image embedding, plus the matching label file. */
MMSEL_API mmsel_status mmsel_synthesize(const char* embeddings_path, const char* labels_path,
                                        size_t n_articles, size_t images_per_article,
                                        size_t dim, double mu, uint64_t seed);

/* ---- student models ----------------------------------------------------- */

typedef struct mmsel_model mmsel_model;

MMSEL_API mmsel_status mmsel_model_load(const char* path, mmsel_model** out);
MMSEL_API mmsel_status mmsel_model_save(const mmsel_model* model, const char* path);
MMSEL_API size_t mmsel_model_input_dim(const mmsel_model* model);
/* Logit for one embedding of length input_dim, eval mode. */
MMSEL_API mmsel_status mmsel_model_logit(const mmsel_model* model, const double* embedding,
                                         size_t dim, double* logit);
MMSEL_API void mmsel_model_destroy(mmsel_model* model);

/* ---- pipeline commands -------------------------------------------------- */

typedef struct mmsel_label_summary {
  size_t labelled;
  size_t failed;
} mmsel_label_summary;

/* Teacher labels for every article as JSON-lines. Failed articles get an
 * error row and are counted in summary->failed; the call still returns
 * MMSEL_OK. */
MMSEL_API mmsel_status mmsel_label(const mmsel_corpus* corpus, const mmsel_config* config,
                                   const char* output_path, unsigned workers,
                                   mmsel_label_summary* summary);

typedef struct mmsel_train_summary {
  size_t train_articles;
  size_t heldout_articles;
  size_t skipped_articles;
  size_t epochs;
  double final_loss;
  double train_mae;
  double heldout_mae; /* NaN when nothing is held out */
} mmsel_train_summary;

/* Trains on (corpus, labels file), writes the model and a
 * `<model>.loss.json` sidecar. The trained model is returned through
 * *model_out when non-NULL. */
MMSEL_API mmsel_status mmsel_train(const mmsel_corpus* corpus, const char* labels_path,
                                   const mmsel_config* config, const char* model_path,
                                   mmsel_train_summary* summary, mmsel_model** model_out);

MMSEL_API mmsel_status mmsel_select(const mmsel_model* model, const mmsel_corpus* corpus,
                                    const mmsel_config* config, const char* output_path,
                                    unsigned workers);

typedef struct mmsel_eval_summary {
  size_t articles;
  size_t scored_articles;
  double mean_pcd;
  double max_pcd;
  size_t ip_articles;
  double mean_ip; /* NaN when no article carries gold labels */
} mmsel_eval_summary;

MMSEL_API mmsel_status mmsel_eval(const char* selections_path, const mmsel_corpus* corpus,
                                  const mmsel_config* config, const char* output_path,
                                  unsigned workers, mmsel_eval_summary* summary);

typedef struct mmsel_oracle_options {
  double tol;        /* marginal agreement tolerance, default 1e-8 */
  unsigned workers;
  int corrupt_marginals; /* test hook */
} mmsel_oracle_options;

MMSEL_API void mmsel_oracle_options_init(mmsel_oracle_options* options);

typedef struct mmsel_oracle_summary {
  size_t articles;
  size_t checks;
  size_t violations;
} mmsel_oracle_summary;

/* Returns MMSEL_ERR_ORACLE_VIOLATION when any check fails. The report
 * (one line per violation) is copied into `report` when non-NULL,
 * truncated to report_len - 1 characters. */
MMSEL_API mmsel_status mmsel_oracle(const mmsel_corpus* corpus, const mmsel_config* config,
                                    const mmsel_oracle_options* options,
                                    mmsel_oracle_summary* summary, char* report,
                                    size_t report_len);

/* ---- numeric entry points ----------------------------------------------- */

/* Teacher marginals for an explicit n x n row-major kernel. Writes t* and
 * pi[n]. `kernel` must be symmetric. */
MMSEL_API mmsel_status mmsel_dpp_marginals(const double* kernel, size_t n, double mu,
                                           double* t_star, double* pi);

/* Exhaustive-enumeration marginals of the kernel at temperature t > 0. */
MMSEL_API mmsel_status mmsel_dpp_brute_force_marginals(const double* kernel, size_t n, double t,
                                                       double* pi);

/* Student loss and its gradient (grad may be NULL). */
MMSEL_API mmsel_status mmsel_vrp_loss(const double* z, const double* pi, size_t k, double mu,
                                      double alpha, double* loss, double* grad);

#ifdef __cplusplus
}
#endif

#endif /* MMSEL_MMSEL_H */
