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

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmsel/mmsel.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitOracle = 2;

struct ConfigDeleter {
  void operator()(mmsel_config* c) const { mmsel_config_destroy(c); }
};
struct CorpusDeleter {
  void operator()(mmsel_corpus* c) const { mmsel_corpus_destroy(c); }
};
struct ModelDeleter {
  void operator()(mmsel_model* m) const { mmsel_model_destroy(m); }
};
using ConfigPtr = std::unique_ptr<mmsel_config, ConfigDeleter>;
using CorpusPtr = std::unique_ptr<mmsel_corpus, CorpusDeleter>;
using ModelPtr = std::unique_ptr<mmsel_model, ModelDeleter>;

class Failure {
 public:
  explicit Failure(mmsel_status status) : status_(status) {}
  mmsel_status status() const { return status_; }

 private:
  mmsel_status status_;
};

void check(mmsel_status status) {
  if (status != MMSEL_OK) throw Failure(status);
}

struct Options {
  std::string config;
  std::string input;
  std::string output;
  std::string model;
  std::string labels;
  std::string embeddings;
  std::optional<std::uint64_t> seed;
  double tol = 1e-8;
  unsigned workers = 1;
  bool corrupt_marginals = false;
  std::size_t n_articles = 200;
  std::size_t images_per_article = 5;
  std::size_t dim = 16;
};

ConfigPtr load_config(const Options& o) {
  mmsel_config* raw = nullptr;
  if (o.config.empty())
    check(mmsel_config_create(&raw));
  else
    check(mmsel_config_load(o.config.c_str(), &raw));
  ConfigPtr config(raw);
  if (o.seed) check(mmsel_config_set(config.get(), "train.seed", std::to_string(*o.seed).c_str()));
  return config;
}

CorpusPtr load_corpus(const std::string& path, const mmsel_config* config) {
  mmsel_corpus* raw = nullptr;
  check(mmsel_corpus_load(path.c_str(), config, &raw));
  return CorpusPtr(raw);
}

double config_number(const mmsel_config* config, const char* key) {
  char buf[64];
  check(mmsel_config_get(config, key, buf, sizeof buf, nullptr));
  return std::stod(buf);
}

int run_label(const Options& o) {
  auto config = load_config(o);
  auto corpus = load_corpus(o.input, config.get());
  mmsel_label_summary s{};
  check(mmsel_label(corpus.get(), config.get(), o.output.c_str(), o.workers, &s));
  if (s.failed > 0) std::fprintf(stderr, "%s", mmsel_last_error());
  std::fprintf(stderr, "labelled %zu articles, %zu failed\n", s.labelled, s.failed);
  return kExitOk;
}

int run_train(const Options& o) {
  auto config = load_config(o);
  auto corpus = load_corpus(o.embeddings.empty() ? o.input : o.embeddings, config.get());
  const std::string& labels = o.labels.empty() ? o.input : o.labels;
  mmsel_train_summary s{};
  check(mmsel_train(corpus.get(), labels.c_str(), config.get(), o.model.c_str(), &s, nullptr));
  std::fprintf(stderr, "trained on %zu articles (%zu held out, %zu unlabelled) for %zu epochs\n",
               s.train_articles, s.heldout_articles, s.skipped_articles, s.epochs);
  std::fprintf(stderr, "final loss %.6g, train MAE %.6g", s.final_loss, s.train_mae);
  if (!std::isnan(s.heldout_mae)) std::fprintf(stderr, ", held-out MAE %.6g", s.heldout_mae);
  std::fprintf(stderr, "\n");
  return kExitOk;
}

int run_select(const Options& o) {
  auto config = load_config(o);
  auto corpus = load_corpus(o.embeddings.empty() ? o.input : o.embeddings, config.get());
  mmsel_model* raw = nullptr;
  check(mmsel_model_load(o.model.c_str(), &raw));
  ModelPtr model(raw);
  check(mmsel_select(model.get(), corpus.get(), config.get(), o.output.c_str(), o.workers));
  return kExitOk;
}

int run_eval(const Options& o) {
  auto config = load_config(o);
  auto corpus = load_corpus(o.embeddings, config.get());
  mmsel_eval_summary s{};
  check(mmsel_eval(o.input.c_str(), corpus.get(), config.get(), o.output.c_str(), o.workers, &s));
  std::printf("articles %zu, scored %zu, mean PCD %.4f, max PCD %.4f", s.articles,
              s.scored_articles, s.mean_pcd, s.max_pcd);
  if (!std::isnan(s.mean_ip)) std::printf(", IP %.4f over %zu articles", s.mean_ip, s.ip_articles);
  std::printf("\n");
  return kExitOk;
}

int run_oracle(const Options& o) {
  auto config = load_config(o);
  auto corpus = load_corpus(o.input, config.get());
  mmsel_oracle_options opts;
  mmsel_oracle_options_init(&opts);
  opts.tol = o.tol;
  opts.workers = o.workers;
  opts.corrupt_marginals = o.corrupt_marginals ? 1 : 0;
  mmsel_oracle_summary s{};
  const mmsel_status status = mmsel_oracle(corpus.get(), config.get(), &opts, &s, nullptr, 0);
  if (status == MMSEL_ERR_ORACLE_VIOLATION) {
    std::fprintf(stderr, "%s", mmsel_last_error());
    std::fprintf(stderr, "oracle: %zu violations in %zu checks over %zu articles\n", s.violations,
                 s.checks, s.articles);
    return kExitOracle;
  }
  check(status);
  std::printf("oracle: %zu checks over %zu articles passed (tol %g)\n", s.checks, s.articles, o.tol);
  return kExitOk;
}

int run_synth(const Options& o) {
  auto config = load_config(o);
  const double mu = config_number(config.get(), "teacher.mu");
  const auto seed = o.seed.value_or(1);
  check(mmsel_synthesize(o.embeddings.c_str(), o.labels.c_str(), o.n_articles,
                         o.images_per_article, o.dim, mu, seed));
  return kExitOk;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Key-value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Random seed (overrides train.seed)");
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::Range(1u, 1024u));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image selection by distilled determinantal point process marginals"};
  app.set_version_flag("--version", mmsel_version());
  app.require_subcommand(1);
  Options o;

  auto* label = app.add_subcommand("label", "Compute teacher marginals for every article");
  add_common(label, o);
  label->add_option("--input", o.input, "Corpus JSON-lines")->required();
  label->add_option("--output", o.output, "Label JSON-lines to write")->required();

  auto* train = app.add_subcommand("train", "Distill teacher labels into the student scorer");
  add_common(train, o);
  train->add_option("--input,--labels", o.labels, "Label JSON-lines")->required();
  train->add_option("--embeddings", o.embeddings, "Corpus JSON-lines")->required();
  train->add_option("--model,--output", o.model, "Model file to write")->required();

  auto* select = app.add_subcommand("select", "Select images with a trained student");
  add_common(select, o);
  select->add_option("--model", o.model, "Trained model file")->required();
  select->add_option("--input,--embeddings", o.embeddings, "Corpus JSON-lines")->required();
  select->add_option("--output", o.output, "Selection JSON-lines to write")->required();

  auto* eval = app.add_subcommand("eval", "Score selections for diversity and precision");
  add_common(eval, o);
  eval->add_option("--input", o.input, "Selection JSON-lines")->required();
  eval->add_option("--embeddings", o.embeddings, "Corpus JSON-lines")->required();
  eval->add_option("--output", o.output, "Per-article report JSON-lines")->required();

  auto* oracle = app.add_subcommand("oracle", "Check marginals and gradients against oracles");
  add_common(oracle, o);
  oracle->add_option("--input", o.input, "Corpus JSON-lines")->required();
  oracle->add_option("--tol", o.tol, "Marginal tolerance")->capture_default_str();
  oracle->add_flag("--corrupt-marginals", o.corrupt_marginals)->group("");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with realizable labels");
  add_common(synth, o);
  synth->add_option("--embeddings", o.embeddings, "Corpus JSON-lines to write")->required();
  synth->add_option("--labels", o.labels, "Label JSON-lines to write")->required();
  synth->add_option("--articles", o.n_articles)->capture_default_str();
  synth->add_option("--images", o.images_per_article)->capture_default_str();
  synth->add_option("--dim", o.dim)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*label) return run_label(o);
    if (*train) return run_train(o);
    if (*select) return run_select(o);
    if (*eval) return run_eval(o);
    if (*oracle) return run_oracle(o);
    if (*synth) return run_synth(o);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s: %s\n", mmsel_status_string(f.status()), mmsel_last_error());
    return kExitValidation;
  }
  return kExitValidation;
}
