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

#ifndef MMSEL_CORE_VRP_STUDENT_HPP
#define MMSEL_CORE_VRP_STUDENT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "article.hpp"
#include "matrix.hpp"
#include "persist.hpp"
#include "rng.hpp"

namespace mmsel::vrp {

/// Two-layer scorer z = w2 . drop(gelu(W1 v + b1)) + b2 with exact GELU.
struct StudentModel {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Matrix w1;  // hidden x input
  Vector b1;  // hidden
  Vector w2;  // hidden
  double b2 = 0.0;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;

  /// Glorot-uniform weights, zero biases.
  static StudentModel initialize(std::size_t input_dim, std::size_t hidden_dim,
                                 double dropout_rate, std::uint64_t seed);
  static StudentModel zeros(std::size_t input_dim, std::size_t hidden_dim);

  /// Throws InvalidInput on inconsistent shapes or non-finite parameters.
  void validate() const;

  bool operator==(const StudentModel&) const = default;
};

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 200;
  double alpha = 0.3;
  double mu = 3.0;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;
  std::size_t hidden_dim = 256;
  double dropout = 0.1;
  std::size_t batch_articles = 8;

  void validate() const;
};

/// One article's image embeddings (rows) and teacher marginals.
struct TrainingExample {
  Matrix embeddings;
  Vector pi;
};

struct LossAndGrad {
  double loss = 0.0;
  Vector dloss_dz;
};

struct StudentGradients {
  Matrix w1;
  Vector b1;
  Vector w2;
  double b2 = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  StudentModel model;
  std::vector<double> loss_curve;  // mean training loss after each epoch, eval mode
};

enum class SelectionRule { TopK, Threshold };

struct SelectionResult {
  std::vector<std::size_t> indices;
  std::vector<std::string> image_ids;
  Vector probabilities;  // one per candidate, in article order
  SelectionRule rule = SelectionRule::TopK;
};

double gelu(double x);
double gelu_derivative(double x);
double sigmoid(double x);
/// max(x, 0) + log1p(exp(-|x|))
double softplus(double x);

/// Dropout is applied only when `train_mode`; the mask is drawn from `rng`.
double student_forward(const StudentModel& model, std::span<const double> v,
                       bool train_mode, Rng& rng);
double student_logit(const StudentModel& model, std::span<const double> v);

/// (1/K) sum(softplus(z) - pi z) + alpha (sum sigmoid(z) - mu)^2 and its
/// gradient with respect to z.
LossAndGrad vrp_loss(std::span<const double> z, std::span<const double> pi, double mu,
                     double alpha);

/// Gradients of the mean per-article loss over `batch`. With `train_mode`
/// set, dropout masks come from `rng` and are shared by both passes.
StudentGradients backprop_student(const StudentModel& model,
                                  std::span<const TrainingExample> batch,
                                  const TrainConfig& config, bool train_mode, Rng& rng);

/// Mean per-article loss in eval mode.
double dataset_loss(const StudentModel& model, std::span<const TrainingExample> data,
                    double mu, double alpha);

/// Deterministic for a fixed seed. Throws DivergenceError when a loss
/// becomes non-finite.
TrainResult train_student(std::span<const TrainingExample> data, const TrainConfig& config);

/// Mean |sigmoid(z_i) - pi_i| over all images in `data`.
double mean_absolute_error(const StudentModel& model, std::span<const TrainingExample> data);

SelectionResult select_images(const StudentModel& model, const ArticleRecord& article,
                              SelectionRule rule, std::size_t budget, double threshold);

TrainingExample make_example(const ArticleRecord& article, std::span<const double> pi);

persist::ArrayFile to_array_file(const StudentModel& model);
StudentModel from_array_file(const persist::ArrayFile& file);
void save_model(const StudentModel& model, const std::string& path);
StudentModel load_model(const std::string& path);

}  // namespace mmsel::vrp

#endif  // MMSEL_CORE_VRP_STUDENT_HPP
