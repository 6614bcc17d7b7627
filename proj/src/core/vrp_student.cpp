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

#include "vrp_student.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "errors.hpp"

namespace mmsel::vrp {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr std::uint64_t kTrainStream = 0x9e3779b97f4a7c15ULL;

struct Activations {
  Vector pre;   // W1 v + b1
  Vector kept;  // dropout scale per hidden unit: 0 or 1/(1-p), 1 in eval
  double z = 0.0;
};

void check_input(const StudentModel& model, std::span<const double> v) {
  if (v.size() != model.input_dim)
    fail(ErrorKind::InvalidInput, "embedding dimension " + std::to_string(v.size()) +
                                      " does not match model input " +
                                      std::to_string(model.input_dim));
}

Activations forward(const StudentModel& model, std::span<const double> v, bool train_mode,
                    Rng& rng) {
  check_input(model, v);
  Activations act;
  act.pre.resize(model.hidden_dim);
  act.kept.assign(model.hidden_dim, 1.0);
  const double p = model.dropout_rate;
  double z = model.b2;
  for (std::size_t h = 0; h < model.hidden_dim; ++h) {
    act.pre[h] = dot(model.w1.row(h), v) + model.b1[h];
    if (train_mode && p > 0.0) act.kept[h] = rng.uniform() < p ? 0.0 : 1.0 / (1.0 - p);
    z += model.w2[h] * gelu(act.pre[h]) * act.kept[h];
  }
  act.z = z;
  return act;
}

StudentGradients zero_gradients(const StudentModel& model) {
  return StudentGradients{Matrix(model.hidden_dim, model.input_dim),
                          Vector(model.hidden_dim, 0.0), Vector(model.hidden_dim, 0.0), 0.0,
                          0.0};
}

StudentGradients backprop(const StudentModel& model,
                          const std::vector<const TrainingExample*>& batch, double mu,
                          double alpha, bool train_mode, Rng& rng) {
  if (batch.empty()) fail(ErrorKind::InvalidInput, "empty batch");
  StudentGradients g = zero_gradients(model);
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<Activations> acts;
  Vector z;
  for (const TrainingExample* ex : batch) {
    const std::size_t k = ex->embeddings.rows();
    acts.clear();
    z.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      acts.push_back(forward(model, ex->embeddings.row(i), train_mode, rng));
      z[i] = acts.back().z;
    }
    const LossAndGrad lg = vrp_loss(z, ex->pi, mu, alpha);
    g.loss += scale * lg.loss;
    for (std::size_t i = 0; i < k; ++i) {
      const double dz = scale * lg.dloss_dz[i];
      const Activations& a = acts[i];
      const auto v = ex->embeddings.row(i);
      g.b2 += dz;
      for (std::size_t h = 0; h < model.hidden_dim; ++h) {
        if (a.kept[h] == 0.0) continue;
        g.w2[h] += dz * gelu(a.pre[h]) * a.kept[h];
        const double da = dz * model.w2[h] * a.kept[h] * gelu_derivative(a.pre[h]);
        if (da == 0.0) continue;
        g.b1[h] += da;
        auto row = g.w1.row(h);
        for (std::size_t c = 0; c < v.size(); ++c) row[c] += da * v[c];
      }
    }
  }
  return g;
}

void check_dataset(std::span<const TrainingExample> data) {
  if (data.empty()) fail(ErrorKind::InvalidInput, "training set is empty");
  const std::size_t d = data.front().embeddings.cols();
  for (std::size_t a = 0; a < data.size(); ++a) {
    const auto& ex = data[a];
    if (ex.embeddings.rows() == 0 || ex.embeddings.cols() != d ||
        ex.pi.size() != ex.embeddings.rows())
      fail(ErrorKind::InvalidInput,
           "training example " + std::to_string(a) + " has inconsistent shapes");
  }
}

/// Visits every parameter alongside its gradient in a fixed order.
template <typename F>
void for_each_parameter(StudentModel& m, const StudentGradients& g, F&& f) {
  std::size_t idx = 0;
  auto w1 = m.w1.data();
  auto gw1 = g.w1.data();
  for (std::size_t i = 0; i < w1.size(); ++i) f(w1[i], gw1[i], idx++);
  for (std::size_t i = 0; i < m.b1.size(); ++i) f(m.b1[i], g.b1[i], idx++);
  for (std::size_t i = 0; i < m.w2.size(); ++i) f(m.w2[i], g.w2[i], idx++);
  f(m.b2, g.b2, idx++);
}

class AdamState {
 public:
  explicit AdamState(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void step(StudentModel& model, const StudentGradients& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for_each_parameter(model, g, [&](double& p, double grad, std::size_t i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad;
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad * grad;
      p -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    });
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  Vector m_, v_;
  long t_ = 0;
};

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

StudentModel StudentModel::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  StudentModel m;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  m.w1 = Matrix(hidden_dim, input_dim);
  m.b1.assign(hidden_dim, 0.0);
  m.w2.assign(hidden_dim, 0.0);
  m.dropout_rate = 0.0;
  return m;
}

StudentModel StudentModel::initialize(std::size_t input_dim, std::size_t hidden_dim,
                                      double dropout_rate, std::uint64_t seed) {
  if (input_dim == 0 || hidden_dim == 0)
    fail(ErrorKind::InvalidInput, "student dimensions must be positive");
  StudentModel m = zeros(input_dim, hidden_dim);
  m.dropout_rate = dropout_rate;
  m.seed = seed;
  Rng rng(seed);
  const double a1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
  for (double& w : m.w1.data()) w = rng.uniform(-a1, a1);
  const double a2 = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
  for (double& w : m.w2) w = rng.uniform(-a2, a2);
  m.validate();
  return m;
}

void StudentModel::validate() const {
  if (hidden_dim < 1 || input_dim < 1)
    fail(ErrorKind::InvalidInput, "student dimensions must be positive");
  if (w1.rows() != hidden_dim || w1.cols() != input_dim || b1.size() != hidden_dim ||
      w2.size() != hidden_dim)
    fail(ErrorKind::InvalidInput, "student parameter shapes are inconsistent");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    fail(ErrorKind::InvalidInput, "dropout rate must lie in [0, 1)");
  auto finite = [](std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(w1.data()) || !finite(b1) || !finite(w2) || !std::isfinite(b2))
    fail(ErrorKind::InvalidInput, "student parameters must be finite");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    fail(ErrorKind::InvalidInput, "learning_rate must be non-negative");
  if (epochs < 1) fail(ErrorKind::InvalidInput, "epochs must be at least 1");
  if (!(alpha >= 0.0)) fail(ErrorKind::InvalidInput, "alpha must be non-negative");
  if (!(mu > 0.0)) fail(ErrorKind::InvalidInput, "mu must be positive");
  if (hidden_dim < 1) fail(ErrorKind::InvalidInput, "hidden_dim must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0))
    fail(ErrorKind::InvalidInput, "dropout must lie in [0, 1)");
  if (batch_articles < 1) fail(ErrorKind::InvalidInput, "batch_articles must be at least 1");
}

double student_forward(const StudentModel& model, std::span<const double> v, bool train_mode,
                       Rng& rng) {
  return forward(model, v, train_mode, rng).z;
}

double student_logit(const StudentModel& model, std::span<const double> v) {
  Rng unused(0);
  return forward(model, v, false, unused).z;
}

LossAndGrad vrp_loss(std::span<const double> z, std::span<const double> pi, double mu,
                     double alpha) {
  if (z.size() != pi.size())
    fail(ErrorKind::InvalidInput, "logit and target lengths differ (" +
                                      std::to_string(z.size()) + " vs " +
                                      std::to_string(pi.size()) + ")");
  if (z.empty()) fail(ErrorKind::InvalidInput, "vrp_loss needs at least one image");
  const double k = static_cast<double>(z.size());
  LossAndGrad out;
  out.dloss_dz.resize(z.size());
  double matching = 0.0;
  double expected = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    matching += softplus(z[i]) - pi[i] * z[i];
    expected += sigmoid(z[i]);
  }
  const double excess = expected - mu;
  out.loss = matching / k + alpha * excess * excess;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double p = sigmoid(z[i]);
    out.dloss_dz[i] = (p - pi[i]) / k + 2.0 * alpha * excess * p * (1.0 - p);
  }
  return out;
}

StudentGradients backprop_student(const StudentModel& model,
                                  std::span<const TrainingExample> batch,
                                  const TrainConfig& config, bool train_mode, Rng& rng) {
  std::vector<const TrainingExample*> ptrs;
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return backprop(model, ptrs, config.mu, config.alpha, train_mode, rng);
}

double dataset_loss(const StudentModel& model, std::span<const TrainingExample> data,
                    double mu, double alpha) {
  if (data.empty()) fail(ErrorKind::InvalidInput, "empty dataset");
  double total = 0.0;
  Vector z;
  for (const auto& ex : data) {
    z.resize(ex.embeddings.rows());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = student_logit(model, ex.embeddings.row(i));
    total += vrp_loss(z, ex.pi, mu, alpha).loss;
  }
  return total / static_cast<double>(data.size());
}

TrainResult train_student(std::span<const TrainingExample> data, const TrainConfig& config) {
  config.validate();
  check_dataset(data);
  TrainResult result{StudentModel::initialize(data.front().embeddings.cols(), config.hidden_dim,
                                              config.dropout, config.seed),
                     {}};
  StudentModel& model = result.model;
  Rng rng(config.seed ^ kTrainStream);
  AdamState adam(model.w1.data().size() + 2 * model.hidden_dim + 1);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const TrainingExample*> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += config.batch_articles) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + config.batch_articles);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&data[order[i]]);
      const StudentGradients g = backprop(model, batch, config.mu, config.alpha, true, rng);
      if (!std::isfinite(g.loss))
        throw DivergenceError(epoch, "non-finite training loss at epoch " + std::to_string(epoch));
      if (config.optimizer == Optimizer::Adam) {
        adam.step(model, g, config.learning_rate);
      } else {
        for_each_parameter(model, g, [&](double& p, double grad, std::size_t) {
          p -= config.learning_rate * grad;
        });
      }
    }
    const double loss = dataset_loss(model, data, config.mu, config.alpha);
    if (!std::isfinite(loss))
      throw DivergenceError(epoch, "non-finite training loss at epoch " + std::to_string(epoch));
    result.loss_curve.push_back(loss);
  }
  return result;
}

double mean_absolute_error(const StudentModel& model, std::span<const TrainingExample> data) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& ex : data) {
    for (std::size_t i = 0; i < ex.embeddings.rows(); ++i) {
      total += std::fabs(sigmoid(student_logit(model, ex.embeddings.row(i))) - ex.pi[i]);
      ++count;
    }
  }
  if (count == 0) fail(ErrorKind::InvalidInput, "no images to score");
  return total / static_cast<double>(count);
}

SelectionResult select_images(const StudentModel& model, const ArticleRecord& article,
                              SelectionRule rule, std::size_t budget, double threshold) {
  if (rule == SelectionRule::TopK && budget < 1)
    fail(ErrorKind::InvalidInput, "top-k selection needs a budget of at least 1");
  const std::size_t n = article.images.size();
  Vector logits(n);
  SelectionResult out;
  out.rule = rule;
  out.probabilities.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    logits[i] = student_logit(model, article.images[i].embedding);
    out.probabilities[i] = sigmoid(logits[i]);
  }
  if (rule == SelectionRule::TopK) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Ranking on logits keeps the order exact where sigmoid saturates.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
    order.resize(std::min(budget, n));
    out.indices = std::move(order);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      if (out.probabilities[i] >= threshold) out.indices.push_back(i);
  }
  for (std::size_t i : out.indices) out.image_ids.push_back(article.images[i].id);
  return out;
}

TrainingExample make_example(const ArticleRecord& article, std::span<const double> pi) {
  if (pi.size() != article.images.size())
    fail(ErrorKind::InvalidInput, "article '" + article.id + "' has " +
                                      std::to_string(article.images.size()) + " images but " +
                                      std::to_string(pi.size()) + " labels");
  TrainingExample ex{Matrix(article.images.size(), article.dim()), Vector(pi.begin(), pi.end())};
  for (std::size_t i = 0; i < article.images.size(); ++i) {
    const auto& e = article.images[i].embedding;
    if (e.size() != article.dim())
      fail(ErrorKind::InvalidInput, "article '" + article.id + "' has ragged embeddings");
    std::copy(e.begin(), e.end(), ex.embeddings.row(i).begin());
  }
  return ex;
}

persist::ArrayFile to_array_file(const StudentModel& model) {
  persist::ArrayFile file;
  file.format = "mmsel-student";
  file.version = 1;
  file.meta["input_dim"] = static_cast<double>(model.input_dim);
  file.meta["hidden_dim"] = static_cast<double>(model.hidden_dim);
  file.meta["dropout_rate"] = model.dropout_rate;
  // Seeds are stored as two 32-bit halves so they survive the double meta.
  file.meta["seed_hi"] = static_cast<double>(model.seed >> 32);
  file.meta["seed_lo"] = static_cast<double>(model.seed & 0xffffffffULL);
  file.arrays["w1"] = model.w1;
  file.arrays["b1"] = Matrix(1, model.hidden_dim, model.b1);
  file.arrays["w2"] = Matrix(1, model.hidden_dim, model.w2);
  file.arrays["b2"] = Matrix(1, 1, Vector{model.b2});
  return file;
}

StudentModel from_array_file(const persist::ArrayFile& file) {
  if (file.format != "mmsel-student" || file.version != 1)
    fail(ErrorKind::Io, "not a version-1 student model file");
  StudentModel m;
  m.input_dim = static_cast<std::size_t>(file.meta_value("input_dim"));
  m.hidden_dim = static_cast<std::size_t>(file.meta_value("hidden_dim"));
  m.dropout_rate = file.meta_value("dropout_rate");
  m.seed = (static_cast<std::uint64_t>(file.meta_value("seed_hi")) << 32) |
           static_cast<std::uint64_t>(file.meta_value("seed_lo"));
  m.w1 = file.array("w1");
  m.b1 = file.array("b1").storage();
  m.w2 = file.array("w2").storage();
  const Matrix& b2 = file.array("b2");
  if (b2.data().size() != 1) fail(ErrorKind::Io, "b2 must hold one value");
  m.b2 = b2.data()[0];
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Io, std::string("invalid student model file: ") + e.what());
  }
  return m;
}

void save_model(const StudentModel& model, const std::string& path) {
  persist::save(to_array_file(model), path);
}

StudentModel load_model(const std::string& path) { return from_array_file(persist::load(path)); }

}  // namespace mmsel::vrp
