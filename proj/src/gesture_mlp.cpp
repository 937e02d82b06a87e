// Copyright 2026 The palmctl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "palmctl/gesture_mlp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "palmctl/error.hpp"

namespace palmctl {

namespace {

constexpr std::array<std::string_view, 6> kLabelNames = {
    "One", "Two", "Three", "Open", "Close", "None"};

BatchNorm make_batch_norm(int size) {
  return BatchNorm{Eigen::VectorXd::Ones(size), Eigen::VectorXd::Zero(size),
                   Eigen::VectorXd::Zero(size), Eigen::VectorXd::Ones(size)};
}

void check_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                 std::string_view name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::kStructural,
                std::string(name) + ": expected " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                    "x" + std::to_string(m.cols()));
  }
}

void check_shape(const Eigen::VectorXd& v, Eigen::Index size,
                 std::string_view name) {
  if (v.size() != size) {
    throw Error(ErrorCode::kStructural,
                std::string(name) + ": expected length " + std::to_string(size) +
                    ", got " + std::to_string(v.size()));
  }
}

void check_batch_norm(const BatchNorm& bn, Eigen::Index size,
                      std::string_view name) {
  const std::string n(name);
  check_shape(bn.gamma, size, n + ".gamma");
  check_shape(bn.beta, size, n + ".beta");
  check_shape(bn.running_mean, size, n + ".running_mean");
  check_shape(bn.running_var, size, n + ".running_var");
  if (!(bn.running_var.array() > 0.0).all()) {
    throw Error(ErrorCode::kDomain, n + ".running_var must be positive");
  }
}

// Per-layer intermediates kept for the backward pass.
struct BatchNormCache {
  Eigen::MatrixXd xhat;
  Eigen::RowVectorXd inv_std;
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd var;  // biased batch variance
  Eigen::MatrixXd out;     // gamma * xhat + beta, before ReLU
};

BatchNormCache batch_norm_forward(const Eigen::MatrixXd& z, const BatchNorm& bn,
                                  Mode mode) {
  BatchNormCache c;
  const double n = static_cast<double>(z.rows());
  if (mode == Mode::kTrain) {
    c.mean = z.colwise().mean();
    c.var = (z.rowwise() - c.mean).array().square().colwise().sum() / n;
  } else {
    c.mean = bn.running_mean.transpose();
    c.var = bn.running_var.transpose();
  }
  c.inv_std = (c.var.array() + kBatchNormEpsilon).rsqrt();
  c.xhat = ((z.rowwise() - c.mean).array().rowwise() * c.inv_std.array()).matrix();
  c.out = (c.xhat.array().rowwise() * bn.gamma.transpose().array()).matrix();
  c.out.rowwise() += bn.beta.transpose();
  return c;
}

// Gradient with respect to the BN input given the gradient at its output.
Eigen::MatrixXd batch_norm_backward(const Eigen::MatrixXd& dout,
                                    const BatchNormCache& c, const BatchNorm& bn,
                                    Eigen::VectorXd& dgamma,
                                    Eigen::VectorXd& dbeta) {
  const double n = static_cast<double>(dout.rows());
  dgamma = (dout.array() * c.xhat.array()).colwise().sum().transpose();
  dbeta = dout.colwise().sum().transpose();
  const Eigen::MatrixXd dxhat =
      (dout.array().rowwise() * bn.gamma.transpose().array()).matrix();
  const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
  const Eigen::RowVectorXd sum_dxhat_xhat =
      (dxhat.array() * c.xhat.array()).colwise().sum();
  Eigen::MatrixXd dz = n * dxhat.array();
  dz.rowwise() -= sum_dxhat;
  dz -= (c.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
  dz = (dz.array().rowwise() * (c.inv_std.array() / n)).matrix();
  return dz;
}

struct ForwardCache {
  BatchNormCache bn1;
  Eigen::MatrixXd h1;
  BatchNormCache bn2;
  Eigen::MatrixXd h2;
  Eigen::MatrixXd logits;
  Eigen::MatrixXd probs;
};

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p = p.array().colwise() / p.rowwise().sum().array();
  return p;
}

ForwardCache forward_cached(const MlpParams& params, const Eigen::MatrixXd& x,
                            Mode mode) {
  if (x.cols() != static_cast<Eigen::Index>(kFeatureSize)) {
    throw Error(ErrorCode::kStructural,
                "input has " + std::to_string(x.cols()) + " features, expected 62");
  }
  ForwardCache c;
  Eigen::MatrixXd z1 = x * params.w1.transpose();
  z1.rowwise() += params.b1.transpose();
  c.bn1 = batch_norm_forward(z1, params.bn1, mode);
  c.h1 = c.bn1.out.cwiseMax(0.0);

  Eigen::MatrixXd z2 = c.h1 * params.w2.transpose();
  z2.rowwise() += params.b2.transpose();
  c.bn2 = batch_norm_forward(z2, params.bn2, mode);
  c.h2 = c.bn2.out.cwiseMax(0.0);

  c.logits = c.h2 * params.w3.transpose();
  c.logits.rowwise() += params.b3.transpose();
  c.probs = softmax_rows(c.logits);
  return c;
}

void set_trainable_zero(MlpParams& p) {
  for (auto& t : trainable_tensors(p)) std::fill_n(t.data, t.size, 0.0);
}

// Loss and gradients of one batch; also returns the cache so the caller can
// fold batch statistics into the running estimates.
double loss_and_gradients_cached(const MlpParams& params,
                                 const Eigen::MatrixXd& x,
                                 std::span<const int> labels, MlpParams& g,
                                 ForwardCache& c) {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw Error(ErrorCode::kStructural, "label count does not match batch size");
  }
  c = forward_cached(params, x, Mode::kTrain);

  double loss = 0.0;
  Eigen::MatrixXd dlogits = c.probs;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= kNumClasses) {
      throw Error(ErrorCode::kStructural, "label out of range");
    }
    loss -= std::log(std::max(c.probs(i, y), 1e-300));
    dlogits(i, y) -= 1.0;
  }
  loss /= static_cast<double>(n);
  dlogits /= static_cast<double>(n);

  g.w3 = dlogits.transpose() * c.h2;
  g.b3 = dlogits.colwise().sum().transpose();
  Eigen::MatrixXd dh2 = dlogits * params.w3;
  dh2 = (c.bn2.out.array() > 0.0).select(dh2, 0.0);
  const Eigen::MatrixXd dz2 =
      batch_norm_backward(dh2, c.bn2, params.bn2, g.bn2.gamma, g.bn2.beta);

  g.w2 = dz2.transpose() * c.h1;
  g.b2 = dz2.colwise().sum().transpose();
  Eigen::MatrixXd dh1 = dz2 * params.w2;
  dh1 = (c.bn1.out.array() > 0.0).select(dh1, 0.0);
  const Eigen::MatrixXd dz1 =
      batch_norm_backward(dh1, c.bn1, params.bn1, g.bn1.gamma, g.bn1.beta);

  g.w1 = dz1.transpose() * x;
  g.b1 = dz1.colwise().sum().transpose();
  return loss;
}

void update_running(BatchNorm& bn, const BatchNormCache& c, Eigen::Index n,
                    double momentum) {
  const double unbias =
      n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
  bn.running_mean = momentum * bn.running_mean + (1.0 - momentum) * c.mean.transpose();
  bn.running_var =
      momentum * bn.running_var + (1.0 - momentum) * unbias * c.var.transpose();
}

Eigen::MatrixXd gather_features(const Dataset& data,
                                std::span<const std::size_t> indices) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(indices.size()),
                    static_cast<Eigen::Index>(kFeatureSize));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& f = data[indices[r]].features;
    for (std::size_t k = 0; k < kFeatureSize; ++k) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = f[k];
    }
  }
  return x;
}

}  // namespace

std::string_view to_string(GestureLabel label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

std::optional<GestureLabel> gesture_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == name) return static_cast<GestureLabel>(i);
  }
  return std::nullopt;
}

MlpParams MlpParams::zeros() {
  MlpParams p;
  p.w1 = Eigen::MatrixXd::Zero(kHidden1, static_cast<Eigen::Index>(kFeatureSize));
  p.b1 = Eigen::VectorXd::Zero(kHidden1);
  p.bn1 = make_batch_norm(kHidden1);
  p.w2 = Eigen::MatrixXd::Zero(kHidden2, kHidden1);
  p.b2 = Eigen::VectorXd::Zero(kHidden2);
  p.bn2 = make_batch_norm(kHidden2);
  p.w3 = Eigen::MatrixXd::Zero(kNumClasses, kHidden2);
  p.b3 = Eigen::VectorXd::Zero(kNumClasses);
  return p;
}

MlpParams MlpParams::initialize(std::uint64_t seed) {
  MlpParams p = zeros();
  std::mt19937_64 rng(seed);
  auto he = [&rng](Eigen::MatrixXd& w) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(w.cols())));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  };
  he(p.w1);
  he(p.w2);
  he(p.w3);
  return p;
}

void MlpParams::validate() const {
  check_shape(w1, kHidden1, static_cast<Eigen::Index>(kFeatureSize), "w1");
  check_shape(b1, kHidden1, "b1");
  check_batch_norm(bn1, kHidden1, "bn1");
  check_shape(w2, kHidden2, kHidden1, "w2");
  check_shape(b2, kHidden2, "b2");
  check_batch_norm(bn2, kHidden2, "bn2");
  check_shape(w3, kNumClasses, kHidden2, "w3");
  check_shape(b3, kNumClasses, "b3");
}

std::vector<TensorView> trainable_tensors(MlpParams& p) {
  auto view = [](std::string_view name, auto& m) {
    return TensorView{name, m.data(), static_cast<std::size_t>(m.size())};
  };
  return {view("w1", p.w1),         view("b1", p.b1),
          view("bn1.gamma", p.bn1.gamma), view("bn1.beta", p.bn1.beta),
          view("w2", p.w2),         view("b2", p.b2),
          view("bn2.gamma", p.bn2.gamma), view("bn2.beta", p.bn2.beta),
          view("w3", p.w3),         view("b3", p.b3)};
}

ForwardTrace forward_batch(const MlpParams& params, const Eigen::MatrixXd& x,
                           Mode mode) {
  ForwardCache c = forward_cached(params, x, mode);
  return ForwardTrace{std::move(c.h1), std::move(c.h2), std::move(c.logits),
                      std::move(c.probs)};
}

GestureProbs forward(const MlpParams& params, std::span<const double> x,
                     Mode mode) {
  if (x.size() != kFeatureSize) {
    throw Error(ErrorCode::kStructural,
                "input has " + std::to_string(x.size()) + " features, expected 62");
  }
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(kFeatureSize));
  for (std::size_t k = 0; k < kFeatureSize; ++k) row(0, static_cast<Eigen::Index>(k)) = x[k];
  const ForwardCache c = forward_cached(params, row, mode);
  GestureProbs out{};
  for (int k = 0; k < kNumClasses; ++k) out[static_cast<std::size_t>(k)] = c.probs(0, k);
  return out;
}

GestureLabel classify(const GestureProbs& probs, double threshold) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return probs[best] >= threshold ? static_cast<GestureLabel>(best)
                                  : GestureLabel::kNone;
}

double loss_and_gradients(const MlpParams& params, const Eigen::MatrixXd& x,
                          std::span<const int> labels, MlpParams& grads) {
  grads = MlpParams::zeros();
  ForwardCache cache;
  return loss_and_gradients_cached(params, x, labels, grads, cache);
}

void validate_dataset(const Dataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].label == GestureLabel::kNone) {
      throw Error(ErrorCode::kStructural,
                  "sample " + std::to_string(i) + " is labeled None");
    }
  }
}

DatasetSplit split_dataset(const Dataset& data, double ratio,
                           std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kDomain, "split ratio must be in (0, 1)");
  }
  validate_dataset(data);
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class[static_cast<std::size_t>(data[i].label)].push_back(i);
  }
  std::mt19937_64 rng(seed);
  DatasetSplit split;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& idx = by_class[k];
    if (idx.size() < 2) {
      throw Error(ErrorCode::kTraining,
                  "class " + std::string(to_string(static_cast<GestureLabel>(k))) +
                      " has fewer than 2 samples");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_train = static_cast<std::size_t>(
        std::llround(static_cast<double>(idx.size()) * ratio));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    split.train.insert(split.train.end(), idx.begin(),
                       idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(),
                      idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double accuracy(const MlpParams& params, const Dataset& data,
                std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  const Eigen::MatrixXd x = gather_features(data, indices);
  const ForwardTrace t = forward_batch(params, x, Mode::kEval);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    Eigen::Index best = 0;
    t.probs.row(static_cast<Eigen::Index>(r)).maxCoeff(&best);
    if (best == static_cast<Eigen::Index>(data[indices[r]].label)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

TrainResult train(const Dataset& data, const TrainConfig& config) {
  if (data.empty()) throw Error(ErrorCode::kTraining, "empty dataset");
  if (config.batch_size < 2) {
    throw Error(ErrorCode::kTraining, "batch size must be at least 2");
  }
  const DatasetSplit split = split_dataset(data, config.split, config.seed);

  TrainResult result;
  result.params = MlpParams::initialize(config.seed);
  result.train_count = split.train.size();
  result.test_count = split.test.size();

  MlpParams grads = MlpParams::zeros();
  MlpParams m1 = MlpParams::zeros();
  MlpParams m2 = MlpParams::zeros();
  set_trainable_zero(m1);
  set_trainable_zero(m2);
  auto p_views = trainable_tensors(result.params);
  auto g_views = trainable_tensors(grads);
  auto m1_views = trainable_tensors(m1);
  auto m2_views = trainable_tensors(m2);

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order = split.train;
  std::vector<std::size_t> batch_idx;
  std::vector<int> labels;
  ForwardCache cache;
  long long step_count = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      if (end - start < 2) break;  // batch statistics need two samples
      batch_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(end));
      labels.clear();
      for (std::size_t i : batch_idx) labels.push_back(static_cast<int>(data[i].label));
      const Eigen::MatrixXd x = gather_features(data, batch_idx);

      epoch_loss += loss_and_gradients_cached(result.params, x, labels, grads, cache);
      ++batches;
      update_running(result.params.bn1, cache.bn1, x.rows(), config.bn_momentum);
      update_running(result.params.bn2, cache.bn2, x.rows(), config.bn_momentum);

      ++step_count;
      const double c1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step_count));
      const double c2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step_count));
      for (std::size_t t = 0; t < p_views.size(); ++t) {
        double* p = p_views[t].data;
        const double* g = g_views[t].data;
        double* m = m1_views[t].data;
        double* v = m2_views[t].data;
        for (std::size_t k = 0; k < p_views[t].size; ++k) {
          m[k] = config.adam_beta1 * m[k] + (1.0 - config.adam_beta1) * g[k];
          v[k] = config.adam_beta2 * v[k] + (1.0 - config.adam_beta2) * g[k] * g[k];
          p[k] -= config.learning_rate * (m[k] / c1) /
                  (std::sqrt(v[k] / c2) + config.adam_epsilon);
        }
      }
    }
    result.epoch_loss.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
  }

  result.train_accuracy = accuracy(result.params, data, split.train);
  result.test_accuracy = accuracy(result.params, data, split.test);
  return result;
}

}  // namespace palmctl
