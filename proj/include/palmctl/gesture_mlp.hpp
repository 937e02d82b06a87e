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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "palmctl/hand_features.hpp"

namespace palmctl {

inline constexpr int kHidden1 = 256;
inline constexpr int kHidden2 = 128;
inline constexpr int kNumClasses = 5;

/// Class order is the output-neuron order. kNone is a rejection outcome only.
enum class GestureLabel : int { kOne = 0, kTwo, kThree, kOpen, kClose, kNone };

std::string_view to_string(GestureLabel label);
std::optional<GestureLabel> gesture_from_string(std::string_view name);

using GestureProbs = std::array<double, kNumClasses>;

struct BatchNorm {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
};

/// Weights are stored (out x in). The same struct carries gradients, in which
/// case the running statistics are unused.
struct MlpParams {
  Eigen::MatrixXd w1;  // 256 x 62
  Eigen::VectorXd b1;
  BatchNorm bn1;
  Eigen::MatrixXd w2;  // 128 x 256
  Eigen::VectorXd b2;
  BatchNorm bn2;
  Eigen::MatrixXd w3;  // 5 x 128
  Eigen::VectorXd b3;

  /// Zero weights, unit BN scale, zero shift, running stats (0, 1).
  static MlpParams zeros();
  /// He-normal weights, zero biases; deterministic in `seed`.
  static MlpParams initialize(std::uint64_t seed);

  /// Throws Error(kStructural) on any shape mismatch, Error(kDomain) on a
  /// non-positive running variance.
  void validate() const;
};

/// Named flat view over one trainable tensor (column-major storage).
struct TensorView {
  std::string_view name;
  double* data;
  std::size_t size;
};

/// The ten trainable tensors in a fixed order: w1 b1 g1 beta1 w2 b2 g2 beta2
/// w3 b3.
std::vector<TensorView> trainable_tensors(MlpParams& params);

enum class Mode { kTrain, kEval };

inline constexpr double kBatchNormEpsilon = 1e-5;

/// Activations of one forward pass over a batch (rows are samples).
struct ForwardTrace {
  Eigen::MatrixXd hidden1;  // after BN and ReLU, n x 256
  Eigen::MatrixXd hidden2;  // n x 128
  Eigen::MatrixXd logits;   // n x 5
  Eigen::MatrixXd probs;    // n x 5
};

/// linear -> BN -> ReLU -> linear -> BN -> ReLU -> linear -> softmax.
/// kTrain normalizes with batch statistics and leaves params untouched.
ForwardTrace forward_batch(const MlpParams& params, const Eigen::MatrixXd& x,
                           Mode mode);
GestureProbs forward(const MlpParams& params, std::span<const double> x,
                     Mode mode = Mode::kEval);

inline constexpr double kDefaultRejectThreshold = 0.85;

/// Argmax label when its probability reaches `threshold`, otherwise kNone.
/// Ties go to the lowest class index.
GestureLabel classify(const GestureProbs& probs,
                      double threshold = kDefaultRejectThreshold);

/// Mean cross-entropy over the batch in train mode and its gradient with
/// respect to every trainable tensor.
double loss_and_gradients(const MlpParams& params, const Eigen::MatrixXd& x,
                          std::span<const int> labels, MlpParams& grads);

struct Sample {
  FeatureVector features{};
  GestureLabel label = GestureLabel::kOne;

  friend bool operator==(const Sample&, const Sample&) = default;
};
using Dataset = std::vector<Sample>;

/// Throws Error(kStructural) on a kNone label.
void validate_dataset(const Dataset& data);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified shuffle split: each class contributes round(count * ratio)
/// samples to train, clamped so both sides keep at least one.
/// Throws Error(kTraining) if any class has fewer than two samples.
DatasetSplit split_dataset(const Dataset& data, double ratio,
                           std::uint64_t seed);

struct TrainConfig {
  double split = 0.75;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  int epochs = 100;
  std::uint64_t seed = 1;
  double bn_momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct TrainResult {
  MlpParams params;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::vector<double> epoch_loss;
};

/// Mini-batch Adam on mean cross-entropy. Deterministic given config.seed.
TrainResult train(const Dataset& data, const TrainConfig& config = {});

/// Fraction of samples whose eval-mode argmax equals the label.
double accuracy(const MlpParams& params, const Dataset& data,
                std::span<const std::size_t> indices);

/// Noise applied by the synthetic dataset generator. `scale` multiplies every
/// term; scale 0 reproduces the canonical templates exactly.
struct SyntheticNoise {
  double scale = 1.0;
  double jitter_m = 0.003;       // per-landmark isotropic jitter, std dev
  double finger_spread_deg = 6;  // per-finger in-plane bend, std dev
  double roll_deg = 20.0;        // in-plane hand rotation, uniform +-
  double tilt_deg = 25.0;        // out-of-plane tilt about x and y, uniform +-
  double depth_range_m = 0.15;   // distance from the 0.5 m home, uniform +-
  double offset_m = 0.08;        // lateral hand offset, uniform +-
};

/// per_class noisy renderings of each of the five gesture templates, passed
/// through extract_features. Sample order is class-major. Draws that put a
/// landmark outside the default image are redrawn.
Dataset generate_synthetic_dataset(std::uint64_t seed, std::size_t per_class,
                                   const SyntheticNoise& noise = {});

/// CSV: `label,f0,...,f61` with a header row.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);

/// Binary container: magic, version, then named tensors with shapes.
/// Loading rejects unknown versions and any shape mismatch.
void save_checkpoint(std::ostream& out, const MlpParams& params);
MlpParams load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const MlpParams& params);
MlpParams load_checkpoint_file(const std::string& path);

}  // namespace palmctl
