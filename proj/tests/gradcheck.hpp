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

// Central finite-difference check of the classifier's analytic gradients.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "palmctl/gesture_mlp.hpp"

namespace gradcheck {

struct Result {
  double max_rel_error = 0.0;
  std::string worst;  // "tensor[index]" of the largest error
  std::size_t checked = 0;
};

// Relative error |g - n| / max(|g|, |n|, floor); the floor keeps coordinates
// whose true gradient is ~0 from turning rounding noise into large ratios.
inline double relative_error(double analytic, double numeric, double floor) {
  return std::fabs(analytic - numeric) /
         std::max({std::fabs(analytic), std::fabs(numeric), floor});
}

// Checks `per_tensor` randomly chosen coordinates of every trainable tensor
// (all of them when the tensor is smaller).
inline Result check(const palmctl::MlpParams& params, const Eigen::MatrixXd& x,
                    const std::vector<int>& labels, std::mt19937_64& rng,
                    std::size_t per_tensor, double eps = 1e-5, double floor = 1e-6) {
  palmctl::MlpParams grads;
  palmctl::loss_and_gradients(params, x, labels, grads);
  palmctl::MlpParams probe = params;
  palmctl::MlpParams scratch;
  auto analytic = palmctl::trainable_tensors(grads);
  auto values = palmctl::trainable_tensors(probe);

  Result r;
  for (std::size_t t = 0; t < values.size(); ++t) {
    std::vector<std::size_t> idx(values[t].size);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > per_tensor) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(per_tensor);
    }
    for (std::size_t i : idx) {
      double& w = values[t].data[i];
      const double saved = w;
      w = saved + eps;
      const double up = palmctl::loss_and_gradients(probe, x, labels, scratch);
      w = saved - eps;
      const double down = palmctl::loss_and_gradients(probe, x, labels, scratch);
      w = saved;
      const double numeric = (up - down) / (2 * eps);
      const double err = relative_error(analytic[t].data[i], numeric, floor);
      ++r.checked;
      if (err > r.max_rel_error) {
        r.max_rel_error = err;
        r.worst = std::string(values[t].name) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

}  // namespace gradcheck
