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

// Shared fixtures for the unit tests.
#pragma once

#include <unistd.h>

#include <filesystem>
#include <memory>
#include <string>

#include "palmctl/gesture_mlp.hpp"
#include "palmctl/synthetic_hand.hpp"

namespace palmctl::testing {

// A rendered, noiseless hand at the home pose showing `gesture`.
inline LandmarkFrame sample_frame(GestureLabel gesture = GestureLabel::kOpen,
                                  const Pose6D& pose = home_hand_pose(), double t = 0.0) {
  return render_landmarks(place_hand(hand_template(gesture), pose), default_intrinsics(),
                          t, std::string(kDefaultIntrinsicsId));
}

// A classifier trained once per process on a small synthetic set; accurate
// enough for the noiseless scripted sessions used in the tests.
inline std::shared_ptr<const MlpParams> quick_model() {
  static const std::shared_ptr<const MlpParams> model = [] {
    TrainConfig cfg;
    cfg.epochs = 12;
    return std::make_shared<const MlpParams>(
        train(generate_synthetic_dataset(11, 150), cfg).params);
  }();
  return model;
}

// A per-process scratch directory, removed at exit.
inline std::filesystem::path scratch_dir() {
  struct Dir {
    std::filesystem::path path;
    Dir() {
      path = std::filesystem::temp_directory_path() /
             ("palmctl_test_" + std::to_string(::getpid()));
      std::filesystem::create_directories(path);
    }
    ~Dir() {
      std::error_code ec;
      std::filesystem::remove_all(path, ec);
    }
  };
  static const Dir dir;
  return dir.path;
}

}  // namespace palmctl::testing
