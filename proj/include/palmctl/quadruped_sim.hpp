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

#include "palmctl/eval_rmsd.hpp"
#include "palmctl/geometry.hpp"
#include "palmctl/teleop_fsm.hpp"

namespace palmctl {

struct AxisLimits {
  double min = 0.0;
  double max = 0.0;

  double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
  friend bool operator==(const AxisLimits&, const AxisLimits&) = default;
};

/// Body workspace around the neutral stance. Index order x y z rx ry rz.
struct WorkspaceLimits {
  std::array<AxisLimits, 6> axes{};

  /// +-0.10 m per translation axis, +-25 degrees per angle.
  static WorkspaceLimits defaults();
  /// Throws Error(kDomain) unless min < max on every axis.
  void validate() const;
  bool contains(const Pose6D& pose) const;
  Pose6D clamp(const Pose6D& pose) const;

  friend bool operator==(const WorkspaceLimits&,
                         const WorkspaceLimits&) = default;
};

struct RobotState {
  Pose6D body;  // offset from the neutral stance
  WorkspaceLimits limits = WorkspaceLimits::defaults();
  double timestamp = 0.0;
};

RobotState make_robot(const WorkspaceLimits& limits = WorkspaceLimits::defaults(),
                      double timestamp = 0.0);

/// MoveDelta places the body at clamp(neutral + delta); the other commands
/// leave the body alone. The timestamp becomes max(state.timestamp, t).
RobotState apply_command(const RobotState& state, const Command& command,
                         double t);

/// Moves the clock forward without commanding anything.
RobotState advance(const RobotState& state, double t);

TrajectorySample snapshot(const RobotState& state);

}  // namespace palmctl
