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

#include <optional>
#include <string_view>
#include <variant>

#include "palmctl/gesture_mlp.hpp"
#include "palmctl/geometry.hpp"

namespace palmctl {

enum class ControlMode { kIdle, kLinear, kAngular, kCombined };

std::string_view to_string(ControlMode mode);
std::optional<ControlMode> control_mode_from_string(std::string_view name);

struct FsmConfig {
  int debounce_frames = 3;
  double linear_gain = 1.0;
  double angular_gain = 1.0;

  friend bool operator==(const FsmConfig&, const FsmConfig&) = default;
};

struct FsmState {
  ControlMode mode = ControlMode::kIdle;
  bool tracking = false;
  std::optional<Pose6D> reference;  // set iff tracking
  GestureLabel pending = GestureLabel::kNone;
  int pending_count = 0;  // consecutive frames showing `pending`
  FsmConfig config;

  friend bool operator==(const FsmState&, const FsmState&) = default;
};

namespace cmd {
struct SetMode {
  ControlMode mode;
  friend bool operator==(const SetMode&, const SetMode&) = default;
};
struct StartTracking {
  Pose6D reference;
  friend bool operator==(const StartTracking&, const StartTracking&) = default;
};
struct StopTracking {
  friend bool operator==(const StopTracking&, const StopTracking&) = default;
};
/// Gain-scaled, mode-masked offset of the hand from its tracking reference.
struct MoveDelta {
  Pose6D delta;
  friend bool operator==(const MoveDelta&, const MoveDelta&) = default;
};
}  // namespace cmd

using Command =
    std::variant<cmd::SetMode, cmd::StartTracking, cmd::StopTracking,
                 cmd::MoveDelta>;

std::string_view command_name(const Command& command);

/// Zeroes the channels `mode` does not control. Throws Error(kContract) for
/// kIdle.
Pose6D mask_delta(const Pose6D& delta, ControlMode mode);

struct StepResult {
  FsmState state;
  std::optional<Command> command;
};

/// One frame of the control automaton.
///
/// A gesture acts only on the frame where it has been seen for exactly
/// `debounce_frames` consecutive frames:
///   One / Two / Three -> SetMode(Linear / Angular / Combined), unless tracking
///   Open, mode != Idle, not tracking -> StartTracking(pose)
///   Close, tracking -> StopTracking (the mode is kept)
/// Every other frame while tracking emits MoveDelta(relative_pose(pose,
/// reference)), except frames classified Close, which emit nothing.
StepResult step(const FsmState& state, GestureLabel gesture,
                const Pose6D& pose);

}  // namespace palmctl
