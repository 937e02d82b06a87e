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

#include "palmctl/teleop_fsm.hpp"

#include <array>

#include "palmctl/error.hpp"
#include "palmctl/pose6d.hpp"

namespace palmctl {

namespace {

constexpr std::array<std::string_view, 4> kModeNames = {"Idle", "Linear", "Angular",
                                                        "Combined"};

std::optional<ControlMode> mode_for_gesture(GestureLabel g) {
  switch (g) {
    case GestureLabel::kOne: return ControlMode::kLinear;
    case GestureLabel::kTwo: return ControlMode::kAngular;
    case GestureLabel::kThree: return ControlMode::kCombined;
    default: return std::nullopt;
  }
}

Pose6D scaled(Pose6D delta, const FsmConfig& config) {
  delta.translation *= config.linear_gain;
  delta.euler.rx *= config.angular_gain;
  delta.euler.ry *= config.angular_gain;
  delta.euler.rz *= config.angular_gain;
  return delta;
}

}  // namespace

std::string_view to_string(ControlMode mode) {
  return kModeNames[static_cast<std::size_t>(mode)];
}

std::optional<ControlMode> control_mode_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == name) return static_cast<ControlMode>(i);
  }
  return std::nullopt;
}

std::string_view command_name(const Command& command) {
  constexpr std::array<std::string_view, 4> names = {"SetMode", "StartTracking",
                                                     "StopTracking", "MoveDelta"};
  return names[command.index()];
}

Pose6D mask_delta(const Pose6D& delta, ControlMode mode) {
  Pose6D out = delta;
  switch (mode) {
    case ControlMode::kIdle:
      throw Error(ErrorCode::kContract, "no motion channels in Idle mode");
    case ControlMode::kLinear:
      out.euler = EulerDeg{};
      break;
    case ControlMode::kAngular:
      out.translation = Point3::Zero();
      break;
    case ControlMode::kCombined:
      break;
  }
  return out;
}

StepResult step(const FsmState& state, GestureLabel gesture, const Pose6D& pose) {
  StepResult r{state, std::nullopt};
  FsmState& s = r.state;

  if (gesture == s.pending) {
    if (s.pending_count <= s.config.debounce_frames) ++s.pending_count;
  } else {
    s.pending = gesture;
    s.pending_count = 1;
  }
  const bool fires = s.pending_count == s.config.debounce_frames;

  if (s.tracking) {
    if (gesture == GestureLabel::kClose) {
      if (fires) {
        s.tracking = false;
        s.reference.reset();
        r.command = cmd::StopTracking{};
      }
      return r;
    }
    // Open, None and mode gestures keep the hand under control.
    r.command = cmd::MoveDelta{
        scaled(mask_delta(relative_pose(pose, *s.reference), s.mode), s.config)};
    return r;
  }

  if (!fires) return r;
  if (auto mode = mode_for_gesture(gesture)) {
    s.mode = *mode;
    r.command = cmd::SetMode{*mode};
  } else if (gesture == GestureLabel::kOpen && s.mode != ControlMode::kIdle) {
    s.tracking = true;
    s.reference = pose;
    r.command = cmd::StartTracking{pose};
  }
  return r;
}

}  // namespace palmctl
