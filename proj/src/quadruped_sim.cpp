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

#include "palmctl/quadruped_sim.hpp"

#include <algorithm>
#include <cmath>

#include "palmctl/error.hpp"

namespace palmctl {

namespace {

std::array<double, 6> components(const Pose6D& p) {
  return {p.translation.x(), p.translation.y(), p.translation.z(),
          p.euler.rx,        p.euler.ry,        p.euler.rz};
}

Pose6D from_components(const std::array<double, 6>& c) {
  Pose6D p;
  p.translation = Point3(c[0], c[1], c[2]);
  p.euler = EulerDeg{c[3], c[4], c[5]};
  return p;
}

}  // namespace

WorkspaceLimits WorkspaceLimits::defaults() {
  WorkspaceLimits l;
  for (int i = 0; i < 3; ++i) l.axes[i] = {-0.10, 0.10};
  for (int i = 3; i < 6; ++i) l.axes[i] = {-25.0, 25.0};
  return l;
}

void WorkspaceLimits::validate() const {
  for (const auto& a : axes) {
    if (!(a.min < a.max)) throw Error(ErrorCode::kDomain, "workspace limit min >= max");
  }
}

bool WorkspaceLimits::contains(const Pose6D& pose) const {
  const auto c = components(pose);
  for (std::size_t i = 0; i < 6; ++i) {
    if (!(c[i] >= axes[i].min && c[i] <= axes[i].max)) return false;
  }
  return true;
}

Pose6D WorkspaceLimits::clamp(const Pose6D& pose) const {
  auto c = components(pose);
  for (std::size_t i = 0; i < 6; ++i) {
    // NaN would slip through a plain comparison clamp; treat it as neutral.
    c[i] = axes[i].clamp(std::isnan(c[i]) ? 0.0 : c[i]);
  }
  return from_components(c);
}

RobotState make_robot(const WorkspaceLimits& limits, double timestamp) {
  limits.validate();
  RobotState s;
  s.limits = limits;
  s.body = limits.clamp(Pose6D{});
  s.timestamp = timestamp;
  return s;
}

RobotState apply_command(const RobotState& state, const Command& command, double t) {
  RobotState next = state;
  if (const auto* move = std::get_if<cmd::MoveDelta>(&command)) {
    next.body = state.limits.clamp(move->delta);  // neutral stance is the origin
  }
  next.timestamp = std::max(state.timestamp, t);
  return next;
}

RobotState advance(const RobotState& state, double t) {
  RobotState next = state;
  next.timestamp = std::max(state.timestamp, t);
  return next;
}

TrajectorySample snapshot(const RobotState& state) {
  return TrajectorySample{state.timestamp, state.body};
}

}  // namespace palmctl
