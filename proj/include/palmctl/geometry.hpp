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

#include <Eigen/Core>

namespace palmctl {

/// Metric 3D point in the camera frame (x right, y down, z forward).
using Point3 = Eigen::Vector3d;

/// Euler angles in degrees, fixed-axis X then Y then Z.
struct EulerDeg {
  double rx = 0.0;
  double ry = 0.0;
  double rz = 0.0;

  friend bool operator==(const EulerDeg&, const EulerDeg&) = default;
};

struct Pose6D {
  Point3 translation = Point3::Zero();
  EulerDeg euler;

  friend bool operator==(const Pose6D& a, const Pose6D& b) {
    return a.translation == b.translation && a.euler == b.euler;
  }
};

/// Wraps an angle in degrees to (-180, 180].
double wrap_degrees(double deg);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }
constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }

}  // namespace palmctl
