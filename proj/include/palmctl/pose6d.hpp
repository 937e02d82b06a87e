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
#include <span>
#include <vector>

#include "palmctl/geometry.hpp"
#include "palmctl/hand_features.hpp"

namespace palmctl {

using PointCloud = std::vector<Point3>;

/// z = a*x + b*y + c.
struct Plane {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  /// Direction ratios (a, b, -1).
  Point3 normal() const { return {a, b, -1.0}; }
  double z_at(double x, double y) const { return a * x + b * y + c; }

  friend bool operator==(const Plane&, const Plane&) = default;
};

Point3 center_of_mass(std::span<const Point3> points);

inline constexpr std::size_t kDefaultCloudSize = 2000;
inline constexpr std::size_t kDefaultNeighbors = 3;

/// Densifies a sparse landmark set. Each round walks the current cloud in
/// order and appends the midpoint between every point and each of its k
/// nearest neighbors (ties by index, each unordered pair once), stopping as
/// soon as the cloud holds `target` points. The input points come first in
/// the output. Throws Error(kDegenerateInput) when all points coincide.
PointCloud expand_cloud_knn(std::span<const Point3> points,
                            std::size_t target = kDefaultCloudSize,
                            std::size_t k = kDefaultNeighbors);

/// Relative eigenvalue floor on A^T A below which fit_plane refuses to solve.
inline constexpr double kPlaneConditionFloor = 1e-12;

/// Least-squares plane through the cloud via the left pseudo-inverse
/// (A^T A)^-1 A^T B, rows of A being (x, y, 1) and B holding z.
/// Throws Error(kDegeneratePlane) when A^T A is numerically singular
/// (collinear footprint or a plane containing the viewing axis).
Plane fit_plane(std::span<const Point3> cloud);

/// Angle between two normals from their direction ratios, folded into
/// [0, 90] degrees.
double normal_angle(const Point3& n1, const Point3& n2);

/// Angle between two planes, [0, 90] degrees.
double plane_angle(const Plane& p1, const Plane& p2);

/// Orientation of a plane plus an in-plane reference direction.
///
/// ry and rx are the angles between the plane and the reference planes x = 0
/// and y = 0, measured as 90 degrees minus the normal angle and signed by the
/// slopes a and b respectively: z = x gives ry = +45, z = y gives rx = +45.
/// rz is the signed angle, about the normal (a, b, -1), from the camera
/// y-axis projected into the plane to `in_plane_axis` projected into the
/// plane. Throws Error(kDegenerateAxis) when the axis is parallel to the
/// normal.
EulerDeg plane_euler_angles(const Plane& plane, const Point3& in_plane_axis);

/// Translation difference and wrapped angle difference, current - reference.
Pose6D relative_pose(const Pose6D& current, const Pose6D& reference);

struct PoseEstimatorConfig {
  std::size_t cloud_size = kDefaultCloudSize;
  std::size_t neighbors = kDefaultNeighbors;
};

/// Back-projects the frame, takes the landmark center of mass as the
/// translation and the orientation of the densified cloud's plane, with the
/// wrist to middle-finger-base direction fixing rz.
Pose6D estimate_pose(const LandmarkFrame& frame, const CameraIntrinsics& intr,
                     const PoseEstimatorConfig& config = {});

/// Same, starting from already back-projected landmarks.
Pose6D estimate_pose(std::span<const Point3> landmarks,
                     const PoseEstimatorConfig& config = {});

}  // namespace palmctl
