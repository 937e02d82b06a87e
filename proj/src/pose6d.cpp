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

#include "palmctl/pose6d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_set>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "palmctl/error.hpp"

namespace palmctl {

Point3 center_of_mass(std::span<const Point3> points) {
  if (points.empty()) {
    throw Error(ErrorCode::kStructural, "center of mass of an empty point set");
  }
  Point3 sum = Point3::Zero();
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

PointCloud expand_cloud_knn(std::span<const Point3> points, std::size_t target,
                            std::size_t k) {
  if (points.empty()) throw Error(ErrorCode::kDegenerateInput, "no points to expand");
  if (k == 0) throw Error(ErrorCode::kDomain, "k must be positive");
  const bool coincident = std::all_of(points.begin(), points.end(), [&](const Point3& p) {
    return p == points.front();
  });
  if (coincident) throw Error(ErrorCode::kDegenerateInput, "all points coincide");

  PointCloud cloud(points.begin(), points.end());
  cloud.reserve(std::max(target, cloud.size()));
  std::unordered_set<std::uint64_t> used_pairs;
  std::vector<std::size_t> order;
  std::vector<double> dist;

  while (cloud.size() < target) {
    const std::size_t n = cloud.size();  // neighbors come from this round's start
    const std::size_t kk = std::min(k, n - 1);
    bool grew = false;
    dist.resize(n);
    for (std::size_t i = 0; i < n && cloud.size() < target; ++i) {
      for (std::size_t j = 0; j < n; ++j) dist[j] = (cloud[j] - cloud[i]).squaredNorm();
      order.resize(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
      auto closer = [&](std::size_t a, std::size_t b) {
        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
      };
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk),
                        order.end(), closer);
      for (std::size_t r = 0; r < kk && cloud.size() < target; ++r) {
        const std::size_t j = order[r];
        const std::uint64_t key =
            (static_cast<std::uint64_t>(std::min(i, j)) << 32) | std::max(i, j);
        if (!used_pairs.insert(key).second) continue;
        cloud.push_back(0.5 * (cloud[i] + cloud[j]));
        grew = true;
      }
    }
    if (!grew) throw Error(ErrorCode::kDegenerateInput, "cloud expansion stalled");
  }
  return cloud;
}

Plane fit_plane(std::span<const Point3> cloud) {
  if (cloud.size() < 3) {
    throw Error(ErrorCode::kDegeneratePlane, "plane fit needs at least 3 points");
  }
  // A^T A and A^T B for rows (x, y, 1) and right-hand side z.
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (const auto& p : cloud) {
    const Eigen::Vector3d row(p.x(), p.y(), 1.0);
    ata.noalias() += row * row.transpose();
    atb += row * p.z();
  }
  if (!ata.allFinite() || !atb.allFinite()) {
    throw Error(ErrorCode::kDegeneratePlane, "non-finite point coordinates");
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(ata, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  if (!(ev(0) >= kPlaneConditionFloor * ev(2))) {
    throw Error(ErrorCode::kDegeneratePlane,
                "A^T A is singular: collinear footprint or vertical plane");
  }
  const Eigen::Vector3d abc = ata.ldlt().solve(atb);
  return Plane{abc(0), abc(1), abc(2)};
}

double normal_angle(const Point3& n1, const Point3& n2) {
  // atan2(|n1 x n2|, |n1 . n2|) equals the arccos of the normalized absolute
  // dot product but stays exact for (anti)parallel normals.
  return rad_to_deg(std::atan2(n1.cross(n2).norm(), std::abs(n1.dot(n2))));
}

double plane_angle(const Plane& p1, const Plane& p2) {
  return normal_angle(p1.normal(), p2.normal());
}

EulerDeg plane_euler_angles(const Plane& plane, const Point3& in_plane_axis) {
  const Point3 n = plane.normal();
  const Point3 unit_n = n.normalized();

  EulerDeg e;
  e.ry = std::copysign(90.0 - normal_angle(n, Point3::UnitX()), plane.a);
  e.rx = std::copysign(90.0 - normal_angle(n, Point3::UnitY()), plane.b);
  if (plane.a == 0.0) e.ry = 0.0;
  if (plane.b == 0.0) e.rx = 0.0;

  const Point3 axis = in_plane_axis - in_plane_axis.dot(unit_n) * unit_n;
  if (!(axis.norm() > 1e-9 * in_plane_axis.norm())) {
    throw Error(ErrorCode::kDegenerateAxis, "in-plane axis is parallel to the normal");
  }
  const Point3 ref = Point3::UnitY() - unit_n.y() * unit_n;
  e.rz = wrap_degrees(
      rad_to_deg(std::atan2(unit_n.dot(ref.cross(axis)), ref.dot(axis))));
  return e;
}

Pose6D relative_pose(const Pose6D& current, const Pose6D& reference) {
  Pose6D d;
  d.translation = current.translation - reference.translation;
  d.euler.rx = wrap_degrees(current.euler.rx - reference.euler.rx);
  d.euler.ry = wrap_degrees(current.euler.ry - reference.euler.ry);
  d.euler.rz = wrap_degrees(current.euler.rz - reference.euler.rz);
  return d;
}

Pose6D estimate_pose(std::span<const Point3> landmarks,
                     const PoseEstimatorConfig& config) {
  if (landmarks.size() != kNumLandmarks) {
    throw Error(ErrorCode::kStructural, "pose estimation needs 21 landmarks");
  }
  Pose6D pose;
  pose.translation = center_of_mass(landmarks);
  const PointCloud cloud =
      expand_cloud_knn(landmarks, config.cloud_size, config.neighbors);
  const Plane plane = fit_plane(cloud);
  pose.euler = plane_euler_angles(
      plane, landmarks[kMiddleFingerBase] - landmarks[kWrist]);
  return pose;
}

Pose6D estimate_pose(const LandmarkFrame& frame, const CameraIntrinsics& intr,
                     const PoseEstimatorConfig& config) {
  intr.validate();
  validate_frame(frame, intr);
  const auto points = back_project(frame, intr);
  return estimate_pose(points, config);
}

}  // namespace palmctl
