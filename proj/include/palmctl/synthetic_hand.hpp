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
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "palmctl/eval_rmsd.hpp"
#include "palmctl/gesture_mlp.hpp"
#include "palmctl/hand_features.hpp"

namespace palmctl {

using HandLandmarks = std::array<Point3, kNumLandmarks>;

/// Canonical landmark layout of a gesture in the hand frame: meters, palm in
/// the z = 0 plane, wrist at the origin, fingers along +y, middle-finger base
/// on the y-axis. Folded fingers lie in the palm plane.
HandLandmarks hand_template(GestureLabel gesture);

/// Hand-to-camera rotation built from the same angle definitions that
/// plane_euler_angles measures, so a placed template reads back exactly:
/// the palm normal is inclined by ry toward +x and rx toward +y, and the
/// fingers are turned by rz about that normal from the projected camera
/// y-axis. Requires sin^2(rx) + sin^2(ry) < 1 (palm not edge-on).
Eigen::Matrix3d hand_rotation(const EulerDeg& euler);

/// Template in the camera frame with its landmark centroid at
/// pose.translation.
HandLandmarks place_hand(const HandLandmarks& hand_frame, const Pose6D& pose);

struct LandmarkNoise {
  double pixel_sigma = 0.0;  // pixels
  double depth_sigma = 0.0;  // meters
};

/// Projects camera-frame landmarks through the pinhole model. Throws
/// Error(kDomain) if any landmark leaves the image or sits behind the camera.
LandmarkFrame render_landmarks(const HandLandmarks& camera_frame,
                               const CameraIntrinsics& intr, double t,
                               std::string intrinsics_id);
LandmarkFrame render_landmarks(const HandLandmarks& camera_frame,
                               const CameraIntrinsics& intr, double t,
                               std::string intrinsics_id,
                               const LandmarkNoise& noise, std::mt19937_64& rng);

/// A scripted segment: hold `gesture` for `frames` frames while the hand
/// moves linearly from the previous segment's end pose to `end`.
struct SessionSegment {
  GestureLabel gesture = GestureLabel::kOpen;
  Pose6D end;
  int frames = 1;
};

struct SessionScript {
  Pose6D start;
  std::vector<SessionSegment> segments;
  double fps = 30.0;
  double t0 = 0.0;
};

struct SyntheticSession {
  LandmarkLog log;
  Trajectory hand_truth;  // the rendered hand pose of every frame
  std::vector<GestureLabel> gestures;
};

SyntheticSession render_session(const SessionScript& script,
                                const CameraIntrinsics& intr = default_intrinsics(),
                                const LandmarkNoise& noise = {},
                                std::uint64_t seed = 0);

/// Canonical hand position for synthetic sessions: 0.5 m in front of the
/// camera on the optical axis, no rotation.
Pose6D home_hand_pose();

/// Mode gesture held, Open held still, move to home + `offset` while open,
/// hold, then Close. `mode_gesture` is One, Two or Three.
SessionScript teleop_script(GestureLabel mode_gesture, const Pose6D& offset,
                            int hold_frames = 6, int move_frames = 30);

}  // namespace palmctl
