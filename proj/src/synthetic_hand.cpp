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

#include "palmctl/synthetic_hand.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "palmctl/error.hpp"
#include "palmctl/pose6d.hpp"

namespace palmctl {

namespace {

struct FingerSpec {
  std::size_t base;  // MCP landmark; the next three indices are the chain
  Eigen::Vector2d base_pos;
  Eigen::Vector2d direction;
  std::array<double, 3> bones;
};

// Index, middle, ring, pinky. The middle-finger base sits on the y-axis so
// the canonical wrist-to-middle direction is +y.
const std::array<FingerSpec, 4> kFingers = {{
    {5, {-0.022, 0.090}, {-0.15, 1.0}, {0.040, 0.025, 0.020}},
    {9, {0.000, 0.095}, {0.00, 1.0}, {0.045, 0.028, 0.022}},
    {13, {0.020, 0.088}, {0.12, 1.0}, {0.042, 0.026, 0.020}},
    {17, {0.038, 0.078}, {0.25, 1.0}, {0.032, 0.020, 0.018}},
}};

// Extended mask per gesture: thumb, index, middle, ring, pinky.
std::array<bool, 5> extended_fingers(GestureLabel g) {
  switch (g) {
    case GestureLabel::kOne: return {false, true, false, false, false};
    case GestureLabel::kTwo: return {false, true, true, false, false};
    case GestureLabel::kThree: return {false, true, true, true, false};
    case GestureLabel::kOpen: return {true, true, true, true, true};
    case GestureLabel::kClose: return {false, false, false, false, false};
    case GestureLabel::kNone: break;
  }
  throw Error(ErrorCode::kDomain, "None has no hand template");
}

Eigen::Matrix3d roll_matrix(double deg) {
  const double c = std::cos(deg_to_rad(deg));
  const double s = std::sin(deg_to_rad(deg));
  Eigen::Matrix3d m;
  m << c, s, 0, -s, c, 0, 0, 0, 1;
  return m;
}

Point3 landmarks_centroid(const HandLandmarks& h) {
  return center_of_mass(std::span<const Point3>(h.data(), h.size()));
}

Pose6D lerp(const Pose6D& a, const Pose6D& b, double f) {
  Pose6D p;
  p.translation = a.translation + f * (b.translation - a.translation);
  p.euler = {a.euler.rx + f * (b.euler.rx - a.euler.rx),
             a.euler.ry + f * (b.euler.ry - a.euler.ry),
             a.euler.rz + f * (b.euler.rz - a.euler.rz)};
  return p;
}

}  // namespace

HandLandmarks hand_template(GestureLabel gesture) {
  const auto ext = extended_fingers(gesture);
  HandLandmarks h;
  auto at = [](const Eigen::Vector2d& xy) { return Point3(xy.x(), xy.y(), 0.0); };
  h[0] = Point3::Zero();

  // Thumb: CMC and MCP are fixed, IP and tip either point out or cross the palm.
  h[1] = Point3(-0.025, 0.025, 0.0);
  h[2] = Point3(-0.045, 0.045, 0.0);
  if (ext[0]) {
    const Eigen::Vector2d dir = Eigen::Vector2d(-0.6, 1.0).normalized();
    h[3] = at(Eigen::Vector2d(-0.045, 0.045) + 0.032 * dir);
    h[4] = at(Eigen::Vector2d(-0.045, 0.045) + 0.060 * dir);
  } else {
    h[3] = Point3(-0.030, 0.055, 0.0);
    h[4] = Point3(-0.012, 0.065, 0.0);
  }

  for (std::size_t f = 0; f < kFingers.size(); ++f) {
    const FingerSpec& spec = kFingers[f];
    const Eigen::Vector2d dir = spec.direction.normalized();
    h[spec.base] = at(spec.base_pos);
    if (ext[f + 1]) {
      double reach = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        reach += spec.bones[j];
        h[spec.base + j + 1] = at(spec.base_pos + reach * dir);
      }
    } else {
      // Curled finger seen from the front: knuckle, then folding back.
      h[spec.base + 1] = at(spec.base_pos + 0.025 * dir);
      h[spec.base + 2] = at(spec.base_pos + 0.005 * dir);
      h[spec.base + 3] = at(spec.base_pos - 0.012 * dir);
    }
  }
  return h;
}

Eigen::Matrix3d hand_rotation(const EulerDeg& e) {
  const double sx = std::sin(deg_to_rad(e.rx));
  const double sy = std::sin(deg_to_rad(e.ry));
  const double nz2 = 1.0 - sx * sx - sy * sy;
  if (!(nz2 > 0.0)) {
    throw Error(ErrorCode::kDomain, "tilts rx, ry turn the palm edge-on to the camera");
  }
  // Unit palm normal facing the camera, inclined by ry toward x and rx toward y.
  const Point3 n(sy, sx, -std::sqrt(nz2));
  const Point3 ref = (Point3::UnitY() - n.y() * n).normalized();
  const double rz = deg_to_rad(e.rz);
  const Point3 fingers = std::cos(rz) * ref + std::sin(rz) * n.cross(ref);
  Eigen::Matrix3d r;
  r.col(0) = fingers.cross(-n);
  r.col(1) = fingers;
  r.col(2) = -n;
  return r;
}

HandLandmarks place_hand(const HandLandmarks& hand_frame, const Pose6D& pose) {
  const Point3 centroid = landmarks_centroid(hand_frame);
  const Eigen::Matrix3d r = hand_rotation(pose.euler);
  HandLandmarks out;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    out[i] = pose.translation + r * (hand_frame[i] - centroid);
  }
  return out;
}

LandmarkFrame render_landmarks(const HandLandmarks& camera_frame,
                               const CameraIntrinsics& intr, double t,
                               std::string intrinsics_id) {
  LandmarkFrame frame;
  frame.timestamp = t;
  frame.intrinsics_id = std::move(intrinsics_id);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const auto [u, v] = meters_to_pixel(camera_frame[i], intr);
    frame.landmarks[i] = {u, v, camera_frame[i].z()};
  }
  validate_frame(frame, intr);
  return frame;
}

LandmarkFrame render_landmarks(const HandLandmarks& camera_frame,
                               const CameraIntrinsics& intr, double t,
                               std::string intrinsics_id,
                               const LandmarkNoise& noise, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  LandmarkFrame frame;
  frame.timestamp = t;
  frame.intrinsics_id = std::move(intrinsics_id);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const auto [u, v] = meters_to_pixel(camera_frame[i], intr);
    const double du = noise.pixel_sigma * unit(rng);
    const double dv = noise.pixel_sigma * unit(rng);
    const double dz = noise.depth_sigma * unit(rng);
    frame.landmarks[i] = {u + du, v + dv, camera_frame[i].z() + dz};
  }
  validate_frame(frame, intr);
  return frame;
}

Pose6D home_hand_pose() {
  Pose6D p;
  p.translation = Point3(0.0, 0.0, 0.5);
  return p;
}

SyntheticSession render_session(const SessionScript& script,
                                const CameraIntrinsics& intr,
                                const LandmarkNoise& noise, std::uint64_t seed) {
  SyntheticSession out;
  const std::string id(kDefaultIntrinsicsId);
  out.log.intrinsics[id] = intr;
  std::mt19937_64 rng(seed);
  const bool noisy = noise.pixel_sigma > 0.0 || noise.depth_sigma > 0.0;

  Pose6D prev = script.start;
  std::size_t index = 0;
  for (const auto& seg : script.segments) {
    const HandLandmarks hand = hand_template(seg.gesture);
    for (int i = 1; i <= seg.frames; ++i) {
      const Pose6D pose = lerp(prev, seg.end, static_cast<double>(i) / seg.frames);
      const double t = script.t0 + static_cast<double>(index++) / script.fps;
      const HandLandmarks cam = place_hand(hand, pose);
      out.log.frames.push_back(noisy ? render_landmarks(cam, intr, t, id, noise, rng)
                                     : render_landmarks(cam, intr, t, id));
      out.hand_truth.append({t, pose});
      out.gestures.push_back(seg.gesture);
    }
    prev = seg.end;
  }
  return out;
}

SessionScript teleop_script(GestureLabel mode_gesture, const Pose6D& offset,
                            int hold_frames, int move_frames) {
  SessionScript s;
  s.start = home_hand_pose();
  Pose6D moved = s.start;
  moved.translation += offset.translation;
  moved.euler = {s.start.euler.rx + offset.euler.rx, s.start.euler.ry + offset.euler.ry,
                 s.start.euler.rz + offset.euler.rz};
  s.segments = {
      {mode_gesture, s.start, hold_frames},
      {GestureLabel::kOpen, s.start, hold_frames},
      {GestureLabel::kOpen, moved, move_frames},
      {GestureLabel::kOpen, moved, hold_frames},
      {GestureLabel::kClose, moved, hold_frames},
  };
  return s;
}

Dataset generate_synthetic_dataset(std::uint64_t seed, std::size_t per_class,
                                   const SyntheticNoise& noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const CameraIntrinsics intr = default_intrinsics();
  const double k = noise.scale;

  Dataset data;
  data.reserve(per_class * kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto label = static_cast<GestureLabel>(c);
    const HandLandmarks base = hand_template(label);
    for (std::size_t n = 0; n < per_class; ++n) {
      for (int attempt = 0;; ++attempt) {
        if (attempt == 1000) {
          throw Error(ErrorCode::kDomain, "synthetic noise keeps the hand out of view");
        }
        HandLandmarks hand = base;
        // Bend each finger chain rigidly about its base.
        const std::array<std::size_t, 5> chain_base = {2, 5, 9, 13, 17};
        for (std::size_t b : chain_base) {
          const Eigen::Matrix3d bend = roll_matrix(k * noise.finger_spread_deg * normal(rng));
          const std::size_t first = b == 2 ? 3 : b + 1;
          const std::size_t last = b == 2 ? 4 : b + 3;
          for (std::size_t j = first; j <= last; ++j) {
            hand[j] = hand[b] + bend * (hand[j] - hand[b]);
          }
        }
        for (auto& p : hand) {
          p += k * noise.jitter_m * Point3(normal(rng), normal(rng), normal(rng));
        }
        Pose6D pose = home_hand_pose();
        pose.translation += Point3(k * noise.offset_m * sym(rng),
                                   k * noise.offset_m * sym(rng),
                                   k * noise.depth_range_m * sym(rng));
        pose.euler = {k * noise.tilt_deg * sym(rng), k * noise.tilt_deg * sym(rng),
                      k * noise.roll_deg * sym(rng)};
        try {
          const LandmarkFrame frame =
              render_landmarks(place_hand(hand, pose), intr, 0.0,
                               std::string(kDefaultIntrinsicsId));
          data.push_back({extract_features(frame), label});
          break;
        } catch (const Error&) {
          // Out of view; draw again.
        }
      }
    }
  }
  return data;
}

}  // namespace palmctl
