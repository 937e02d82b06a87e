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
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "palmctl/geometry.hpp"

namespace palmctl {

inline constexpr std::size_t kNumLandmarks = 21;
inline constexpr std::size_t kNumEdges = 20;
inline constexpr std::size_t kFeatureSize = 2 * kNumLandmarks + kNumEdges;

/// Landmark indices used outside of feature extraction.
inline constexpr std::size_t kWrist = 0;
inline constexpr std::size_t kMiddleFingerBase = 9;

/// Wrist-rooted skeleton: four bones per finger, thumb through pinky.
inline constexpr std::array<std::pair<std::size_t, std::size_t>, kNumEdges>
    kSkeletonEdges = {{{0, 1},   {1, 2},   {2, 3},   {3, 4},
                       {0, 5},   {5, 6},   {6, 7},   {7, 8},
                       {0, 9},   {9, 10},  {10, 11}, {11, 12},
                       {0, 13},  {13, 14}, {14, 15}, {15, 16},
                       {0, 17},  {17, 18}, {18, 19}, {19, 20}}};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws Error(kDomain) unless fx, fy > 0 and the principal point lies
  /// inside the image.
  void validate() const;
  bool contains(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u < width && v < height;
  }

  friend bool operator==(const CameraIntrinsics&,
                         const CameraIntrinsics&) = default;
};

/// 640x480 with a 500 px focal length, the defaults for synthetic data.
CameraIntrinsics default_intrinsics();
inline constexpr std::string_view kDefaultIntrinsicsId = "cam0";

struct Landmark {
  double u = 0.0;  // pixels
  double v = 0.0;  // pixels
  double z = 0.0;  // depth, meters

  friend bool operator==(const Landmark&, const Landmark&) = default;
};

struct LandmarkFrame {
  double timestamp = 0.0;
  std::array<Landmark, kNumLandmarks> landmarks{};
  std::string intrinsics_id;

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

using IntrinsicsTable = std::map<std::string, CameraIntrinsics, std::less<>>;

/// Checks depth positivity and image bounds against `intr`.
void validate_frame(const LandmarkFrame& frame, const CameraIntrinsics& intr);

/// Parses one frame record `{"t":..,"lm":[[u,v,z],...],"intr":".."}`.
/// The intrinsics id must be present in `table`.
LandmarkFrame parse_frame(std::string_view line, const IntrinsicsTable& table);
std::string serialize_frame(const LandmarkFrame& frame);

/// Header record `{"intrinsics":"id","fx":..,"fy":..,"cx":..,"cy":..,
/// "width":..,"height":..}`.
std::pair<std::string, CameraIntrinsics> parse_intrinsics_record(
    std::string_view line);
std::string serialize_intrinsics_record(const std::string& id,
                                        const CameraIntrinsics& intr);

/// A whole landmark log: intrinsics headers followed by frame records.
struct LandmarkLog {
  IntrinsicsTable intrinsics;
  std::vector<LandmarkFrame> frames;
};

/// Reads a log. Parse errors carry the 1-based line number in the message.
/// Blank lines are skipped. Frame timestamps must strictly increase.
LandmarkLog read_landmark_log(std::istream& in);
LandmarkLog read_landmark_log_file(const std::string& path);
void write_landmark_log(std::ostream& out, const LandmarkLog& log);

/// Pinhole back-projection of pixel (u, v) at depth z.
Point3 pixel_to_meters(double u, double v, double z,
                       const CameraIntrinsics& intr);

/// Forward pinhole projection; the inverse of pixel_to_meters.
std::pair<double, double> meters_to_pixel(const Point3& p,
                                          const CameraIntrinsics& intr);

std::array<Point3, kNumLandmarks> back_project(const LandmarkFrame& frame,
                                               const CameraIntrinsics& intr);

using FeatureVector = std::array<double, kFeatureSize>;

/// Classifier input: 21 interleaved (X, Y) pairs normalized to the hand's
/// pixel bounding box, then the 20 skeleton edge lengths divided by the
/// longest edge.
FeatureVector extract_features(const LandmarkFrame& frame);

}  // namespace palmctl
