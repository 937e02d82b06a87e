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

#include "palmctl/hand_features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "palmctl/error.hpp"

namespace palmctl {

using ordered_json = nlohmann::ordered_json;

namespace {

Error parse_error(std::string_view field, std::string_view detail) {
  return Error(ErrorCode::kParse,
               "field '" + std::string(field) + "': " + std::string(detail));
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw parse_error(key, "missing");
  return *it;
}

double require_number(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number()) throw parse_error(key, "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw parse_error(key, "not finite");
  return d;
}

int require_int(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number_integer()) throw parse_error(key, "expected an integer");
  return v.get<int>();
}

nlohmann::json parse_object(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParse, "record is not valid JSON");
  if (!j.is_object()) throw Error(ErrorCode::kParse, "record is not a JSON object");
  return j;
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kDomain, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kDomain, "image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::kDomain, "principal point outside the image");
  }
}

CameraIntrinsics default_intrinsics() {
  return CameraIntrinsics{500.0, 500.0, 320.0, 240.0, 640, 480};
}

void validate_frame(const LandmarkFrame& frame, const CameraIntrinsics& intr) {
  if (!std::isfinite(frame.timestamp)) {
    throw Error(ErrorCode::kDomain, "timestamp is not finite");
  }
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const Landmark& lm = frame.landmarks[i];
    if (!(lm.z > 0.0) || !std::isfinite(lm.z)) {
      throw Error(ErrorCode::kDomain,
                  "landmark " + std::to_string(i) + ": depth must be positive");
    }
    if (!intr.contains(lm.u, lm.v)) {
      throw Error(ErrorCode::kDomain,
                  "landmark " + std::to_string(i) + ": outside the image");
    }
  }
}

LandmarkFrame parse_frame(std::string_view line, const IntrinsicsTable& table) {
  const nlohmann::json j = parse_object(line);
  LandmarkFrame frame;
  frame.timestamp = require_number(j, "t");

  const auto& lm = require(j, "lm");
  if (!lm.is_array()) throw parse_error("lm", "expected an array");
  if (lm.size() != kNumLandmarks) {
    throw Error(ErrorCode::kStructural,
                "field 'lm': expected 21 landmarks, got " +
                    std::to_string(lm.size()));
  }
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const auto& triple = lm[i];
    if (!triple.is_array() || triple.size() != 3 ||
        !std::all_of(triple.begin(), triple.end(),
                     [](const auto& x) { return x.is_number(); })) {
      throw parse_error("lm", "entry " + std::to_string(i) +
                                  " is not a [u, v, z] triple");
    }
    frame.landmarks[i] = {triple[0].get<double>(), triple[1].get<double>(),
                          triple[2].get<double>()};
  }

  const auto& intr = require(j, "intr");
  if (!intr.is_string()) throw parse_error("intr", "expected a string");
  frame.intrinsics_id = intr.get<std::string>();
  auto it = table.find(frame.intrinsics_id);
  if (it == table.end()) {
    throw parse_error("intr", "unknown intrinsics id '" + frame.intrinsics_id + "'");
  }
  validate_frame(frame, it->second);
  return frame;
}

std::string serialize_frame(const LandmarkFrame& frame) {
  ordered_json j;
  j["t"] = frame.timestamp;
  ordered_json lm = ordered_json::array();
  for (const auto& l : frame.landmarks) lm.push_back({l.u, l.v, l.z});
  j["lm"] = std::move(lm);
  j["intr"] = frame.intrinsics_id;
  return j.dump();
}

std::pair<std::string, CameraIntrinsics> parse_intrinsics_record(
    std::string_view line) {
  const nlohmann::json j = parse_object(line);
  const auto& id = require(j, "intrinsics");
  if (!id.is_string()) throw parse_error("intrinsics", "expected a string");
  CameraIntrinsics intr;
  intr.fx = require_number(j, "fx");
  intr.fy = require_number(j, "fy");
  intr.cx = require_number(j, "cx");
  intr.cy = require_number(j, "cy");
  intr.width = require_int(j, "width");
  intr.height = require_int(j, "height");
  intr.validate();
  return {id.get<std::string>(), intr};
}

std::string serialize_intrinsics_record(const std::string& id,
                                        const CameraIntrinsics& intr) {
  ordered_json j;
  j["intrinsics"] = id;
  j["fx"] = intr.fx;
  j["fy"] = intr.fy;
  j["cx"] = intr.cx;
  j["cy"] = intr.cy;
  j["width"] = intr.width;
  j["height"] = intr.height;
  return j.dump();
}

LandmarkLog read_landmark_log(std::istream& in) {
  LandmarkLog log;
  std::string line;
  std::size_t line_no = 0;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      if (parse_object(line).contains("intrinsics")) {
        auto [id, intr] = parse_intrinsics_record(line);
        log.intrinsics[id] = intr;
        continue;
      }
      LandmarkFrame frame = parse_frame(line, log.intrinsics);
      if (!(frame.timestamp > last_t)) {
        throw Error(ErrorCode::kParse, "field 't': timestamps must strictly increase");
      }
      last_t = frame.timestamp;
      log.frames.push_back(std::move(frame));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

LandmarkLog read_landmark_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open landmark log '" + path + "'");
  try {
    return read_landmark_log(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void write_landmark_log(std::ostream& out, const LandmarkLog& log) {
  for (const auto& [id, intr] : log.intrinsics) {
    out << serialize_intrinsics_record(id, intr) << '\n';
  }
  for (const auto& frame : log.frames) out << serialize_frame(frame) << '\n';
}

Point3 pixel_to_meters(double u, double v, double z,
                       const CameraIntrinsics& intr) {
  if (!(z > 0.0)) throw Error(ErrorCode::kDomain, "depth must be positive");
  return {(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z};
}

std::pair<double, double> meters_to_pixel(const Point3& p,
                                          const CameraIntrinsics& intr) {
  if (!(p.z() > 0.0)) throw Error(ErrorCode::kDomain, "point behind the camera");
  return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

std::array<Point3, kNumLandmarks> back_project(const LandmarkFrame& frame,
                                               const CameraIntrinsics& intr) {
  std::array<Point3, kNumLandmarks> pts;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const auto& lm = frame.landmarks[i];
    pts[i] = pixel_to_meters(lm.u, lm.v, lm.z, intr);
  }
  return pts;
}

FeatureVector extract_features(const LandmarkFrame& frame) {
  const auto& lms = frame.landmarks;
  auto [umin, umax] = std::minmax_element(
      lms.begin(), lms.end(), [](const auto& a, const auto& b) { return a.u < b.u; });
  auto [vmin, vmax] = std::minmax_element(
      lms.begin(), lms.end(), [](const auto& a, const auto& b) { return a.v < b.v; });
  const double u0 = umin->u;
  const double v0 = vmin->v;
  const double width = umax->u - u0;
  const double height = vmax->v - v0;
  if (!(width > 0.0) || !(height > 0.0)) {
    throw Error(ErrorCode::kDegenerateInput,
                "landmark bounding box has zero width or height");
  }

  FeatureVector f{};
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    f[2 * i] = (lms[i].u - u0) / width;
    f[2 * i + 1] = (lms[i].v - v0) / height;
  }

  std::array<double, kNumEdges> lengths{};
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    const auto& p = lms[kSkeletonEdges[e].first];
    const auto& q = lms[kSkeletonEdges[e].second];
    lengths[e] = std::hypot(q.u - p.u, q.v - p.v);
  }
  // Nonzero: the skeleton spans all landmarks and the box is not degenerate.
  const double longest = *std::max_element(lengths.begin(), lengths.end());
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    f[2 * kNumLandmarks + e] = lengths[e] / longest;
  }
  return f;
}

}  // namespace palmctl
