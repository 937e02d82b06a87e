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

#include "palmctl/session.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "palmctl/error.hpp"

namespace palmctl {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<const char*, 6> kAxisNames = {"x", "y", "z", "rx", "ry", "rz"};

double number_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(ErrorCode::kParse, std::string("field '") + key + "': expected a number");
  }
  return it->get<double>();
}

bool is_degenerate(ErrorCode code) {
  return code == ErrorCode::kDegenerateInput || code == ErrorCode::kDegeneratePlane ||
         code == ErrorCode::kDegenerateAxis;
}

}  // namespace

void SessionConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kDomain, "threshold must be in (0, 1]");
  }
  if (fsm.debounce_frames < 1) throw Error(ErrorCode::kDomain, "debounce must be >= 1");
  if (!std::isfinite(fsm.linear_gain) || !std::isfinite(fsm.angular_gain)) {
    throw Error(ErrorCode::kDomain, "gains must be finite");
  }
  if (pose.neighbors < 1) throw Error(ErrorCode::kDomain, "neighbors must be >= 1");
  limits.validate();
  for (const auto& [id, intr] : intrinsics) intr.validate();
}

void apply_config_patch(SessionConfig& config, const json& patch) {
  if (!patch.is_object()) throw Error(ErrorCode::kParse, "config must be a JSON object");
  SessionConfig next = config;
  for (const auto& [key, value] : patch.items()) {
    if (key == "model") {
      if (!value.is_string()) throw Error(ErrorCode::kParse, "field 'model': expected a string");
      next.checkpoint_path = value.get<std::string>();
    } else if (key == "threshold") {
      next.threshold = number_field(patch, "threshold");
    } else if (key == "debounce") {
      if (!value.is_number_integer()) {
        throw Error(ErrorCode::kParse, "field 'debounce': expected an integer");
      }
      next.fsm.debounce_frames = value.get<int>();
    } else if (key == "linear_gain") {
      next.fsm.linear_gain = number_field(patch, "linear_gain");
    } else if (key == "angular_gain") {
      next.fsm.angular_gain = number_field(patch, "angular_gain");
    } else if (key == "cloud_size" || key == "neighbors") {
      if (!value.is_number_unsigned()) {
        throw Error(ErrorCode::kParse, "field '" + key + "': expected a positive integer");
      }
      (key == "cloud_size" ? next.pose.cloud_size : next.pose.neighbors) =
          value.get<std::size_t>();
    } else if (key == "intrinsics") {
      if (!value.is_object()) throw Error(ErrorCode::kParse, "field 'intrinsics': expected an object");
      for (const auto& [id, rec] : value.items()) {
        json header = rec;
        header["intrinsics"] = id;
        next.intrinsics[id] = parse_intrinsics_record(header.dump()).second;
      }
    } else if (key == "limits") {
      if (!value.is_object()) throw Error(ErrorCode::kParse, "field 'limits': expected an object");
      for (const auto& [axis, range] : value.items()) {
        std::size_t i = 0;
        while (i < kAxisNames.size() && axis != kAxisNames[i]) ++i;
        if (i == kAxisNames.size() || !range.is_array() || range.size() != 2 ||
            !range[0].is_number() || !range[1].is_number()) {
          throw Error(ErrorCode::kParse, "field 'limits." + axis + "': expected [min, max]");
        }
        next.limits.axes[i] = {range[0].get<double>(), range[1].get<double>()};
      }
    } else {
      throw Error(ErrorCode::kParse, "unknown config key '" + key + "'");
    }
  }
  next.validate();
  config = std::move(next);
}

SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParse, path + ": not valid JSON");
  SessionConfig config;
  try {
    apply_config_patch(config, j);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
  return config;
}

json pose_to_json(const Pose6D& pose) {
  json j;
  j["x"] = pose.translation.x();
  j["y"] = pose.translation.y();
  j["z"] = pose.translation.z();
  j["rx"] = pose.euler.rx;
  j["ry"] = pose.euler.ry;
  j["rz"] = pose.euler.rz;
  return j;
}

Pose6D pose_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "pose must be a JSON object");
  Pose6D p;
  p.translation = Point3(number_field(j, "x"), number_field(j, "y"), number_field(j, "z"));
  p.euler = {number_field(j, "rx"), number_field(j, "ry"), number_field(j, "rz")};
  return p;
}

json command_to_json(const Command& command) {
  json j;
  j["type"] = std::string(command_name(command));
  std::visit(
      [&j](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, cmd::SetMode>) {
          j["mode"] = std::string(to_string(v.mode));
        } else if constexpr (std::is_same_v<T, cmd::StartTracking>) {
          j["reference"] = pose_to_json(v.reference);
        } else if constexpr (std::is_same_v<T, cmd::MoveDelta>) {
          j["delta"] = pose_to_json(v.delta);
        }
      },
      command);
  return j;
}

std::string serialize_command(const TimedCommand& c) {
  json j;
  j["t"] = c.t;
  j.update(command_to_json(c.command));
  return j.dump();
}

TimedCommand parse_command(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kParse, "command record is not a JSON object");
  }
  TimedCommand c;
  c.t = number_field(j, "t");
  auto type = j.find("type");
  if (type == j.end() || !type->is_string()) {
    throw Error(ErrorCode::kParse, "field 'type': expected a string");
  }
  const std::string name = type->get<std::string>();
  if (name == "SetMode") {
    auto mode = j.contains("mode") && j["mode"].is_string()
                    ? control_mode_from_string(j["mode"].get<std::string>())
                    : std::nullopt;
    if (!mode) throw Error(ErrorCode::kParse, "field 'mode': unknown control mode");
    c.command = cmd::SetMode{*mode};
  } else if (name == "StartTracking") {
    if (!j.contains("reference")) throw Error(ErrorCode::kParse, "field 'reference': missing");
    c.command = cmd::StartTracking{pose_from_json(j["reference"])};
  } else if (name == "StopTracking") {
    c.command = cmd::StopTracking{};
  } else if (name == "MoveDelta") {
    if (!j.contains("delta")) throw Error(ErrorCode::kParse, "field 'delta': missing");
    c.command = cmd::MoveDelta{pose_from_json(j["delta"])};
  } else {
    throw Error(ErrorCode::kParse, "field 'type': unknown command '" + name + "'");
  }
  return c;
}

void write_command_log(std::ostream& out, const std::vector<TimedCommand>& commands) {
  for (const auto& c : commands) out << serialize_command(c) << '\n';
}

std::vector<TimedCommand> read_command_log(std::istream& in) {
  std::vector<TimedCommand> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_command(line));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Session::Session(std::shared_ptr<const MlpParams> model, SessionConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  if (!model_) throw Error(ErrorCode::kContract, "session needs a model");
  model_->validate();
  config_.validate();
  fsm_.config = config_.fsm;
  robot_ = make_robot(config_.limits);
}

void Session::reconfigure(SessionConfig config) {
  config.validate();
  config_ = std::move(config);
  fsm_.config = config_.fsm;
  robot_.limits = config_.limits;
  robot_.body = robot_.limits.clamp(robot_.body);
}

FrameResult Session::process(const LandmarkFrame& frame) {
  auto it = config_.intrinsics.find(frame.intrinsics_id);
  if (it == config_.intrinsics.end()) {
    throw Error(ErrorCode::kParse,
                "field 'intr': unknown intrinsics id '" + frame.intrinsics_id + "'");
  }
  const CameraIntrinsics& intr = it->second;
  validate_frame(frame, intr);

  FrameResult r;
  r.t = frame.timestamp;
  const FeatureVector features = extract_features(frame);
  r.probs = forward(*model_, features, Mode::kEval);
  r.gesture = classify(r.probs, config_.threshold);
  r.hand = estimate_pose(frame, intr, config_.pose);

  StepResult stepped = step(fsm_, r.gesture, r.hand);
  RobotState robot = stepped.command
                         ? apply_command(robot_, *stepped.command, frame.timestamp)
                         : advance(robot_, frame.timestamp);
  fsm_ = std::move(stepped.state);
  robot_ = robot;

  r.command = std::move(stepped.command);
  r.mode = fsm_.mode;
  r.tracking = fsm_.tracking;
  r.robot = robot_.body;
  return r;
}

ReplayResult run_replay(const LandmarkLog& log, std::shared_ptr<const MlpParams> model,
                        const SessionConfig& config) {
  SessionConfig merged = config;
  for (const auto& [id, intr] : log.intrinsics) merged.intrinsics[id] = intr;
  Session session(std::move(model), merged);

  ReplayResult result;
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const LandmarkFrame& frame = log.frames[i];
    ++result.frames;
    FrameResult r;
    try {
      r = session.process(frame);
    } catch (const Error& e) {
      if (is_degenerate(e.code())) {
        ++result.skipped_frames;
        continue;
      }
      throw Error(e.code(), "frame " + std::to_string(i) + ": " + e.what());
    }
    if (r.command) result.commands.push_back({r.t, *r.command});
    result.robot.append(snapshot(session.robot()));
    result.hand.append({r.t, r.hand});
  }
  return result;
}

ReplayResult run_replay(const std::string& log_path, const SessionConfig& config) {
  if (config.checkpoint_path.empty()) {
    throw Error(ErrorCode::kIo, "no model checkpoint configured");
  }
  auto model = std::make_shared<const MlpParams>(load_checkpoint_file(config.checkpoint_path));
  const LandmarkLog log = read_landmark_log_file(log_path);
  return run_replay(log, std::move(model), config);
}

std::string format_replay_summary(const ReplayResult& r) {
  std::ostringstream out;
  out << "frames=" << r.frames << " skipped=" << r.skipped_frames
      << " commands=" << r.commands.size();
  if (!r.robot.empty()) {
    const Pose6D& p = r.robot.back().pose;
    out << " final_robot=" << format_double(p.translation.x()) << ','
        << format_double(p.translation.y()) << ',' << format_double(p.translation.z())
        << ',' << format_double(p.euler.rx) << ',' << format_double(p.euler.ry) << ','
        << format_double(p.euler.rz);
  }
  return out.str();
}

RmsdReport run_eval(const std::string& est_path, const std::string& truth_path) {
  const Trajectory est = read_trajectory_file(est_path);
  const Trajectory truth = read_trajectory_file(truth_path);
  try {
    return compare(est, truth);
  } catch (const Error& e) {
    throw Error(e.code(), est_path + " vs " + truth_path + ": " + e.what());
  }
}

}  // namespace palmctl
