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

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "palmctl/eval_rmsd.hpp"
#include "palmctl/gesture_mlp.hpp"
#include "palmctl/hand_features.hpp"
#include "palmctl/pose6d.hpp"
#include "palmctl/quadruped_sim.hpp"
#include "palmctl/teleop_fsm.hpp"

namespace palmctl {

struct SessionConfig {
  std::string checkpoint_path;
  IntrinsicsTable intrinsics = {{std::string(kDefaultIntrinsicsId),
                                 default_intrinsics()}};
  FsmConfig fsm;
  WorkspaceLimits limits = WorkspaceLimits::defaults();
  double threshold = kDefaultRejectThreshold;
  PoseEstimatorConfig pose;

  /// Throws Error(kDomain) unless threshold is in (0, 1], debounce >= 1,
  /// limits and intrinsics are valid.
  void validate() const;
};

/// Overlays the keys present in `patch` onto `config`. Recognized keys:
/// model, threshold, debounce, linear_gain, angular_gain, cloud_size,
/// neighbors, intrinsics {id: {fx..height}}, limits {axis: [min, max]}.
/// Unknown keys raise Error(kParse).
void apply_config_patch(SessionConfig& config, const nlohmann::ordered_json& patch);
SessionConfig load_session_config(const std::string& path);

nlohmann::ordered_json pose_to_json(const Pose6D& pose);
Pose6D pose_from_json(const nlohmann::ordered_json& j);

struct TimedCommand {
  double t = 0.0;
  Command command;
};

/// {"type":"SetMode","mode":".."} and so on, without a timestamp.
nlohmann::ordered_json command_to_json(const Command& command);

/// One JSON object per line: {"t":..,"type":"SetMode","mode":".."},
/// {"t":..,"type":"StartTracking","reference":{pose}},
/// {"t":..,"type":"StopTracking"}, {"t":..,"type":"MoveDelta","delta":{pose}}.
std::string serialize_command(const TimedCommand& command);
TimedCommand parse_command(std::string_view line);
void write_command_log(std::ostream& out,
                       const std::vector<TimedCommand>& commands);
std::vector<TimedCommand> read_command_log(std::istream& in);

struct FrameResult {
  double t = 0.0;
  GestureLabel gesture = GestureLabel::kNone;
  GestureProbs probs{};
  Pose6D hand;
  std::optional<Command> command;
  ControlMode mode = ControlMode::kIdle;
  bool tracking = false;
  Pose6D robot;
};

/// One operator session: classifier, pose estimator, control automaton and
/// simulated body, fed strictly in frame order.
class Session {
 public:
  Session(std::shared_ptr<const MlpParams> model, SessionConfig config);

  /// classify -> estimate_pose -> step -> apply_command. On an invalid frame
  /// or a degenerate pose the error propagates and no state changes.
  FrameResult process(const LandmarkFrame& frame);

  const SessionConfig& config() const { return config_; }
  /// Replaces the configuration; the FSM keeps its mode and tracking state
  /// but adopts the new gains and debounce.
  void reconfigure(SessionConfig config);

  const FsmState& fsm() const { return fsm_; }
  const RobotState& robot() const { return robot_; }

 private:
  std::shared_ptr<const MlpParams> model_;
  SessionConfig config_;
  FsmState fsm_;
  RobotState robot_;
};

struct ReplayResult {
  std::vector<TimedCommand> commands;
  Trajectory robot;  // body snapshot after every processed frame
  Trajectory hand;   // estimated hand pose of every processed frame
  std::size_t frames = 0;
  std::size_t skipped_frames = 0;  // degenerate pose, not fed to the FSM
};

/// Runs every frame of the log through a fresh Session. Intrinsics declared
/// in the log extend (and override) those in the config.
ReplayResult run_replay(const LandmarkLog& log,
                        std::shared_ptr<const MlpParams> model,
                        const SessionConfig& config);

/// File-level replay: reads the log and the checkpoint named in the config.
ReplayResult run_replay(const std::string& log_path,
                        const SessionConfig& config);

std::string format_replay_summary(const ReplayResult& result);

/// Reads both trajectory files and compares them; errors name the file.
RmsdReport run_eval(const std::string& est_path, const std::string& truth_path);

}  // namespace palmctl
