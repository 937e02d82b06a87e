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

#include <pthread.h>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "palmctl/error.hpp"
#include "palmctl/gesture_mlp.hpp"
#include "palmctl/session.hpp"
#include "palmctl/synthetic_hand.hpp"
#include "palmctl/wire.hpp"

namespace {

using namespace palmctl;
using json = nlohmann::ordered_json;

constexpr const char* kEndpointEnv = "PALMCTL_ENDPOINT";

struct ConfigFlags {
  std::string config_path;
  std::string model_path;
  std::optional<double> threshold;
  std::optional<int> debounce;
  std::optional<double> linear_gain;
  std::optional<double> angular_gain;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Session config file (JSON)");
    app->add_option("--model", model_path, "Model checkpoint (overrides config)");
    app->add_option("--threshold", threshold, "Gesture rejection threshold");
    app->add_option("--debounce", debounce, "Frames a gesture must persist");
    app->add_option("--linear-gain", linear_gain, "Hand-to-robot translation gain");
    app->add_option("--angular-gain", angular_gain, "Hand-to-robot rotation gain");
  }

  SessionConfig resolve() const {
    SessionConfig c = config_path.empty() ? SessionConfig{} : load_session_config(config_path);
    json patch = json::object();
    if (!model_path.empty()) patch["model"] = model_path;
    if (threshold) patch["threshold"] = *threshold;
    if (debounce) patch["debounce"] = *debounce;
    if (linear_gain) patch["linear_gain"] = *linear_gain;
    if (angular_gain) patch["angular_gain"] = *angular_gain;
    apply_config_patch(c, patch);
    return c;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  return out;
}

json templates_json() {
  json j;
  const std::string id(kDefaultIntrinsicsId);
  j["intrinsics"] = json::parse(serialize_intrinsics_record(id, default_intrinsics()));
  j["home"] = pose_to_json(home_hand_pose());
  json edges = json::array();
  for (const auto& [a, b] : kSkeletonEdges) edges.push_back({a, b});
  j["skeleton"] = edges;
  json gestures = json::object();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto label = static_cast<GestureLabel>(c);
    json pts = json::array();
    for (const auto& p : hand_template(label)) pts.push_back({p.x(), p.y(), p.z()});
    gestures[std::string(to_string(label))] = pts;
  }
  j["gestures"] = gestures;
  return j;
}

int run_gen_dataset(std::uint64_t seed, std::size_t per_class, double noise_scale,
                    const std::string& out_path, const std::string& templates_path) {
  SyntheticNoise noise;
  noise.scale = noise_scale;
  const Dataset data = generate_synthetic_dataset(seed, per_class, noise);
  auto out = open_out(out_path);
  write_dataset(out, data);
  if (!templates_path.empty()) {
    auto t = open_out(templates_path);
    t << templates_json().dump(2) << '\n';
  }
  std::cout << "samples=" << data.size() << '\n';
  return 0;
}

int run_train(const std::string& dataset_path, std::uint64_t data_seed,
              std::size_t per_class, const TrainConfig& config,
              const std::string& out_path) {
  Dataset data;
  if (!dataset_path.empty()) {
    std::ifstream in(dataset_path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open dataset '" + dataset_path + "'");
    data = read_dataset(in);
  } else {
    data = generate_synthetic_dataset(data_seed, per_class);
  }
  const auto start = std::chrono::steady_clock::now();
  const TrainResult r = train(data, config);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_checkpoint_file(out_path, r.params);
  std::cout << "train=" << r.train_count << " test=" << r.test_count
            << " train_accuracy=" << format_double(r.train_accuracy)
            << " test_accuracy=" << format_double(r.test_accuracy)
            << " seconds=" << format_double(secs) << '\n';
  return 0;
}

int run_gen_session(const std::string& gesture_name, const Pose6D& offset,
                    const LandmarkNoise& noise, std::uint64_t seed,
                    const std::string& out_path, const std::string& truth_path) {
  const auto gesture = gesture_from_string(gesture_name);
  if (!gesture || !(gesture == GestureLabel::kOne || gesture == GestureLabel::kTwo ||
                    gesture == GestureLabel::kThree)) {
    throw Error(ErrorCode::kParse, "--mode must be One, Two or Three");
  }
  const SyntheticSession s =
      render_session(teleop_script(*gesture, offset), default_intrinsics(), noise, seed);
  auto out = open_out(out_path);
  write_landmark_log(out, s.log);
  if (!truth_path.empty()) write_trajectory_file(truth_path, s.hand_truth);
  std::cout << "frames=" << s.log.frames.size() << '\n';
  return 0;
}

int run_replay_cmd(const std::string& log_path, const ConfigFlags& flags,
                   const std::string& commands_path, const std::string& trajectory_path,
                   const std::string& hand_path) {
  const SessionConfig config = flags.resolve();
  const ReplayResult r = run_replay(log_path, config);
  if (!commands_path.empty()) {
    auto out = open_out(commands_path);
    write_command_log(out, r.commands);
  }
  if (!trajectory_path.empty()) write_trajectory_file(trajectory_path, r.robot);
  if (!hand_path.empty()) write_trajectory_file(hand_path, r.hand);
  std::cout << format_replay_summary(r) << '\n';
  return 0;
}

int run_eval_cmd(const std::string& est, const std::string& truth, bool as_json) {
  const RmsdReport r = run_eval(est, truth);
  std::cout << (as_json ? format_report_json(r) : format_report_text(r)) << '\n';
  return 0;
}

int run_serve(const ConfigFlags& flags, std::string listen,
              std::optional<std::uint16_t> ws_port) {
  const SessionConfig config = flags.resolve();
  if (config.checkpoint_path.empty()) {
    throw Error(ErrorCode::kIo, "serve needs a model checkpoint (--model or config)");
  }
  if (listen.empty()) {
    const char* env = std::getenv(kEndpointEnv);
    listen = env ? env : "127.0.0.1:7878";
  }
  ServerOptions options = parse_endpoint(listen);
  options.ws_port = ws_port;
  auto model = std::make_shared<const MlpParams>(load_checkpoint_file(config.checkpoint_path));

  // Block termination signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Server server(model, config, options);
  server.start();
  std::cout << "listening tcp=" << options.host << ':' << server.port();
  if (auto ws = server.ws_port()) std::cout << " ws=" << options.host << ':' << *ws;
  std::cout << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gesture teleoperation pipeline: training, replay, evaluation and serving"};
  app.require_subcommand(1);

  std::uint64_t seed = 7;
  std::size_t per_class = 2500;
  double noise_scale = 1.0;
  std::string out_path, templates_path;
  auto* gen = app.add_subcommand("gen-dataset", "Generate the synthetic gesture dataset");
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--per-class", per_class, "Samples per gesture");
  gen->add_option("--noise-scale", noise_scale, "Multiplier on all generator noise");
  gen->add_option("--out", out_path, "Dataset CSV")->required();
  gen->add_option("--templates", templates_path, "Also export the gesture templates (JSON)");

  std::string dataset_path, model_out;
  TrainConfig tc;
  auto* tr = app.add_subcommand("train", "Train the gesture classifier");
  tr->add_option("--dataset", dataset_path, "Dataset CSV (default: generate synthetic)");
  tr->add_option("--data-seed", seed, "Seed for the generated dataset");
  tr->add_option("--per-class", per_class, "Generated samples per gesture");
  tr->add_option("--epochs", tc.epochs, "Training epochs");
  tr->add_option("--batch", tc.batch_size, "Mini-batch size");
  tr->add_option("--lr", tc.learning_rate, "Adam learning rate");
  tr->add_option("--split", tc.split, "Training fraction");
  tr->add_option("--seed", tc.seed, "Initialization, split and shuffle seed");
  tr->add_option("--out", model_out, "Checkpoint to write")->required();

  std::string gesture_name = "One", truth_path;
  Pose6D offset;
  LandmarkNoise lnoise;
  std::uint64_t session_seed = 0;
  auto* gs = app.add_subcommand("gen-session", "Render a scripted synthetic teleoperation session");
  gs->add_option("--mode", gesture_name, "Mode gesture: One, Two or Three");
  gs->add_option("--dx", offset.translation.x(), "Hand offset x (m)");
  gs->add_option("--dy", offset.translation.y(), "Hand offset y (m)");
  gs->add_option("--dz", offset.translation.z(), "Hand offset z (m)");
  gs->add_option("--drx", offset.euler.rx, "Hand rotation rx (deg)");
  gs->add_option("--dry", offset.euler.ry, "Hand rotation ry (deg)");
  gs->add_option("--drz", offset.euler.rz, "Hand rotation rz (deg)");
  gs->add_option("--pixel-noise", lnoise.pixel_sigma, "Landmark pixel noise std dev");
  gs->add_option("--depth-noise", lnoise.depth_sigma, "Landmark depth noise std dev (m)");
  gs->add_option("--seed", session_seed, "Noise seed");
  gs->add_option("--out", out_path, "Landmark log to write")->required();
  gs->add_option("--truth", truth_path, "Ground-truth hand trajectory CSV");

  ConfigFlags replay_flags;
  std::string log_path, commands_path, trajectory_path, hand_path;
  auto* rp = app.add_subcommand("replay", "Run a landmark log through the pipeline");
  rp->add_option("--log", log_path, "Landmark log")->required();
  replay_flags.attach(rp);
  rp->add_option("--commands", commands_path, "Command log to write");
  rp->add_option("--trajectory", trajectory_path, "Robot body trajectory CSV to write");
  rp->add_option("--hand-trajectory", hand_path, "Estimated hand trajectory CSV to write");

  std::string est_path, eval_truth;
  bool as_json = false;
  auto* ev = app.add_subcommand("eval", "RMSD between an estimated and a ground-truth trajectory");
  ev->add_option("--est", est_path, "Estimated trajectory CSV")->required();
  ev->add_option("--truth", eval_truth, "Ground-truth trajectory CSV")->required();
  ev->add_flag("--json", as_json, "Emit the machine-readable record");

  ConfigFlags serve_flags;
  std::string listen;
  std::optional<std::uint16_t> ws_port;
  auto* sv = app.add_subcommand("serve", "Serve operator sessions over the framed JSON protocol");
  serve_flags.attach(sv);
  sv->add_option("--listen", listen,
                 std::string("host:port for framed TCP (default $") + kEndpointEnv +
                     " or 127.0.0.1:7878)");
  sv->add_option("--ws-port", ws_port, "Also accept WebSocket clients on this port");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return run_gen_dataset(seed, per_class, noise_scale, out_path, templates_path);
    if (*tr) return run_train(dataset_path, seed, per_class, tc, model_out);
    if (*gs) return run_gen_session(gesture_name, offset, lnoise, session_seed, out_path, truth_path);
    if (*rp) return run_replay_cmd(log_path, replay_flags, commands_path, trajectory_path, hand_path);
    if (*ev) return run_eval_cmd(est_path, eval_truth, as_json);
    if (*sv) return run_serve(serve_flags, listen, ws_port);
  } catch (const Error& e) {
    std::cerr << "palmctl: error[" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "palmctl: error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
