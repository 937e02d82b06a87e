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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "palmctl/error.hpp"
#include "palmctl/eval_rmsd.hpp"
#include "palmctl/gesture_mlp.hpp"
#include "palmctl/hand_features.hpp"
#include "palmctl/pose6d.hpp"
#include "palmctl/session.hpp"
#include "palmctl/synthetic_hand.hpp"
#include "palmctl/teleop_fsm.hpp"
#include "palmctl/wire.hpp"

namespace py = pybind11;
using namespace palmctl;
using json = nlohmann::ordered_json;

namespace {

using Triple = std::array<double, 3>;
using Row = std::array<double, 7>;

py::object json_module() { return py::module_::import("json"); }

py::object to_python(const json& j) { return json_module().attr("loads")(j.dump()); }

json from_python(const py::object& o) {
  return json::parse(json_module().attr("dumps")(o).cast<std::string>());
}

py::dict pose_dict(const Pose6D& p) {
  py::dict d;
  d["x"] = p.translation.x();
  d["y"] = p.translation.y();
  d["z"] = p.translation.z();
  d["rx"] = p.euler.rx;
  d["ry"] = p.euler.ry;
  d["rz"] = p.euler.rz;
  return d;
}

Pose6D pose_arg(const py::dict& d) {
  Pose6D p;
  auto get = [&d](const char* k) { return d.contains(k) ? d[k].cast<double>() : 0.0; };
  p.translation = Point3(get("x"), get("y"), get("z"));
  p.euler = {get("rx"), get("ry"), get("rz")};
  return p;
}

std::vector<Point3> points_arg(const std::vector<Triple>& pts) {
  std::vector<Point3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.emplace_back(p[0], p[1], p[2]);
  return out;
}

std::vector<Triple> points_out(const std::vector<Point3>& pts) {
  std::vector<Triple> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p.x(), p.y(), p.z()});
  return out;
}

GestureLabel gesture_arg(const std::string& name) {
  auto g = gesture_from_string(name);
  if (!g) throw Error(ErrorCode::kParse, "unknown gesture '" + name + "'");
  return *g;
}

std::vector<Row> rows_out(const Trajectory& t) {
  std::vector<Row> out;
  for (const auto& s : t.samples()) {
    const auto& p = s.pose;
    out.push_back({s.t, p.translation.x(), p.translation.y(), p.translation.z(), p.euler.rx,
                   p.euler.ry, p.euler.rz});
  }
  return out;
}

Trajectory rows_arg(const std::vector<Row>& rows) {
  std::vector<TrajectorySample> samples;
  for (const auto& r : rows) {
    samples.push_back({r[0], Pose6D{Point3(r[1], r[2], r[3]), EulerDeg{r[4], r[5], r[6]}}});
  }
  return Trajectory(std::move(samples));
}

SessionConfig config_arg(const py::object& config) {
  SessionConfig c;
  if (!config.is_none()) apply_config_patch(c, from_python(config));
  return c;
}

py::dict report_dict(const RmsdReport& r) {
  py::dict d;
  d["linear_rmsd_mm"] = r.linear_mm;
  d["angular_rmsd_deg"] = r.angular_deg;
  d["samples"] = r.sample_count;
  return d;
}

using ModelPtr = std::shared_ptr<const MlpParams>;

// Python-facing handle on an immutable checkpoint shared with sessions.
struct Model {
  ModelPtr params;
};

Model make_model(MlpParams p) { return Model{std::make_shared<const MlpParams>(std::move(p))}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gesture teleoperation core: features, classifier, pose, control, evaluation";

  static py::exception<Error> error_type(m, "PalmctlError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = py::str(std::string(to_string(e.code())));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width, int height) {
             CameraIntrinsics c{fx, fy, cx, cy, width, height};
             c.validate();
             return c;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"),
           py::arg("height"))
      .def_readonly("fx", &CameraIntrinsics::fx)
      .def_readonly("fy", &CameraIntrinsics::fy)
      .def_readonly("cx", &CameraIntrinsics::cx)
      .def_readonly("cy", &CameraIntrinsics::cy)
      .def_readonly("width", &CameraIntrinsics::width)
      .def_readonly("height", &CameraIntrinsics::height)
      .def("__eq__", [](const CameraIntrinsics& a, const CameraIntrinsics& b) { return a == b; });
  m.def("default_intrinsics", &default_intrinsics);

  py::class_<LandmarkFrame>(m, "LandmarkFrame")
      .def_readonly("timestamp", &LandmarkFrame::timestamp)
      .def_readonly("intrinsics_id", &LandmarkFrame::intrinsics_id)
      .def_property_readonly("landmarks",
                             [](const LandmarkFrame& f) {
                               std::vector<Triple> out;
                               for (const auto& l : f.landmarks) out.push_back({l.u, l.v, l.z});
                               return out;
                             })
      .def("to_json", &serialize_frame)
      .def("__eq__", [](const LandmarkFrame& a, const LandmarkFrame& b) { return a == b; });

  m.def(
      "make_frame",
      [](double t, const std::vector<Triple>& lms, const std::string& intr_id) {
        if (lms.size() != kNumLandmarks) {
          throw Error(ErrorCode::kStructural, "expected 21 landmarks");
        }
        LandmarkFrame f;
        f.timestamp = t;
        f.intrinsics_id = intr_id;
        for (std::size_t i = 0; i < kNumLandmarks; ++i) {
          f.landmarks[i] = {lms[i][0], lms[i][1], lms[i][2]};
        }
        return f;
      },
      py::arg("t"), py::arg("landmarks"), py::arg("intrinsics_id") = "cam0");
  m.def(
      "parse_frame",
      [](const std::string& line, const std::map<std::string, CameraIntrinsics>& table) {
        return parse_frame(line, IntrinsicsTable(table.begin(), table.end()));
      },
      py::arg("line"), py::arg("intrinsics"));
  m.def("pixel_to_meters",
        [](double u, double v, double z, const CameraIntrinsics& intr) {
          const Point3 p = pixel_to_meters(u, v, z, intr);
          return Triple{p.x(), p.y(), p.z()};
        });
  m.def("meters_to_pixel", [](const Triple& p, const CameraIntrinsics& intr) {
    return meters_to_pixel(Point3(p[0], p[1], p[2]), intr);
  });
  m.def("extract_features", [](const LandmarkFrame& f) {
    const FeatureVector v = extract_features(f);
    return std::vector<double>(v.begin(), v.end());
  });

  m.def("center_of_mass", [](const std::vector<Triple>& pts) {
    const Point3 c = center_of_mass(points_arg(pts));
    return Triple{c.x(), c.y(), c.z()};
  });
  m.def(
      "expand_cloud",
      [](const std::vector<Triple>& pts, std::size_t target, std::size_t k) {
        return points_out(expand_cloud_knn(points_arg(pts), target, k));
      },
      py::arg("points"), py::arg("target") = kDefaultCloudSize,
      py::arg("k") = kDefaultNeighbors);
  m.def("fit_plane", [](const std::vector<Triple>& pts) {
    const Plane p = fit_plane(points_arg(pts));
    return Triple{p.a, p.b, p.c};
  });
  m.def("plane_angle", [](const Triple& p, const Triple& q) {
    return plane_angle(Plane{p[0], p[1], p[2]}, Plane{q[0], q[1], q[2]});
  });
  m.def("plane_euler_angles", [](const Triple& plane, const Triple& axis) {
    const EulerDeg e =
        plane_euler_angles(Plane{plane[0], plane[1], plane[2]}, Point3(axis[0], axis[1], axis[2]));
    return Triple{e.rx, e.ry, e.rz};
  });
  m.def("relative_pose", [](const py::dict& cur, const py::dict& ref) {
    return pose_dict(relative_pose(pose_arg(cur), pose_arg(ref)));
  });
  m.def("estimate_pose", [](const LandmarkFrame& f, const CameraIntrinsics& intr) {
    return pose_dict(estimate_pose(f, intr));
  });

  py::class_<Model>(m, "Model")
      .def_static("load",
                  [](const std::string& path) { return make_model(load_checkpoint_file(path)); })
      .def_static("initialize",
                  [](std::uint64_t seed) { return make_model(MlpParams::initialize(seed)); })
      .def("save",
           [](const Model& m, const std::string& path) { save_checkpoint_file(path, *m.params); })
      .def("predict",
           [](const Model& m, const std::vector<double>& features) {
             if (features.size() != kFeatureSize) {
               throw Error(ErrorCode::kStructural, "expected 62 features");
             }
             return forward(*m.params, features);
           })
      .def(
          "classify",
          [](const Model& m, const std::vector<double>& features, double threshold) {
            if (features.size() != kFeatureSize) {
              throw Error(ErrorCode::kStructural, "expected 62 features");
            }
            return std::string(to_string(classify(forward(*m.params, features), threshold)));
          },
          py::arg("features"), py::arg("threshold") = kDefaultRejectThreshold);

  m.def(
      "classify",
      [](const GestureProbs& probs, double threshold) {
        return std::string(to_string(classify(probs, threshold)));
      },
      py::arg("probs"), py::arg("threshold") = kDefaultRejectThreshold);
  m.def(
      "generate_dataset",
      [](std::uint64_t seed, std::size_t per_class, double noise_scale) {
        SyntheticNoise noise;
        noise.scale = noise_scale;
        const Dataset data = generate_synthetic_dataset(seed, per_class, noise);
        std::vector<std::vector<double>> x;
        std::vector<std::string> y;
        for (const auto& s : data) {
          x.emplace_back(s.features.begin(), s.features.end());
          y.emplace_back(to_string(s.label));
        }
        return py::make_tuple(x, y);
      },
      py::arg("seed"), py::arg("per_class"), py::arg("noise_scale") = 1.0);
  m.def(
      "train",
      [](const std::vector<std::vector<double>>& x, const std::vector<std::string>& y,
         int epochs, std::size_t batch_size, double learning_rate, double split,
         std::uint64_t seed) {
        if (x.size() != y.size()) {
          throw Error(ErrorCode::kStructural, "features and labels differ in length");
        }
        Dataset data(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (x[i].size() != kFeatureSize) {
            throw Error(ErrorCode::kStructural, "sample " + std::to_string(i) +
                                                    " does not have 62 features");
          }
          std::copy(x[i].begin(), x[i].end(), data[i].features.begin());
          data[i].label = gesture_arg(y[i]);
        }
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.learning_rate = learning_rate;
        cfg.split = split;
        cfg.seed = seed;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(data, cfg);
        }
        py::dict stats;
        stats["train_accuracy"] = r.train_accuracy;
        stats["test_accuracy"] = r.test_accuracy;
        stats["train_count"] = r.train_count;
        stats["test_count"] = r.test_count;
        stats["epoch_loss"] = r.epoch_loss;
        return py::make_tuple(make_model(std::move(r.params)), stats);
      },
      py::arg("features"), py::arg("labels"), py::arg("epochs") = 100,
      py::arg("batch_size") = 64, py::arg("learning_rate") = 1e-3, py::arg("split") = 0.75,
      py::arg("seed") = 1);

  py::class_<FsmState>(m, "Fsm")
      .def(py::init([](int debounce, double linear_gain, double angular_gain) {
             FsmState s;
             s.config = {debounce, linear_gain, angular_gain};
             return s;
           }),
           py::arg("debounce") = 3, py::arg("linear_gain") = 1.0,
           py::arg("angular_gain") = 1.0)
      .def("step",
           [](FsmState& s, const std::string& gesture, const py::dict& pose) -> py::object {
             StepResult r = step(s, gesture_arg(gesture), pose_arg(pose));
             s = r.state;
             if (!r.command) return py::none();
             return to_python(command_to_json(*r.command));
           })
      .def_property_readonly("mode",
                             [](const FsmState& s) { return std::string(to_string(s.mode)); })
      .def_readonly("tracking", &FsmState::tracking);

  m.def("rmsd", [](const std::vector<double>& a, const std::vector<double>& b) {
    return rmsd(a, b);
  });
  m.def("compare", [](const std::vector<Row>& est, const std::vector<Row>& truth) {
    return report_dict(compare(rows_arg(est), rows_arg(truth)));
  });
  m.def("read_trajectory", [](const std::string& path) {
    return rows_out(read_trajectory_file(path));
  });
  m.def("write_trajectory", [](const std::string& path, const std::vector<Row>& rows) {
    write_trajectory_file(path, rows_arg(rows));
  });
  m.def("evaluate", [](const std::string& est, const std::string& truth) {
    return report_dict(run_eval(est, truth));
  });

  m.def(
      "render_session",
      [](const std::string& mode_gesture, const py::dict& offset, double pixel_noise,
         double depth_noise, std::uint64_t seed) {
        LandmarkNoise noise{pixel_noise, depth_noise};
        const SyntheticSession s = render_session(
            teleop_script(gesture_arg(mode_gesture), pose_arg(offset)), default_intrinsics(),
            noise, seed);
        std::ostringstream log;
        write_landmark_log(log, s.log);
        return py::make_tuple(log.str(), rows_out(s.hand_truth));
      },
      py::arg("mode_gesture"), py::arg("offset"), py::arg("pixel_noise") = 0.0,
      py::arg("depth_noise") = 0.0, py::arg("seed") = 0);
  m.def(
      "replay",
      [](const std::string& log_text, const Model& model, const py::object& config) {
        std::istringstream in(log_text);
        const LandmarkLog log = read_landmark_log(in);
        const SessionConfig cfg = config_arg(config);
        ReplayResult r;
        {
          py::gil_scoped_release release;
          r = run_replay(log, model.params, cfg);
        }
        std::vector<std::string> commands;
        for (const auto& c : r.commands) commands.push_back(serialize_command(c));
        py::dict out;
        out["commands"] = commands;
        out["robot"] = rows_out(r.robot);
        out["hand"] = rows_out(r.hand);
        out["frames"] = r.frames;
        out["skipped_frames"] = r.skipped_frames;
        out["summary"] = format_replay_summary(r);
        return out;
      },
      py::arg("log"), py::arg("model"), py::arg("config") = py::none());

  m.attr("PROTOCOL_VERSION") = kProtocolVersion;
  m.attr("MAX_MESSAGE_BYTES") = kMaxMessageBytes;
  m.def("frame_message",
        [](const py::bytes& payload) { return py::bytes(frame_message(std::string(payload))); });
  py::class_<FrameDecoder>(m, "FrameDecoder")
      .def(py::init<>())
      .def("feed",
           [](FrameDecoder& d, const py::bytes& data) {
             std::vector<py::bytes> out;
             for (auto& p : d.feed(std::string(data))) out.emplace_back(p);
             return out;
           })
      .def_property_readonly("buffered", &FrameDecoder::buffered);
  m.def("encode_frame_in", &encode_frame_in);
  m.def("encode_config_set",
        [](const py::object& patch) { return encode_config_set(from_python(patch)); });

  py::class_<SessionEndpoint>(m, "SessionEndpoint")
      .def(py::init([](const Model& model, const py::object& config) {
             return std::make_unique<SessionEndpoint>(model.params, config_arg(config));
           }),
           py::arg("model"), py::arg("config") = py::none())
      .def("handle", [](SessionEndpoint& ep, const std::string& payload) {
        const Reply r = ep.handle(payload);
        return py::make_tuple(r.payload ? py::object(py::str(*r.payload)) : py::none(),
                              r.close);
      });

#ifdef PALMCTL_VERSION
  m.attr("__version__") = PALMCTL_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
