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

#include "palmctl/eval_rmsd.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "palmctl/error.hpp"

namespace palmctl {

namespace {

Pose6D lerp_pose(const Pose6D& a, const Pose6D& b, double f) {
  Pose6D p;
  p.translation = a.translation + f * (b.translation - a.translation);
  auto arc = [f](double x, double y) { return wrap_degrees(x + f * wrap_degrees(y - x)); };
  p.euler = {arc(a.euler.rx, b.euler.rx), arc(a.euler.ry, b.euler.ry),
             arc(a.euler.rz, b.euler.rz)};
  return p;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

Trajectory::Trajectory(std::vector<TrajectorySample> samples)
    : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].t > samples_[i - 1].t)) {
      throw Error(ErrorCode::kStructural,
                  "trajectory timestamps must strictly increase (sample " +
                      std::to_string(i) + ")");
    }
  }
}

void Trajectory::append(const TrajectorySample& sample) {
  if (!samples_.empty() && !(sample.t > samples_.back().t)) {
    throw Error(ErrorCode::kStructural, "trajectory timestamps must strictly increase");
  }
  samples_.push_back(sample);
}

Pose6D Trajectory::interpolate(double t) const {
  if (samples_.empty() || t < samples_.front().t || t > samples_.back().t) {
    throw Error(ErrorCode::kAlignment, "time outside the trajectory");
  }
  auto hi = std::lower_bound(samples_.begin(), samples_.end(), t,
                             [](const TrajectorySample& s, double x) { return s.t < x; });
  if (hi->t == t) return hi->pose;
  auto lo = hi - 1;
  return lerp_pose(lo->pose, hi->pose, (t - lo->t) / (hi->t - lo->t));
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  out << "t,x,y,z,rx,ry,rz\n";
  for (const auto& s : traj.samples()) {
    const auto& p = s.pose;
    out << format_double(s.t) << ',' << format_double(p.translation.x()) << ','
        << format_double(p.translation.y()) << ',' << format_double(p.translation.z())
        << ',' << format_double(p.euler.rx) << ',' << format_double(p.euler.ry) << ','
        << format_double(p.euler.rz) << '\n';
  }
}

Trajectory read_trajectory(std::istream& in) {
  std::vector<TrajectorySample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("t,", 0) == 0) continue;
    std::array<double, 7> v{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t k = 0; k < v.size(); ++k) {
      auto [next, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc() || !std::isfinite(v[k])) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                           ": column " + std::to_string(k + 1) +
                                           " is not a finite number");
      }
      p = next;
      if (k + 1 < v.size()) {
        if (p == end || *p != ',') {
          throw Error(ErrorCode::kParse,
                      "line " + std::to_string(line_no) + ": expected 7 columns");
        }
        ++p;
      }
    }
    if (p != end) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": trailing data");
    }
    Pose6D pose;
    pose.translation = Point3(v[1], v[2], v[3]);
    pose.euler = {v[4], v[5], v[6]};
    samples.push_back({v[0], pose});
  }
  return Trajectory(std::move(samples));
}

void write_trajectory_file(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write trajectory '" + path + "'");
  write_trajectory(out, traj);
}

Trajectory read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trajectory '" + path + "'");
  try {
    return read_trajectory(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

double rmsd(std::span<const double> estimated, std::span<const double> observed) {
  if (estimated.size() != observed.size()) {
    throw Error(ErrorCode::kStructural, "rmsd: series lengths differ");
  }
  if (estimated.empty()) throw Error(ErrorCode::kDomain, "rmsd: empty series");
  double sum = 0.0;
  for (std::size_t t = 0; t < estimated.size(); ++t) {
    const double d = estimated[t] - observed[t];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(estimated.size()));
}

AlignedPairs align(const Trajectory& est, const Trajectory& truth) {
  if (est.empty() || truth.empty()) {
    throw Error(ErrorCode::kAlignment, "cannot align an empty trajectory");
  }
  const double lo = est.front().t;
  const double hi = est.back().t;
  AlignedPairs out;
  for (const auto& s : truth.samples()) {
    if (s.t < lo || s.t > hi) continue;
    out.t.push_back(s.t);
    out.estimated.push_back(est.interpolate(s.t));
    out.truth.push_back(s.pose);
  }
  if (out.t.empty()) {
    throw Error(ErrorCode::kAlignment, "trajectories do not overlap in time");
  }
  return out;
}

RmsdReport compare(const Trajectory& est, const Trajectory& truth) {
  const AlignedPairs pairs = align(est, truth);
  const std::size_t n = pairs.t.size();
  // Differences go in the estimated series against a zero observed series,
  // which lets the angular channel use wrapped differences.
  std::vector<double> lin, ang;
  lin.reserve(3 * n);
  ang.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Pose6D& e = pairs.estimated[i];
    const Pose6D& g = pairs.truth[i];
    for (int k = 0; k < 3; ++k) lin.push_back(1000.0 * (e.translation[k] - g.translation[k]));
    ang.push_back(wrap_degrees(e.euler.rx - g.euler.rx));
    ang.push_back(wrap_degrees(e.euler.ry - g.euler.ry));
    ang.push_back(wrap_degrees(e.euler.rz - g.euler.rz));
  }
  const std::vector<double> zeros(3 * n, 0.0);
  return RmsdReport{rmsd(lin, zeros), rmsd(ang, zeros), n};
}

std::string format_report_text(const RmsdReport& r) {
  return "linear_rmsd_mm=" + format_double(r.linear_mm) +
         " angular_rmsd_deg=" + format_double(r.angular_deg) +
         " samples=" + std::to_string(r.sample_count);
}

std::string format_report_json(const RmsdReport& r) {
  nlohmann::ordered_json j;
  j["linear_rmsd_mm"] = r.linear_mm;
  j["angular_rmsd_deg"] = r.angular_deg;
  j["samples"] = r.sample_count;
  return j.dump();
}

}  // namespace palmctl
