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
#include <span>
#include <string>
#include <vector>

#include "palmctl/geometry.hpp"

namespace palmctl {

struct TrajectorySample {
  double t = 0.0;
  Pose6D pose;

  friend bool operator==(const TrajectorySample&,
                         const TrajectorySample&) = default;
};

/// Time-ordered pose samples with strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws Error(kStructural) unless timestamps strictly increase.
  explicit Trajectory(std::vector<TrajectorySample> samples);

  /// Throws Error(kStructural) if t does not exceed the last timestamp.
  void append(const TrajectorySample& sample);

  const std::vector<TrajectorySample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const TrajectorySample& front() const { return samples_.front(); }
  const TrajectorySample& back() const { return samples_.back(); }

  /// Pose at time t, linear in translation and shortest-arc in angles.
  /// t must lie within [front().t, back().t].
  Pose6D interpolate(double t) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<TrajectorySample> samples_;
};

/// CSV with header `t,x,y,z,rx,ry,rz`; numbers are written in shortest
/// round-trip form, so write/read is lossless.
void write_trajectory(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory(std::istream& in);
void write_trajectory_file(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_file(const std::string& path);

/// sqrt(sum((estimated - observed)^2) / T).
double rmsd(std::span<const double> estimated, std::span<const double> observed);

struct AlignedPairs {
  std::vector<double> t;
  std::vector<Pose6D> estimated;
  std::vector<Pose6D> truth;
};

/// Resamples `est` at every truth timestamp inside the overlap of the two
/// time ranges. Throws Error(kAlignment) when no truth sample falls inside.
AlignedPairs align(const Trajectory& est, const Trajectory& truth);

struct RmsdReport {
  double linear_mm = 0.0;
  double angular_deg = 0.0;
  std::size_t sample_count = 0;
};

/// Pooled RMSD: the x, y, z differences (mm) of all aligned samples form one
/// series, the wrapped rx, ry, rz differences (deg) another.
RmsdReport compare(const Trajectory& est, const Trajectory& truth);

/// `linear_rmsd_mm=<v> angular_rmsd_deg=<v> samples=<T>`
std::string format_report_text(const RmsdReport& report);
/// `{"linear_rmsd_mm":..,"angular_rmsd_deg":..,"samples":..}`
std::string format_report_json(const RmsdReport& report);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace palmctl
