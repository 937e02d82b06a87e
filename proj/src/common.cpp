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

#include "palmctl/error.hpp"

#include <cmath>

#include "palmctl/geometry.hpp"

namespace palmctl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kStructural: return "structural";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kDegeneratePlane: return "degenerate_plane";
    case ErrorCode::kDegenerateAxis: return "degenerate_axis";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kTraining: return "training";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kVersion: return "version";
  }
  return "unknown";
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w > 180.0) {
    w -= 360.0;
  } else if (w <= -180.0) {
    w += 360.0;
  }
  return w;
}

}  // namespace palmctl
