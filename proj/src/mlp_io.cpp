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

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "palmctl/error.hpp"
#include "palmctl/eval_rmsd.hpp"
#include "palmctl/gesture_mlp.hpp"

namespace palmctl {

namespace {

constexpr char kMagic[4] = {'P', 'L', 'M', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(b, 8);
}

void read_exact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw Error(ErrorCode::kParse, "checkpoint truncated");
  }
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

// Every tensor of the checkpoint, trainable or not, in file order.
struct NamedMatrix {
  const char* name;
  Eigen::MatrixXd* matrix;
  Eigen::VectorXd* vector;
};

std::vector<NamedMatrix> all_tensors(MlpParams& p) {
  return {{"w1", &p.w1, nullptr},
          {"b1", nullptr, &p.b1},
          {"bn1.gamma", nullptr, &p.bn1.gamma},
          {"bn1.beta", nullptr, &p.bn1.beta},
          {"bn1.running_mean", nullptr, &p.bn1.running_mean},
          {"bn1.running_var", nullptr, &p.bn1.running_var},
          {"w2", &p.w2, nullptr},
          {"b2", nullptr, &p.b2},
          {"bn2.gamma", nullptr, &p.bn2.gamma},
          {"bn2.beta", nullptr, &p.bn2.beta},
          {"bn2.running_mean", nullptr, &p.bn2.running_mean},
          {"bn2.running_var", nullptr, &p.bn2.running_var},
          {"w3", &p.w3, nullptr},
          {"b3", nullptr, &p.b3}};
}

}  // namespace

void save_checkpoint(std::ostream& out, const MlpParams& params) {
  params.validate();
  MlpParams copy = params;
  const auto tensors = all_tensors(copy);
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    const std::string_view name(t.name);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Eigen::Index rows = t.matrix ? t.matrix->rows() : t.vector->size();
    const Eigen::Index cols = t.matrix ? t.matrix->cols() : 1;
    put_u32(out, static_cast<std::uint32_t>(rows));
    put_u32(out, static_cast<std::uint32_t>(cols));
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        put_f64(out, t.matrix ? (*t.matrix)(i, j) : (*t.vector)(i));
      }
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "failed to write checkpoint");
}

MlpParams load_checkpoint(std::istream& in) {
  char magic[4];
  read_exact(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::kParse, "not a palmctl checkpoint");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersion,
                "unsupported checkpoint version " + std::to_string(version));
  }
  MlpParams params = MlpParams::zeros();
  auto tensors = all_tensors(params);
  const std::uint32_t count = get_u32(in);
  if (count != tensors.size()) {
    throw Error(ErrorCode::kStructural,
                "checkpoint holds " + std::to_string(count) + " tensors, expected " +
                    std::to_string(tensors.size()));
  }
  for (auto& t : tensors) {
    const std::uint32_t name_len = get_u32(in);
    if (name_len > 64) throw Error(ErrorCode::kParse, "tensor name too long");
    std::string name(name_len, '\0');
    read_exact(in, name.data(), name_len);
    if (name != t.name) {
      throw Error(ErrorCode::kStructural,
                  "expected tensor '" + std::string(t.name) + "', found '" + name + "'");
    }
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    const Eigen::Index want_rows = t.matrix ? t.matrix->rows() : t.vector->size();
    const Eigen::Index want_cols = t.matrix ? t.matrix->cols() : 1;
    if (rows != want_rows || cols != want_cols) {
      throw Error(ErrorCode::kStructural,
                  name + ": shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " does not match " + std::to_string(want_rows) + "x" +
                      std::to_string(want_cols));
    }
    for (Eigen::Index i = 0; i < want_rows; ++i) {
      for (Eigen::Index j = 0; j < want_cols; ++j) {
        const double d = get_f64(in);
        if (t.matrix) {
          (*t.matrix)(i, j) = d;
        } else {
          (*t.vector)(i) = d;
        }
      }
    }
  }
  params.validate();
  return params;
}

void save_checkpoint_file(const std::string& path, const MlpParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write checkpoint '" + path + "'");
  save_checkpoint(out, params);
}

MlpParams load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint '" + path + "'");
  try {
    return load_checkpoint(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "label";
  for (std::size_t k = 0; k < kFeatureSize; ++k) out << ",f" << k;
  out << '\n';
  for (const auto& s : data) {
    out << to_string(s.label);
    for (double v : s.features) out << ',' << format_double(v);
    out << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    auto fail = [&](const std::string& what) {
      return Error(ErrorCode::kParse, "dataset line " + std::to_string(line_no) + ": " + what);
    };
    Sample s;
    std::size_t pos = line.find(',');
    if (pos == std::string::npos) throw fail("missing features");
    auto label = gesture_from_string(std::string_view(line).substr(0, pos));
    if (!label || *label == GestureLabel::kNone) throw fail("bad label");
    s.label = *label;
    const char* p = line.data() + pos + 1;
    const char* end = line.data() + line.size();
    for (std::size_t k = 0; k < kFeatureSize; ++k) {
      auto [next, ec] = std::from_chars(p, end, s.features[k]);
      if (ec != std::errc()) throw fail("bad feature " + std::to_string(k));
      p = next;
      if (k + 1 < kFeatureSize) {
        if (p == end || *p != ',') throw fail("expected 62 features");
        ++p;
      }
    }
    if (p != end && *p != '\r') throw fail("trailing data");
    data.push_back(s);
  }
  return data;
}

}  // namespace palmctl
