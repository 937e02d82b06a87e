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

#include "palmctl/wire.hpp"

#include <charconv>

#include "palmctl/error.hpp"

namespace palmctl {

using json = nlohmann::ordered_json;

namespace {

json envelope(std::string_view type) {
  json j;
  j["v"] = kProtocolVersion;
  j["type"] = std::string(type);
  return j;
}

}  // namespace

std::string frame_message(std::string_view payload) {
  if (payload.size() > kMaxMessageBytes) {
    throw Error(ErrorCode::kStructural, "message exceeds the size limit");
  }
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out.push_back(static_cast<char>((n >> 24) & 0xffu));
  out.push_back(static_cast<char>((n >> 16) & 0xffu));
  out.push_back(static_cast<char>((n >> 8) & 0xffu));
  out.push_back(static_cast<char>(n & 0xffu));
  out.append(payload);
  return out;
}

std::vector<std::string> FrameDecoder::feed(std::string_view bytes) {
  buffer_.append(bytes);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (buffer_.size() - pos >= 4) {
    const auto* b = reinterpret_cast<const unsigned char*>(buffer_.data() + pos);
    const std::uint32_t n = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
                            (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
    if (n > kMaxMessageBytes) {
      throw Error(ErrorCode::kStructural, "declared message length exceeds the size limit");
    }
    if (buffer_.size() - pos - 4 < n) break;
    out.emplace_back(buffer_, pos + 4, n);
    pos += 4 + n;
  }
  buffer_.erase(0, pos);
  return out;
}

std::string encode_state_out(const FrameResult& r) {
  json j = envelope("StateOut");
  j["t"] = r.t;
  j["gesture"] = std::string(to_string(r.gesture));
  j["probs"] = r.probs;
  j["mode"] = std::string(to_string(r.mode));
  j["tracking"] = r.tracking;
  j["hand"] = pose_to_json(r.hand);
  j["robot"] = pose_to_json(r.robot);
  j["command"] = r.command ? command_to_json(*r.command) : json(nullptr);
  return j.dump();
}

std::string encode_error(std::string_view code, std::string_view text) {
  json j = envelope("Error");
  j["code"] = std::string(code);
  j["text"] = std::string(text);
  return j.dump();
}

std::string encode_frame_in(const LandmarkFrame& frame) {
  json j = envelope("FrameIn");
  j["frame"] = json::parse(serialize_frame(frame));
  return j.dump();
}

std::string encode_config_set(const json& patch) {
  json j = envelope("ConfigSet");
  j["config"] = patch;
  return j.dump();
}

SessionEndpoint::SessionEndpoint(std::shared_ptr<const MlpParams> model,
                                 SessionConfig config)
    : model_(model), session_(std::move(model), std::move(config)) {}

Reply SessionEndpoint::handle(std::string_view payload) {
  const json j = json::parse(payload, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return {encode_error("parse", "message is not a JSON object"), false};
  }
  auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer()) {
    return {encode_error("parse", "field 'v': missing protocol version"), false};
  }
  if (v->get<long long>() != kProtocolVersion) {
    return {encode_error("version", "unsupported protocol version " + v->dump() +
                                        ", server speaks " +
                                        std::to_string(kProtocolVersion)),
            true};
  }
  auto type = j.find("type");
  if (type == j.end() || !type->is_string()) {
    return {encode_error("parse", "field 'type': expected a string"), false};
  }
  const std::string name = type->get<std::string>();

  try {
    if (name == "FrameIn") {
      auto frame = j.find("frame");
      if (frame == j.end()) throw Error(ErrorCode::kParse, "field 'frame': missing");
      const LandmarkFrame parsed = parse_frame(frame->dump(), session_.config().intrinsics);
      return {encode_state_out(session_.process(parsed)), false};
    }
    if (name == "ConfigSet") {
      auto patch = j.find("config");
      if (patch == j.end()) throw Error(ErrorCode::kParse, "field 'config': missing");
      if (patch->contains("model")) {
        throw Error(ErrorCode::kContract, "the model cannot be changed within a session");
      }
      SessionConfig next = session_.config();
      apply_config_patch(next, *patch);
      session_.reconfigure(std::move(next));
      return {std::nullopt, false};
    }
    throw Error(ErrorCode::kParse, "unexpected message type '" + name + "'");
  } catch (const Error& e) {
    return {encode_error(to_string(e.code()), e.what()), false};
  }
}

ServerOptions parse_endpoint(std::string_view endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorCode::kParse, "endpoint must look like host:port");
  }
  ServerOptions o;
  o.host = std::string(endpoint.substr(0, colon));
  const auto port_text = endpoint.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || value > 65535) {
    throw Error(ErrorCode::kParse, "invalid port in endpoint '" + std::string(endpoint) + "'");
  }
  o.port = static_cast<std::uint16_t>(value);
  return o;
}

}  // namespace palmctl
