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
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "palmctl/session.hpp"

namespace palmctl {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxMessageBytes = 1 << 20;

/// Prefixes the payload with its length as a 4-byte big-endian integer.
std::string frame_message(std::string_view payload);

/// Incremental splitter for length-prefixed messages.
class FrameDecoder {
 public:
  /// Appends bytes and returns every payload completed by them.
  /// Throws Error(kStructural) when a declared length exceeds
  /// kMaxMessageBytes.
  std::vector<std::string> feed(std::string_view bytes);
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
};

/// `{"v":1,"type":"StateOut","t":..,"gesture":..,"probs":[..],"mode":..,
/// "tracking":..,"hand":{pose},"robot":{pose},"command":{..}|null}`
std::string encode_state_out(const FrameResult& result);
/// `{"v":1,"type":"Error","code":..,"text":..}`
std::string encode_error(std::string_view code, std::string_view text);
/// `{"v":1,"type":"FrameIn","frame":{frame record}}`
std::string encode_frame_in(const LandmarkFrame& frame);
/// `{"v":1,"type":"ConfigSet","config":{patch}}`
std::string encode_config_set(const nlohmann::ordered_json& patch);

struct Reply {
  std::optional<std::string> payload;
  bool close = false;
};

/// Transport-independent protocol handler for one connection. Owns an
/// isolated Session.
class SessionEndpoint {
 public:
  SessionEndpoint(std::shared_ptr<const MlpParams> model, SessionConfig config);

  /// FrameIn -> StateOut or Error; ConfigSet -> nothing, or Error when the
  /// patch is rejected; wrong version -> Error and close; anything else
  /// malformed -> Error(parse).
  Reply handle(std::string_view payload);

  const Session& session() const { return session_; }

 private:
  std::shared_ptr<const MlpParams> model_;
  Session session_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7878;  // 0 picks an ephemeral port
  std::optional<std::uint16_t> ws_port;
};

/// Parses `host:port`.
ServerOptions parse_endpoint(std::string_view endpoint);

/// Accepts operator connections over length-framed TCP and, optionally,
/// WebSocket. Each connection gets its own SessionEndpoint and thread.
class Server {
 public:
  Server(std::shared_ptr<const MlpParams> model, SessionConfig config,
         ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the listeners and starts accepting in the background.
  void start();
  /// Closes listeners and connections and joins all threads.
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

  std::uint16_t port() const;
  std::optional<std::uint16_t> ws_port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace palmctl
