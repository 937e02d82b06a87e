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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <doctest.h>

#include "palmctl/error.hpp"
#include "palmctl/wire.hpp"
#include "support.hpp"

using namespace palmctl;
using json = nlohmann::json;

namespace {

// Minimal blocking client for the length-prefixed transport.
class Client {
 public:
  explicit Client(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    timeval tv{5, 0};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  }
  ~Client() { ::close(fd_); }

  void send_raw(std::string_view bytes) {
    REQUIRE(::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL) ==
            static_cast<ssize_t>(bytes.size()));
  }
  void send(std::string_view payload) { send_raw(frame_message(payload)); }

  // Next message, or nullopt when the server closed the connection.
  std::optional<json> receive() {
    for (;;) {
      if (!pending_.empty()) {
        json j = json::parse(pending_.front());
        pending_.erase(pending_.begin());
        return j;
      }
      char buf[4096];
      const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
      if (n <= 0) return std::nullopt;
      for (auto& p : decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n)))) {
        pending_.push_back(std::move(p));
      }
    }
  }

 private:
  int fd_ = -1;
  FrameDecoder decoder_;
  std::vector<std::string> pending_;
};

std::string frame_in(GestureLabel g, double t, const Pose6D& pose = home_hand_pose()) {
  return encode_frame_in(testing::sample_frame(g, pose, t));
}

}  // namespace

TEST_CASE("length-prefixed framing") {
  const std::string msg = frame_message("hello");
  CHECK(msg == std::string("\0\0\0\5hello", 9));
  CHECK(frame_message("").size() == 4);

  FrameDecoder d;
  const std::string stream = frame_message("one") + frame_message("") + frame_message("three");
  std::vector<std::string> got;
  for (char c : stream) {
    for (auto& p : d.feed(std::string_view(&c, 1))) got.push_back(p);
  }
  CHECK(got == std::vector<std::string>{"one", "", "three"});
  CHECK(d.buffered() == 0);

  CHECK(d.feed(stream.substr(0, 6)).empty());
  CHECK(d.buffered() == 6);
  CHECK(d.feed(stream.substr(6)).size() == 3);

  FrameDecoder big;
  CHECK_THROWS_AS(big.feed(std::string("\x00\x10\x00\x01", 4)), Error);
  CHECK_THROWS_AS(frame_message(std::string(kMaxMessageBytes + 1, 'x')), Error);
  CHECK(frame_message(std::string(kMaxMessageBytes, 'x')).size() == kMaxMessageBytes + 4);
}

TEST_CASE("endpoint parsing") {
  const ServerOptions o = parse_endpoint("0.0.0.0:9000");
  CHECK(o.host == "0.0.0.0");
  CHECK(o.port == 9000);
  CHECK_THROWS_AS(parse_endpoint("localhost"), Error);
  CHECK_THROWS_AS(parse_endpoint(":80"), Error);
  CHECK_THROWS_AS(parse_endpoint("h:99999"), Error);
  CHECK_THROWS_AS(parse_endpoint("h:8x"), Error);
}

TEST_CASE("message encodings") {
  const json e = json::parse(encode_error("parse", "bad"));
  CHECK(e == json::parse(R"({"v":1,"type":"Error","code":"parse","text":"bad"})"));
  const json c = json::parse(encode_config_set(nlohmann::ordered_json{{"debounce", 2}}));
  CHECK(c == json::parse(R"({"v":1,"type":"ConfigSet","config":{"debounce":2}})"));
  const json f = json::parse(frame_in(GestureLabel::kOne, 0.5));
  CHECK(f["v"] == 1);
  CHECK(f["type"] == "FrameIn");
  CHECK(f["frame"]["t"] == 0.5);
  CHECK(f["frame"]["lm"].size() == 21);
  CHECK(f["frame"]["intr"] == "cam0");
}

TEST_CASE("session endpoint protocol") {
  SessionEndpoint ep(testing::quick_model(), SessionConfig{});

  Reply r = ep.handle(frame_in(GestureLabel::kOne, 0.0));
  REQUIRE(r.payload);
  CHECK_FALSE(r.close);
  json s = json::parse(*r.payload);
  CHECK(s["v"] == 1);
  CHECK(s["type"] == "StateOut");
  CHECK(s["t"] == 0.0);
  CHECK(s["gesture"] == "One");
  CHECK(s["probs"].size() == 5);
  CHECK(s["mode"] == "Idle");
  CHECK(s["tracking"] == false);
  CHECK(s["command"].is_null());
  CHECK(std::fabs(s["hand"]["z"].get<double>() - 0.5) <= 1e-6);
  for (const char* k : {"x", "y", "z", "rx", "ry", "rz"}) CHECK(s["robot"].contains(k));

  ep.handle(frame_in(GestureLabel::kOne, 0.1));
  s = json::parse(*ep.handle(frame_in(GestureLabel::kOne, 0.2)).payload);
  CHECK(s["mode"] == "Linear");
  CHECK(s["command"] == json::parse(R"({"type":"SetMode","mode":"Linear"})"));

  // ConfigSet: silent on success, Error otherwise, and the session keeps going.
  CHECK_FALSE(ep.handle(encode_config_set({{"debounce", 2}})).payload);
  CHECK(ep.session().fsm().config.debounce_frames == 2);
  json err = json::parse(*ep.handle(encode_config_set({{"model", "other.bin"}})).payload);
  CHECK(err["type"] == "Error");
  CHECK(err["code"] == "contract");
  err = json::parse(*ep.handle(encode_config_set({{"debounce", 0}})).payload);
  CHECK(err["code"] == "domain");

  err = json::parse(*ep.handle("{not json").payload);
  CHECK(err["code"] == "parse");
  err = json::parse(*ep.handle(R"({"type":"FrameIn"})").payload);
  CHECK(err["code"] == "parse");
  err = json::parse(*ep.handle(R"({"v":1,"type":"Dance"})").payload);
  CHECK(err["code"] == "parse");
  err = json::parse(*ep.handle(R"({"v":1,"type":"FrameIn","frame":{"t":1}})").payload);
  CHECK(err["code"] == "parse");

  // A frame whose pose cannot be estimated is reported, not fatal.
  LandmarkFrame flat = testing::sample_frame(GestureLabel::kOpen, home_hand_pose(), 0.3);
  for (auto& lm : flat.landmarks) lm.v = 200.0;
  err = json::parse(*ep.handle(encode_frame_in(flat)).payload);
  CHECK(err["code"] == "degenerate_input");
  CHECK(json::parse(*ep.handle(frame_in(GestureLabel::kOpen, 0.4)).payload)["type"] ==
        "StateOut");

  const Reply v2 = ep.handle(R"({"v":2,"type":"FrameIn"})");
  CHECK(v2.close);
  err = json::parse(*v2.payload);
  CHECK(err["code"] == "version");
}

TEST_CASE("server: concurrent clients have isolated sessions") {
  ServerOptions opts;
  opts.port = 0;
  Server server(testing::quick_model(), SessionConfig{}, opts);
  server.start();
  REQUIRE(server.port() != 0);

  Client a(server.port()), b(server.port());
  std::thread ta([&] {
    for (int i = 0; i < 3; ++i) a.send(frame_in(GestureLabel::kOne, i * 0.1));
  });
  std::thread tb([&] {
    for (int i = 0; i < 3; ++i) b.send(frame_in(GestureLabel::kTwo, i * 0.1));
  });
  ta.join();
  tb.join();
  for (int i = 0; i < 3; ++i) {
    const auto ra = a.receive();
    const auto rb = b.receive();
    REQUIRE(ra);
    REQUIRE(rb);
    CHECK((*ra)["t"] == i * 0.1);  // replies arrive in order
    CHECK((*rb)["t"] == i * 0.1);
    if (i == 2) {
      CHECK((*ra)["mode"] == "Linear");
      CHECK((*rb)["mode"] == "Angular");
    }
  }
  server.stop();
  CHECK_FALSE(a.receive().has_value());
}

TEST_CASE("server: malformed input does not kill the connection") {
  ServerOptions opts;
  opts.port = 0;
  Server server(testing::quick_model(), SessionConfig{}, opts);
  server.start();
  Client c(server.port());
  c.send("this is not json");
  auto r = c.receive();
  REQUIRE(r);
  CHECK((*r)["type"] == "Error");
  CHECK((*r)["code"] == "parse");

  // A frame split across several writes is reassembled.
  const std::string framed = frame_message(frame_in(GestureLabel::kOpen, 1.0));
  c.send_raw(framed.substr(0, 3));
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  c.send_raw(framed.substr(3, 100));
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  c.send_raw(framed.substr(103));
  r = c.receive();
  REQUIRE(r);
  CHECK((*r)["type"] == "StateOut");
  CHECK((*r)["gesture"] == "Open");
}

TEST_CASE("server: version mismatch closes the connection") {
  ServerOptions opts;
  opts.port = 0;
  Server server(testing::quick_model(), SessionConfig{}, opts);
  server.start();
  Client c(server.port());
  c.send(R"({"v":7,"type":"FrameIn"})");
  auto r = c.receive();
  REQUIRE(r);
  CHECK((*r)["code"] == "version");
  CHECK_FALSE(c.receive().has_value());

  // Oversized declared lengths are refused before any allocation.
  Client big(server.port());
  big.send_raw(std::string("\x7f\x00\x00\x00", 4));
  r = big.receive();
  REQUIRE(r);
  CHECK((*r)["code"] == "structural");
  CHECK_FALSE(big.receive().has_value());

  // The server keeps accepting new connections.
  Client d(server.port());
  d.send(frame_in(GestureLabel::kClose, 0.0));
  r = d.receive();
  REQUIRE(r);
  CHECK((*r)["gesture"] == "Close");
}

TEST_CASE("server: websocket transport") {
  namespace asio = boost::asio;
  namespace websocket = boost::beast::websocket;
  ServerOptions opts;
  opts.port = 0;
  opts.ws_port = 0;
  Server server(testing::quick_model(), SessionConfig{}, opts);
  server.start();
  REQUIRE(server.ws_port());

  asio::io_context io;
  websocket::stream<asio::ip::tcp::socket> ws(io);
  ws.next_layer().connect({asio::ip::make_address("127.0.0.1"), *server.ws_port()});
  ws.handshake("127.0.0.1", "/");
  for (int i = 0; i < 3; ++i) {
    ws.write(asio::buffer(frame_in(GestureLabel::kThree, i * 0.1)));
    boost::beast::flat_buffer buf;
    ws.read(buf);
    const json s = json::parse(boost::beast::buffers_to_string(buf.data()));
    CHECK(s["type"] == "StateOut");
    if (i == 2) CHECK(s["mode"] == "Combined");
  }
  ws.write(asio::buffer(std::string(R"({"v":0,"type":"FrameIn"})")));
  boost::beast::flat_buffer buf;
  ws.read(buf);
  CHECK(json::parse(boost::beast::buffers_to_string(buf.data()))["code"] == "version");
  boost::system::error_code ec;
  ws.read(buf, ec);
  CHECK(ec == websocket::error::closed);
  server.stop();
}

TEST_CASE("server: start fails cleanly on a busy port") {
  ServerOptions opts;
  opts.port = 0;
  Server first(testing::quick_model(), SessionConfig{}, opts);
  first.start();
  ServerOptions clash = opts;
  clash.port = first.port();
  Server second(testing::quick_model(), SessionConfig{}, clash);
  CHECK_THROWS_AS(second.start(), Error);
}
