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

#include <sys/socket.h>

#include <atomic>
#include <condition_variable>
#include <list>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "palmctl/error.hpp"
#include "palmctl/wire.hpp"

namespace palmctl {

namespace asio = boost::asio;
namespace websocket = boost::beast::websocket;
using tcp = asio::ip::tcp;

struct Server::Impl {
  struct Connection {
    std::thread worker;
    std::shared_ptr<std::atomic<bool>> done;
    int fd = -1;
  };

  std::shared_ptr<const MlpParams> model;
  SessionConfig config;
  ServerOptions options;

  asio::io_context io;
  std::optional<tcp::acceptor> acceptor;
  std::optional<tcp::acceptor> ws_acceptor;
  std::thread io_thread;

  std::mutex mu;
  std::condition_variable cv;
  std::list<Connection> connections;
  bool running = false;
  bool stopped = false;

  tcp::acceptor listen(std::uint16_t port) {
    const tcp::endpoint ep(asio::ip::make_address(options.host), port);
    tcp::acceptor a(io);
    a.open(ep.protocol());
    a.set_option(tcp::acceptor::reuse_address(true));
    a.bind(ep);
    a.listen();
    return a;
  }

  void accept_next(tcp::acceptor& a, bool websocket_transport) {
    a.async_accept([this, &a, websocket_transport](boost::system::error_code ec,
                                                     tcp::socket socket) {
      if (ec) return;  // acceptor closed
      spawn(std::move(socket), websocket_transport);
      accept_next(a, websocket_transport);
    });
  }

  void spawn(tcp::socket socket, bool websocket_transport) {
    std::lock_guard lock(mu);
    if (!running) return;
    connections.remove_if([](Connection& c) {
      if (!c.done->load()) return false;
      c.worker.join();
      return true;
    });
    auto done = std::make_shared<std::atomic<bool>>(false);
    const int fd = socket.native_handle();
    auto* self = this;
    connections.push_back(Connection{
        std::thread([self, done, websocket_transport, s = std::move(socket)]() mutable {
          try {
            if (websocket_transport) {
              self->serve_websocket(s);
            } else {
              self->serve_tcp(s);
            }
          } catch (const std::exception&) {
            // Connection dropped; the session dies with it.
          }
          self->forget(done);
        }),
        done, fd});
  }

  void forget(const std::shared_ptr<std::atomic<bool>>& done) {
    std::lock_guard lock(mu);
    for (auto& c : connections) {
      if (c.done == done) c.fd = -1;
    }
    done->store(true);
  }

  void serve_tcp(tcp::socket& socket) {
    SessionEndpoint endpoint(model, config);
    FrameDecoder decoder;
    std::array<char, 8192> buf;
    for (;;) {
      boost::system::error_code ec;
      const std::size_t n = socket.read_some(asio::buffer(buf), ec);
      if (ec) return;
      std::vector<std::string> payloads;
      try {
        payloads = decoder.feed(std::string_view(buf.data(), n));
      } catch (const Error& e) {
        asio::write(socket, asio::buffer(frame_message(encode_error("structural", e.what()))), ec);
        return;
      }
      for (const auto& p : payloads) {
        const Reply reply = endpoint.handle(p);
        if (reply.payload) {
          asio::write(socket, asio::buffer(frame_message(*reply.payload)), ec);
          if (ec) return;
        }
        if (reply.close) {
          socket.shutdown(tcp::socket::shutdown_both, ec);
          return;
        }
      }
    }
  }

  void serve_websocket(tcp::socket& socket) {
    websocket::stream<tcp::socket&> ws(socket);
    ws.read_message_max(kMaxMessageBytes);
    ws.accept();
    SessionEndpoint endpoint(model, config);
    boost::beast::flat_buffer buffer;
    for (;;) {
      buffer.clear();
      ws.read(buffer);
      const Reply reply = endpoint.handle(boost::beast::buffers_to_string(buffer.data()));
      if (reply.payload) {
        ws.text(true);
        ws.write(asio::buffer(*reply.payload));
      }
      if (reply.close) {
        ws.close(websocket::close_code::policy_error);
        return;
      }
    }
  }
};

Server::Server(std::shared_ptr<const MlpParams> model, SessionConfig config,
               ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  if (!model) throw Error(ErrorCode::kContract, "server needs a model");
  model->validate();
  config.validate();
  impl_->model = std::move(model);
  impl_->config = std::move(config);
  impl_->options = std::move(options);
}

Server::~Server() { stop(); }

void Server::start() {
  Impl& s = *impl_;
  try {
    s.acceptor.emplace(s.listen(s.options.port));
    if (s.options.ws_port) s.ws_acceptor.emplace(s.listen(*s.options.ws_port));
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::kIo, std::string("cannot listen: ") + e.what());
  }
  {
    std::lock_guard lock(s.mu);
    s.running = true;
  }
  s.accept_next(*s.acceptor, false);
  if (s.ws_acceptor) s.accept_next(*s.ws_acceptor, true);
  s.io_thread = std::thread([&s] { s.io.run(); });
}

void Server::stop() {
  Impl& s = *impl_;
  std::list<Impl::Connection> connections;
  {
    std::lock_guard lock(s.mu);
    if (!s.running) return;
    s.running = false;
    for (auto& c : s.connections) {
      if (c.fd >= 0) ::shutdown(c.fd, SHUT_RDWR);
    }
    connections.swap(s.connections);
  }
  s.io.stop();
  if (s.io_thread.joinable()) s.io_thread.join();
  {
    // The io thread has exited, so the acceptors can be closed from here.
    boost::system::error_code ec;
    if (s.acceptor) s.acceptor->close(ec);
    if (s.ws_acceptor) s.ws_acceptor->close(ec);
  }
  for (auto& c : connections) c.worker.join();
  {
    std::lock_guard lock(s.mu);
    s.stopped = true;
  }
  s.cv.notify_all();
}

void Server::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopped; });
}

std::uint16_t Server::port() const {
  boost::system::error_code ec;
  return impl_->acceptor ? impl_->acceptor->local_endpoint(ec).port() : 0;
}

std::optional<std::uint16_t> Server::ws_port() const {
  if (!impl_->ws_acceptor) return std::nullopt;
  boost::system::error_code ec;
  return impl_->ws_acceptor->local_endpoint(ec).port();
}

}  // namespace palmctl
