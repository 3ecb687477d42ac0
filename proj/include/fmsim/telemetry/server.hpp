// Copyright 2026 The fmsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// WebSocket front end for LiveSession.
//
// Threads: one io_context thread owns every socket; the thread calling run()
// owns the session and paces it. They talk through an inbound event queue
// (drained at tick boundaries) and posted outbound sends.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "fmsim/telemetry/live_session.hpp"

namespace fmsim::telemetry {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

class ServerError : public Error {
 public:
  using Error::Error;
};

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  unsigned short port = 8700;  // 0 picks a free port
  double realtime_factor = 1.0;  // <= 0 or infinite: run as fast as possible
  bool exit_on_end = false;

  bool batch() const { return !(realtime_factor > 0.0) || std::isinf(realtime_factor); }
};

/// Parses "inf", "0" or a positive factor.
inline double parse_realtime_factor(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size() && x >= 0.0) return x;
  } catch (const std::exception&) {
  }
  throw ValidationError("realtime", "expected a factor >= 0 or 'inf', got '" + s + "'");
}

class Server {
 public:
  Server(ScenarioConfig config, ServerOptions options)
      : options_(std::move(options)), session_(std::move(config)), acceptor_(ioc_) {}

  ~Server() {
    stop();
    shutdown_io();
  }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting. Throws ServerError if the address is taken.
  void listen() {
    beast::error_code ec;
    const auto address = net::ip::make_address(options_.bind_address, ec);
    if (ec) throw ServerError("bad bind address '" + options_.bind_address + "': " + ec.message());
    const tcp::endpoint ep(address, options_.port);
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      throw ServerError("cannot listen on " + options_.bind_address + ":" + std::to_string(options_.port) +
                        ": " + ec.message());
    }
    port_ = acceptor_.local_endpoint().port();
    spdlog::info("listening on ws://{}:{}", options_.bind_address, port_);
    do_accept();
    io_thread_ = std::thread([this] {
      ioc_.run();
      io_done_ = true;
    });
  }

  unsigned short port() const { return port_; }

  /// Paces the session until stop() or, with exit_on_end, the run ends.
  void run() {
    using clock = std::chrono::steady_clock;
    const auto period = options_.batch()
                            ? clock::duration::zero()
                            : std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(
                                  session_.config().sim.dt_s / options_.realtime_factor));
    auto next = clock::now();
    while (!stopping_) {
      drain_inbound();
      if (session_.running()) {
        dispatch(session_.tick());
        if (session_.done()) log_end();
        if (period > clock::duration::zero()) {
          next += period;
          std::unique_lock lock(mutex_);
          wake_.wait_until(lock, next, [this] { return stopping_.load(); });
        }
        continue;
      }
      if (options_.exit_on_end && session_.done()) break;
      std::unique_lock lock(mutex_);
      wake_.wait_for(lock, std::chrono::milliseconds(20),
                     [this] { return stopping_.load() || !inbound_.empty(); });
      next = clock::now();
    }
    shutdown_io();
  }

  /// Safe from any thread.
  void stop() {
    stopping_ = true;
    wake_.notify_all();
  }

  /// The session after run() returned.
  const LiveSession& session() const { return session_; }

 private:
  struct Event {
    enum class Kind { Connect, Message, Disconnect } kind;
    ClientId id;
    std::string text;
  };

  class Connection : public std::enable_shared_from_this<Connection> {
   public:
    Connection(Server& server, ClientId id, tcp::socket socket)
        : server_(server), id_(id), ws_(std::move(socket)) {}

    void start() {
      ws_.text(true);
      ws_.read_message_max(64 * 1024);
      ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
        if (ec) return self->finish();
        self->accepted_ = true;
        self->server_.push({Event::Kind::Connect, self->id_, {}});
        self->do_read();
      });
    }

    void send(std::string text, bool close_after) {
      if (closing_ || close_after_) return;
      queue_.push_back(std::move(text));
      close_after_ = close_after_ || close_after;
      if (queue_.size() == 1) do_write();
    }

    void close() {
      if (!accepted_) {
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
        return;
      }
      if (queue_.empty()) {
        do_close();
      } else {
        close_after_ = true;
      }
    }

   private:
    void do_read() {
      ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return self->finish();
        self->server_.push({Event::Kind::Message, self->id_, beast::buffers_to_string(self->buffer_.data())});
        self->buffer_.consume(self->buffer_.size());
        self->do_read();
      });
    }

    void do_write() {
      ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return self->finish();
        self->queue_.pop_front();
        if (!self->queue_.empty()) return self->do_write();
        if (self->close_after_) self->do_close();
      });
    }

    void do_close() {
      if (closing_) return;
      closing_ = true;
      ws_.async_close(websocket::close_code::normal,
                      [self = shared_from_this()](beast::error_code) { self->finish(); });
    }

    void finish() {
      if (finished_) return;
      finished_ = true;
      closing_ = true;
      server_.connections_.erase(id_);
      server_.push({Event::Kind::Disconnect, id_, {}});
    }

    Server& server_;
    ClientId id_;
    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    bool accepted_ = false;
    bool close_after_ = false;
    bool closing_ = false;
    bool finished_ = false;
  };

  void do_accept() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      const ClientId id = next_id_++;
      spdlog::debug("client {} connected", id);
      auto conn = std::make_shared<Connection>(*this, id, std::move(socket));
      connections_[id] = conn;
      conn->start();
      do_accept();
    });
  }

  void push(Event e) {
    {
      std::lock_guard lock(mutex_);
      inbound_.push_back(std::move(e));
    }
    wake_.notify_all();
  }

  void drain_inbound() {
    std::deque<Event> events;
    {
      std::lock_guard lock(mutex_);
      events.swap(inbound_);
    }
    for (auto& e : events) {
      switch (e.kind) {
        case Event::Kind::Connect:
          dispatch(session_.connect(e.id));
          break;
        case Event::Kind::Message:
          dispatch(session_.receive(e.id, e.text));
          break;
        case Event::Kind::Disconnect:
          spdlog::debug("client {} disconnected", e.id);
          dispatch(session_.disconnect(e.id));
          break;
      }
    }
  }

  void dispatch(Frames frames) {
    if (frames.empty()) return;
    net::post(ioc_, [this, frames = std::move(frames)]() mutable {
      for (auto& f : frames) {
        if (f.to) {
          if (auto it = connections_.find(*f.to); it != connections_.end()) {
            it->second->send(std::move(f.text), f.close);
          }
        } else {
          for (auto& [_, c] : connections_) c->send(f.text, f.close);
        }
      }
    });
  }

  void log_end() {
    if (session_.failed()) {
      spdlog::error("simulation stopped on error");
    } else {
      spdlog::info("simulation ended: {}", session_.engine().end_reason().value_or(""));
    }
  }

  // Flushes queued frames and closes every client. The io thread exits once
  // no work is left; stragglers are cut off after two seconds.
  void shutdown_io() {
    if (!io_thread_.joinable()) return;
    net::post(ioc_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
      auto conns = connections_;
      for (auto& [_, c] : conns) c->close();
    });
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (!io_done_ && std::chrono::steady_clock::now() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ioc_.stop();
    io_thread_.join();
  }

  ServerOptions options_;
  LiveSession session_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  std::thread io_thread_;
  unsigned short port_ = 0;
  ClientId next_id_ = 1;
  std::map<ClientId, std::shared_ptr<Connection>> connections_;  // io thread only

  std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<Event> inbound_;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> io_done_{false};
};

}  // namespace fmsim::telemetry
