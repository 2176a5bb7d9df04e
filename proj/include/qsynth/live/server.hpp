#pragma once

// WebSocket endpoint for the control protocol. Everything network-side runs
// on one io_context thread; each connection owns a Session and a write queue,
// so replies leave in request order.

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "qsynth/error.hpp"
#include "qsynth/live/control.hpp"

namespace qsynth::live {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace server_detail {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, ControlPlane& control)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), control_(control) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->read();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    timer_.cancel();
    ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      closed_ = true;
      timer_.cancel();
      return;
    }
    const bool was_subscribed = session_.subscribed;
    const auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    send(control_.handle_text(session_, text).dump());
    if (session_.subscribed && !was_subscribed) schedule_status();
    read();
  }

  void schedule_status() {
    const auto period = std::chrono::duration<double>(1.0 / session_.status_rate_hz);
    timer_.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(period));
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_ || !self->session_.subscribed) return;
      self->send(self->control_.status_message().dump());
      self->schedule_status();
    });
  }

  void send(std::string text) {
    if (closed_) return;
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->timer_.cancel();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write_next();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  ControlPlane& control_;
  Session session_;
  bool closed_ = false;
};

}  // namespace server_detail

class LiveServer {
 public:
  /// Binds immediately; throws IoError when the address cannot be bound.
  LiveServer(ControlPlane& control, const std::string& address, std::uint16_t port)
      : control_(control), acceptor_(io_) {
    beast::error_code ec;
    const auto addr = net::ip::make_address(address, ec);
    if (ec) throw IoError("invalid listen address '" + address + "'");
    const tcp::endpoint endpoint(addr, port);
    acceptor_.open(endpoint.protocol(), ec);
    if (!ec) acceptor_.set_option(tcp::acceptor::reuse_address(true), ec);
    if (!ec) acceptor_.bind(endpoint, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw IoError("cannot listen on " + address + ":" + std::to_string(port) + ": " + ec.message());
    accept();
  }

  std::uint16_t port() const { return acceptor_.local_endpoint().port(); }
  std::string address() const { return acceptor_.local_endpoint().address().to_string(); }
  std::string endpoint() const { return address() + ":" + std::to_string(port()); }

  net::io_context& context() noexcept { return io_; }

  /// Runs the network loop on the calling thread until stop().
  void run() { io_.run(); }

  /// Safe from any thread.
  void stop() {
    net::post(io_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
      for (auto& weak : connections_)
        if (auto c = weak.lock()) c->close();
      connections_.clear();
      io_.stop();
    });
  }

 private:
  void accept() {
    acceptor_.async_accept(net::make_strand(io_), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto conn = std::make_shared<server_detail::Connection>(std::move(socket), control_);
      connections_.push_back(conn);
      std::erase_if(connections_, [](const auto& w) { return w.expired(); });
      conn->start();
      accept();
    });
  }

  ControlPlane& control_;
  net::io_context io_{1};
  tcp::acceptor acceptor_;
  std::vector<std::weak_ptr<server_detail::Connection>> connections_;
};

}  // namespace qsynth::live
