#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <set>

#include "mared/session_service.hpp"

namespace mared {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection;

struct Hub {
  explicit Hub(SessionController c) : controller(std::move(c)) {}

  SessionController controller;
  Connection* owner = nullptr;  // controlling client, if connected
  std::set<std::shared_ptr<Connection>> connections;
  std::optional<std::chrono::steady_clock::time_point> started;

  double now() const {
    if (!started) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - *started)
        .count();
  }
  void broadcast(const std::vector<OutMessage>& messages);
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_request(ec);
                     });
  }

  void send(const OutMessage& message) {
    outbox_.push_back(stamper_.stamp(message));
    if (outbox_.size() == 1 && open_) write_next();
  }

 private:
  void on_request(beast::error_code ec) {
    if (ec) return;
    const std::string target(request_.target());
    const std::string path = target.substr(0, target.find('?'));
    if (path != "/session" || !websocket::is_upgrade(request_)) {
      auto response = std::make_shared<http::response<http::string_body>>(
          http::status::not_found, request_.version());
      response->set(http::field::content_type, "text/plain");
      response->body() = "websocket endpoint is /session\n";
      response->prepare_payload();
      http::async_write(ws_.next_layer(), *response,
                        [self = shared_from_this(), response](beast::error_code, std::size_t) {
                          self->ws_.next_layer().shutdown(tcp::socket::shutdown_both);
                        });
      return;
    }
    observer_ = target.find("role=observer") != std::string::npos;
    ws_.text(true);
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec) {
      self->on_accept(ec);
    });
  }

  void on_accept(beast::error_code ec) {
    if (ec) return;
    open_ = true;
    hub_.connections.insert(shared_from_this());
    if (!observer_) {
      if (hub_.owner != nullptr) {
        send(SessionController::refusal("busy", "another client controls this session"));
        closing_ = true;
        return;
      }
      hub_.owner = this;
      if (!hub_.started) hub_.started = std::chrono::steady_clock::now();
    }
    for (const auto& m : hub_.controller.greeting()) send(m);
    read_next();
  }

  void read_next() {
    ws_.async_read(inbox_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      drop();
      return;
    }
    const std::string text = beast::buffers_to_string(inbox_.data());
    inbox_.consume(inbox_.size());
    if (observer_) {
      send(SessionController::refusal("readOnly", "observers cannot send commands"));
    } else {
      if (!hub_.controller.config().lockstep) {
        hub_.broadcast(hub_.controller.pulse(hub_.now()));
      }
      auto replies = hub_.controller.handle(text);
      // Replies go to the controller; transitions and states are shared.
      for (const auto& m : replies) send(m);
      std::vector<OutMessage> shared;
      for (const auto& m : replies) {
        if (m.type != "error") shared.push_back({m.type, m.body, std::nullopt});
      }
      for (const auto& c : hub_.connections) {
        if (c.get() != this) {
          for (const auto& m : shared) c->send(m);
        }
      }
    }
    read_next();
  }

  void write_next() {
    ws_.async_write(asio::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->on_write(ec);
                    });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      drop();
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) {
      write_next();
    } else if (closing_) {
      ws_.async_close(websocket::close_code::try_again_later,
                      [self = shared_from_this()](beast::error_code) { self->drop(); });
    }
  }

  void drop() {
    open_ = false;
    if (hub_.owner == this) hub_.owner = nullptr;
    hub_.connections.erase(shared_from_this());
  }

  websocket::stream<tcp::socket> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  beast::flat_buffer inbox_;
  http::request<http::string_body> request_;
  std::deque<std::string> outbox_;
  MessageStamper stamper_;
  bool observer_ = false;
  bool open_ = false;
  bool closing_ = false;
};

void Hub::broadcast(const std::vector<OutMessage>& messages) {
  for (const auto& c : connections) {
    for (const auto& m : messages) c->send(m);
  }
}

}  // namespace

struct WebSocketServer::Impl {
  Impl(const KeyframedDocument& kdoc, ServiceConfig config, std::uint16_t port,
       std::shared_ptr<const Responder> responder)
      : hub(SessionController(kdoc, std::move(config), std::move(responder))),
        acceptor(io, tcp::endpoint(asio::ip::make_address("127.0.0.1"), port)),
        timer(io) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), hub)->start();
      accept();
    });
  }

  void schedule_pulse() {
    const double period = 1.0 / hub.controller.config().cadence_hz;
    timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(period)));
    timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      if (hub.started && !hub.controller.ended()) {
        hub.broadcast(hub.controller.pulse(hub.now()));
      }
      schedule_pulse();
    });
  }

  asio::io_context io;
  Hub hub;
  tcp::acceptor acceptor;
  asio::steady_timer timer;
};

WebSocketServer::WebSocketServer(const KeyframedDocument& kdoc, ServiceConfig config,
                                 std::uint16_t port,
                                 std::shared_ptr<const Responder> responder)
    : impl_(std::make_unique<Impl>(kdoc, std::move(config), port, std::move(responder))) {}

WebSocketServer::~WebSocketServer() = default;

std::uint16_t WebSocketServer::port() const {
  return impl_->acceptor.local_endpoint().port();
}

void WebSocketServer::run() {
  impl_->accept();
  if (!impl_->hub.controller.config().lockstep) impl_->schedule_pulse();
  impl_->io.run();
}

void WebSocketServer::stop() { impl_->io.stop(); }

}  // namespace mared
