#pragma once

// Live access to a playback session. A SessionController turns client
// messages into playback operations and produces the outgoing message
// stream; transports (standard I/O, websocket) only move text and stamp
// per-connection sequence numbers.
//
// Wire format: one JSON object per line or text frame,
//   {"type": ..., "seq": n, "body": {...}, "replyTo": m?}
// Client types: hello, inject, setSpeed, tick.
// Server types: hello, state, branchOpened, branchClosed, ended, error.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mared/model.hpp"
#include "mared/playback.hpp"

namespace mared {

struct ServiceConfig {
  PlaybackConfig playback;
  bool lockstep = false;     // time advances only on tick messages
  double cadence_hz = 10.0;  // state broadcasts in real-time mode
  std::optional<SpaceAnchors> target_space;
};

/// A message before its connection stamps a seq onto it.
struct OutMessage {
  std::string type;
  nlohmann::json body = nlohmann::json::object();
  std::optional<std::uint64_t> reply_to;
};

/// Assigns strictly increasing seq numbers (from 1) for one connection
/// direction and renders the line.
class MessageStamper {
 public:
  std::string stamp(const OutMessage& message);
  std::uint64_t last() const { return next_ - 1; }

 private:
  std::uint64_t next_ = 1;
};

class SessionController {
 public:
  SessionController(const KeyframedDocument& kdoc, ServiceConfig config,
                    std::shared_ptr<const Responder> responder = nullptr);

  /// hello followed by the current state.
  std::vector<OutMessage> greeting() const;

  /// Handles one client line. Never throws: problems become error messages.
  std::vector<OutMessage> handle(std::string_view text);

  /// Real-time pulse: advances to `wall` and reports a state message plus
  /// any transitions crossed on the way. Ignored in lockstep mode.
  std::vector<OutMessage> pulse(double wall);

  /// Error reply sent to a client that may not control the session.
  static OutMessage refusal(std::string_view code, std::string_view message,
                            std::optional<std::uint64_t> reply_to = std::nullopt);

  const PlaybackSession& session() const { return session_; }
  const ServiceConfig& config() const { return config_; }
  bool ended() const { return session_.mode() == PlaybackMode::ended; }

 private:
  std::vector<OutMessage> advance(double wall, std::optional<std::uint64_t> reply_to);
  void collect_transitions(std::size_t log_from, std::vector<OutMessage>& out) const;
  OutMessage state_message(std::optional<std::uint64_t> reply_to) const;

  ServiceConfig config_;
  PlaybackSession session_;
  std::optional<std::uint64_t> last_client_seq_;
};

struct ReplayResult {
  std::vector<SessionEvent> log;
  MaredDocument exported;
};

/// Runs a whole session headless in lockstep: each input is applied at its
/// wall time, then playback runs to its end. Throws Error(rejected_input) if
/// the trace's wall times decrease.
ReplayResult replay_trace(const KeyframedDocument& kdoc,
                          const std::vector<InteractionInput>& trace,
                          const PlaybackConfig& config = {},
                          std::shared_ptr<const Responder> responder = nullptr,
                          const std::optional<SpaceAnchors>& target_space = std::nullopt);

/// Serves one controlling client over line-oriented streams until the input
/// closes. In real-time mode state is broadcast at the configured cadence.
void serve_stdio(SessionController& controller, std::istream& in, std::ostream& out);

/// Websocket endpoint at /session. The first client is the controller;
/// "?role=observer" connects read-only; a second controller gets
/// error{busy}.
class WebSocketServer {
 public:
  WebSocketServer(const KeyframedDocument& kdoc, ServiceConfig config,
                  std::uint16_t port,
                  std::shared_ptr<const Responder> responder = nullptr);
  ~WebSocketServer();
  WebSocketServer(const WebSocketServer&) = delete;
  WebSocketServer& operator=(const WebSocketServer&) = delete;

  /// Bound port (useful when constructed with port 0).
  std::uint16_t port() const;

  /// Blocks until stop() is called.
  void run();
  /// Thread-safe.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mared
