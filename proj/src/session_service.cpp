#include "mared/session_service.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "mared/codec.hpp"
#include "mared/error.hpp"
#include "mared/json_io.hpp"

namespace mared {

using json_io::json;

std::string MessageStamper::stamp(const OutMessage& message) {
  json j = {{"type", message.type}, {"seq", next_++}, {"body", message.body}};
  if (message.reply_to) j["replyTo"] = *message.reply_to;
  return json_io::dump(j);
}

SessionController::SessionController(const KeyframedDocument& kdoc, ServiceConfig config,
                                     std::shared_ptr<const Responder> responder)
    : config_(std::move(config)),
      session_(open_session(kdoc, config_.target_space, config_.playback,
                            std::move(responder))) {}

std::vector<OutMessage> SessionController::greeting() const {
  json session_config = json_io::to_json(config_.playback);
  session_config["lockstep"] = config_.lockstep;
  session_config["cadenceHz"] = config_.cadence_hz;
  session_config["mainEnd"] = session_.main_end();
  json keyframes = json::array();
  for (const auto& k : session_.kdoc().keyframes) keyframes.push_back(k.t);
  session_config["keyframes"] = std::move(keyframes);
  json segments = json::array();
  for (const auto& s : session_.kdoc().document.segments) {
    segments.push_back(
        {{"id", s.id}, {"label", s.label}, {"tStart", s.t_start}, {"tEnd", s.t_end}});
  }
  session_config["segments"] = std::move(segments);
  return {{"hello",
           {{"maredVersion", session_.kdoc().document.mared_version},
            {"sessionConfig", std::move(session_config)}},
           std::nullopt},
          state_message(std::nullopt)};
}

OutMessage SessionController::refusal(std::string_view code, std::string_view message,
                                      std::optional<std::uint64_t> reply_to) {
  return {"error", {{"code", std::string(code)}, {"message", std::string(message)}},
          reply_to};
}

OutMessage SessionController::state_message(std::optional<std::uint64_t> reply_to) const {
  return {"state", json_io::to_json(session_.state()), reply_to};
}

void SessionController::collect_transitions(std::size_t log_from,
                                            std::vector<OutMessage>& out) const {
  const auto& log = session_.log();
  for (std::size_t i = log_from; i < log.size(); ++i) {
    const SessionEvent& e = log[i];
    std::string type;
    if (e.type == "branchOpened" || e.type == "branchClosed") {
      type = e.type;
    } else if (e.type == "sessionEnded") {
      type = "ended";
    } else {
      continue;
    }
    out.push_back({type, json_io::to_json(e), std::nullopt});
  }
}

std::vector<OutMessage> SessionController::advance(double wall,
                                                   std::optional<std::uint64_t> reply_to) {
  const std::size_t before = session_.log().size();
  const PlaybackState s = session_.tick(std::max(wall, session_.wall_time()));
  std::vector<OutMessage> out;
  collect_transitions(before, out);
  out.push_back({"state", json_io::to_json(s), reply_to});
  return out;
}

std::vector<OutMessage> SessionController::pulse(double wall) {
  if (config_.lockstep) return {};
  return advance(wall, std::nullopt);
}

std::vector<OutMessage> SessionController::handle(std::string_view text) {
  json message;
  try {
    message = json::parse(text.begin(), text.end());
  } catch (const std::exception& e) {
    return {refusal("badMessage", std::string("unparseable message: ") + e.what())};
  }
  std::optional<std::uint64_t> seq;
  if (message.is_object()) {
    if (auto it = message.find("seq"); it != message.end() && it->is_number_unsigned()) {
      seq = it->get<std::uint64_t>();
    }
  }
  if (!message.is_object() || !seq || !message.contains("type") ||
      !message["type"].is_string()) {
    return {refusal("badMessage", "expected {type, seq, body}", seq)};
  }
  if (last_client_seq_ && *seq <= *last_client_seq_) {
    return {refusal("badMessage", "seq must increase", seq)};
  }
  last_client_seq_ = seq;

  const std::string type = message["type"].get<std::string>();
  const json body = message.value("body", json::object());
  if (!body.is_object()) return {refusal("badMessage", "body must be an object", seq)};

  try {
    if (type == "hello") {
      auto out = greeting();
      out.back().reply_to = seq;
      return out;
    }
    if (type == "tick") {
      if (!config_.lockstep) {
        return {refusal("badMessage", "tick is only accepted in lockstep mode", seq)};
      }
      json_io::expect_keys(body, {"wallTime", "dt"}, "body");
      double wall = session_.wall_time();
      if (const json* w = json_io::optional_field(body, "wallTime")) {
        wall = json_io::number(*w, "body.wallTime");
      } else if (const json* dt = json_io::optional_field(body, "dt")) {
        wall += json_io::number(*dt, "body.dt");
      }
      if (wall < session_.wall_time()) {
        return {refusal("monotonicity", "tick wall time regresses", seq)};
      }
      return advance(wall, seq);
    }
    if (type == "setSpeed") {
      json_io::expect_keys(body, {"rate", "wallTime"}, "body");
      const double rate = json_io::number(json_io::field(body, "rate", "body"), "body.rate");
      if (rate < 0.0) return {refusal("badMessage", "rate must be non-negative", seq)};
      const std::size_t before = session_.log().size();
      session_.set_rate(session_.wall_time(), rate);
      std::vector<OutMessage> out;
      collect_transitions(before, out);
      out.push_back(state_message(seq));
      return out;
    }
    if (type == "inject") {
      // Live inputs happen "now"; lockstep clients may stamp a later time.
      InteractionInput input = json_io::input_from(body, "body", session_.wall_time());
      if (!config_.lockstep || input.wall_time < session_.wall_time()) {
        input.wall_time = session_.wall_time();
      }
      const std::size_t before = session_.log().size();
      const InjectResult result = session_.inject(input);
      std::vector<OutMessage> out;
      collect_transitions(before, out);
      if (result == InjectResult::rejected) {
        out.push_back(refusal("nestedBranchRejected",
                              "a branch is already open; nested branching is not supported",
                              seq));
        return out;
      }
      out.push_back(state_message(seq));
      return out;
    }
  } catch (const json_io::SchemaError& e) {
    return {refusal("badMessage", e.what(), seq)};
  } catch (const Error& e) {
    return {refusal(to_string(e.code()), e.what(), seq)};
  }
  return {refusal("badMessage", "unknown message type '" + type + "'", seq)};
}

ReplayResult replay_trace(const KeyframedDocument& kdoc,
                          const std::vector<InteractionInput>& trace,
                          const PlaybackConfig& config,
                          std::shared_ptr<const Responder> responder,
                          const std::optional<SpaceAnchors>& target_space) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].wall_time < trace[i - 1].wall_time) {
      throw Error(ErrorCode::rejected_input,
                  "trace wall times decrease at record " + std::to_string(i + 1));
    }
  }
  PlaybackSession session = open_session(kdoc, target_space, config, std::move(responder));
  for (const auto& input : trace) {
    if (input.wall_time < 0.0) {
      throw Error(ErrorCode::rejected_input, "trace wall times must be non-negative");
    }
    session.inject(input);
  }
  session.run_to_end();
  return {session.log(), export_session(session)};
}

void serve_stdio(SessionController& controller, std::istream& in, std::ostream& out) {
  MessageStamper stamper;
  auto emit = [&](const std::vector<OutMessage>& messages) {
    for (const auto& m : messages) out << stamper.stamp(m) << '\n';
    out.flush();
  };
  emit(controller.greeting());

  if (controller.config().lockstep) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      emit(controller.handle(line));
    }
    return;
  }

  // Real time: a reader thread feeds a queue; this thread owns the session.
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::string> lines;
  bool closed = false;
  std::thread reader([&] {
    std::string line;
    while (std::getline(in, line)) {
      std::lock_guard lock(mutex);
      lines.push_back(std::move(line));
      ready.notify_one();
    }
    std::lock_guard lock(mutex);
    closed = true;
    ready.notify_one();
  });

  const auto start = std::chrono::steady_clock::now();
  const auto period = std::chrono::duration<double>(1.0 / controller.config().cadence_hz);
  auto next_pulse = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
  auto seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  for (;;) {
    std::deque<std::string> batch;
    bool finished = false;
    {
      std::unique_lock lock(mutex);
      ready.wait_until(lock, next_pulse, [&] { return closed || !lines.empty(); });
      batch.swap(lines);
      finished = closed;
    }
    for (const auto& line : batch) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      emit(controller.pulse(seconds()));
      emit(controller.handle(line));
    }
    if (std::chrono::steady_clock::now() >= next_pulse && !controller.ended()) {
      emit(controller.pulse(seconds()));
      next_pulse += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
    }
    if (finished) break;
  }
  reader.join();
}

}  // namespace mared
