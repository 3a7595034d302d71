#include "mared/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mared/codec.hpp"
#include "mared/error.hpp"
#include "mared/json_io.hpp"
#include "mared/session_service.hpp"

namespace mared::cli {

namespace {

// Carries an exit code out of a subcommand.
struct Exit {
  int code;
};

struct Context {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;

  [[noreturn]] void fail(int code, const std::string& message) const {
    err << "mared-error: " << message << '\n';
    throw Exit{code};
  }

  std::string read(const std::string& path) const {
    std::ifstream file(path, std::ios::binary);
    if (!file) fail(kExitUsage, "io: cannot read '" + path + "'");
    std::ostringstream text;
    text << file.rdbuf();
    return text.str();
  }

  void write(const std::string& path, const std::string& text) const {
    if (path.empty() || path == "-") {
      out << text;
      return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file || !(file << text)) fail(kExitUsage, "io: cannot write '" + path + "'");
  }

  template <typename T>
  T decoded(DecodeResult<T> result, const std::string& path, int code = kExitInvalid) const {
    if (result.ok()) return std::move(*result.value);
    for (const auto& e : result.errors) {
      err << "mared-error: " << describe(e) << " [" << path << "]\n";
    }
    throw Exit{code};
  }
};

std::string extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  return dot == std::string::npos ? "" : path.substr(dot + 1);
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  const Context ctx{in, out, err};

  CLI::App app{"Record, distill and replay mixed-reality experiences", "mared"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Pipeline config file (default: $MARED_CONFIG)");

  std::string input;
  std::string output;

  auto* ingest_cmd = app.add_subcommand("ingest", "Raw capture -> semantic document");
  ingest_cmd->add_option("rawcap", input, "Raw capture (.rawcap)")->required();
  ingest_cmd->add_option("-o,--output", output, "Output document (.mared)");
  bool strict_actions = false;
  ingest_cmd->add_flag("--strict-actions", strict_actions,
                       "Reject unmatched action phases instead of dropping them");

  auto* distill_cmd = app.add_subcommand("distill", "Document -> keyframed document");
  distill_cmd->add_option("mared", input, "Semantic document (.mared)")->required();
  double threshold = 0.5;
  distill_cmd->add_option("--threshold", threshold, "Keyframe threshold in [0, 1]")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  std::string weights_path;
  distill_cmd->add_option("--weights", weights_path, "Scoring weights file");
  distill_cmd->add_option("-o,--output", output, "Output (.kmared)");

  auto* play_cmd = app.add_subcommand("play", "Headless playback of a trace");
  play_cmd->add_option("kmared", input, "Keyframed document (.kmared)")->required();
  std::string trace_path;
  play_cmd->add_option("--trace", trace_path, "Interaction trace (.trace); empty if omitted");
  std::optional<double> speed;
  play_cmd->add_option("--speed", speed, "Base playback rate (> 0)")
      ->check(CLI::PositiveNumber);
  std::string report_path;
  play_cmd->add_option("--report", report_path, "Session log output (default: stdout)");
  std::string export_path;
  play_cmd->add_option("--export", export_path, "Exported session document (.mared)");
  std::string anchors_path;
  auto add_anchors = [&](CLI::App* cmd) {
    cmd->add_option("--anchors", anchors_path,
                    "Target space anchors (JSON array of {id, pose})");
  };
  add_anchors(play_cmd);

  auto* serve_cmd = app.add_subcommand("serve", "Live session over a websocket or stdio");
  serve_cmd->add_option("kmared", input, "Keyframed document (.kmared)")->required();
  int port = 8765;
  auto* port_opt =
      serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  bool lockstep = false;
  serve_cmd->add_flag("--lockstep", lockstep, "Advance time only on tick messages");
  bool stdio = false;
  serve_cmd->add_flag("--stdio", stdio, "Speak the protocol on stdin/stdout")
      ->excludes(port_opt);
  double cadence = 10.0;
  serve_cmd->add_option("--cadence", cadence, "State broadcasts per second")
      ->check(CLI::Range(0.1, 1000.0));
  add_anchors(serve_cmd);

  auto* validate_cmd = app.add_subcommand("validate", "Check a .mared/.kmared/.rawcap/.trace");
  validate_cmd->add_option("file", input, "File to check")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mared-error: usage: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("MARED_CONFIG"); env != nullptr) config_path = env;
    }
    PipelineConfig config;
    if (!config_path.empty()) {
      config = ctx.decoded(decode_config(ctx.read(config_path)), config_path, kExitUsage);
    }
    std::optional<SpaceAnchors> target_space;
    if (!anchors_path.empty()) {
      const std::string text = ctx.read(anchors_path);
      try {
        target_space = json_io::anchors_from(json_io::json::parse(text), "$");
      } catch (const std::exception& e) {
        ctx.fail(kExitUsage, std::string("usage: bad anchors file: ") + e.what());
      }
    }

    if (ingest_cmd->parsed()) {
      RawCapture raw = ctx.decoded(decode_raw_capture(ctx.read(input)), input);
      if (strict_actions) config.logger.strict_actions = true;
      IngestResult result = ingest(raw, config.logger);
      for (const auto& w : result.warnings) err << "mared-warning: " << w << '\n';
      ctx.write(output, encode(result.document));
    } else if (distill_cmd->parsed()) {
      MaredDocument doc = ctx.decoded(decode_document(ctx.read(input)), input);
      ScoringWeights weights = config.weights;
      if (!weights_path.empty()) {
        weights = ctx.decoded(decode_weights(ctx.read(weights_path)), weights_path,
                              kExitUsage);
      }
      ctx.write(output, encode(distill(doc, threshold, weights)));
    } else if (play_cmd->parsed()) {
      KeyframedDocument kdoc = ctx.decoded(decode_keyframed(ctx.read(input)), input);
      std::vector<InteractionInput> trace;
      if (!trace_path.empty()) {
        trace = ctx.decoded(decode_trace(ctx.read(trace_path)), trace_path);
      }
      if (speed) config.playback.base_rate = *speed;
      ReplayResult result = replay_trace(kdoc, trace, config.playback, nullptr, target_space);
      ctx.write(report_path, encode_log(result.log));
      if (!export_path.empty()) ctx.write(export_path, encode(result.exported));
    } else if (serve_cmd->parsed()) {
      KeyframedDocument kdoc = ctx.decoded(decode_keyframed(ctx.read(input)), input);
      ServiceConfig service{config.playback, lockstep, cadence, target_space};
      if (stdio) {
        SessionController controller(kdoc, service);
        serve_stdio(controller, in, out);
      } else {
        WebSocketServer server(kdoc, service, static_cast<std::uint16_t>(port));
        err << "mared: serving ws://127.0.0.1:" << server.port() << "/session\n";
        server.run();
      }
    } else if (validate_cmd->parsed()) {
      const std::string text = ctx.read(input);
      const std::string ext = extension(input);
      if (ext == "rawcap") {
        ctx.decoded(decode_raw_capture(text), input);
      } else if (ext == "trace") {
        ctx.decoded(decode_trace(text), input);
      } else if (ext == "kmared" ||
                 (ext != "mared" && text.find("\"keyframes\"") != std::string::npos)) {
        ctx.decoded(decode_keyframed(text), input);
      } else {
        ctx.decoded(decode_document(text), input);
      }
      out << "ok: " << input << '\n';
    }
  } catch (const Exit& e) {
    return e.code;
  } catch (const Error& e) {
    err << "mared-error: " << e.what() << '\n';
    return e.code() == ErrorCode::usage ? kExitUsage : kExitInvalid;
  } catch (const std::exception& e) {
    err << "mared-error: internal: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}

}  // namespace mared::cli
