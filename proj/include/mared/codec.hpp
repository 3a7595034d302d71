#pragma once

// Versioned text encoding for documents (.mared), keyframed documents
// (.kmared), raw captures (.rawcap), playback traces (.trace), session logs
// and pipeline configuration. Documents use a canonical JSON form: keys
// sorted, shortest round-trip numbers, arrays in document order, two-space
// indentation and a trailing newline. Line-oriented files carry one compact
// canonical object per line.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mared/keyframe_distiller.hpp"
#include "mared/model.hpp"
#include "mared/playback.hpp"
#include "mared/semantic_logger.hpp"
#include "mared/validation.hpp"

namespace mared {

inline constexpr std::string_view kSupportedVersions[] = {"0.1"};

enum class DecodeErrorKind { parse, version_mismatch, schema, unknown_key, validation };

std::string_view to_string(DecodeErrorKind kind);

struct DecodeError {
  DecodeErrorKind kind = DecodeErrorKind::parse;
  std::string message;
  std::size_t line = 0;    // 1-based; 0 when not tied to a position
  std::size_t column = 0;  // 1-based
  std::optional<Violation> violation;
};

std::string describe(const DecodeError& e);

template <typename T>
struct DecodeResult {
  std::optional<T> value;
  std::vector<DecodeError> errors;

  bool ok() const { return value.has_value(); }
};

struct CodecOptions {
  // Strict decoding rejects unknown top-level keys; lenient decoding keeps
  // them verbatim in MaredDocument::extensions.
  bool strict = true;
};

/// Canonical text of a valid document. Throws Error(invalid_document)
/// listing the violations otherwise.
std::string encode(const MaredDocument& doc);
std::string encode(const KeyframedDocument& kdoc);

/// Parses and validates. Never throws; any failure is reported as errors.
DecodeResult<MaredDocument> decode_document(std::string_view text,
                                            const CodecOptions& options = {});
DecodeResult<KeyframedDocument> decode_keyframed(std::string_view text,
                                                 const CodecOptions& options = {});

/// One optional {"header": ...} line, then one frame object per line.
std::string encode_raw_capture(const RawCapture& raw);
DecodeResult<RawCapture> decode_raw_capture(std::string_view text);

/// One {"wallTime", "kind", "payload", "target"?} record per line.
std::string encode_trace(const std::vector<InteractionInput>& trace);
DecodeResult<std::vector<InteractionInput>> decode_trace(std::string_view text);

/// One compact SessionEvent object per line.
std::string encode_log(const std::vector<SessionEvent>& log);
std::string encode_event(const SessionEvent& event);

/// Settings for every stage, read from a config file with optional
/// "logger", "weights" and "playback" sections.
struct PipelineConfig {
  LoggerConfig logger;
  ScoringWeights weights;
  PlaybackConfig playback;
};

DecodeResult<PipelineConfig> decode_config(std::string_view text,
                                           const PipelineConfig& defaults = {});
DecodeResult<ScoringWeights> decode_weights(std::string_view text);

/// Shortest decimal text that reads back as the same double ("-0" becomes
/// "0").
std::string format_number(double value);

}  // namespace mared
