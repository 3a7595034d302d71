#pragma once

// Stage 1: turns a raw capture stream (per-frame poses and properties plus
// annotated action phases and segment markers) into a MaredDocument.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mared/model.hpp"
#include "mared/relations.hpp"

namespace mared {

/// One entity as observed in a raw frame. The descriptive fields (kind,
/// label, significance) are read from the first frame that carries them.
struct RawEntity {
  std::string id;
  Pose pose;
  PropertyMap properties;
  Vec3 bbox{0.1, 0.1, 0.1};
  std::optional<EntityKind> kind;
  std::optional<std::string> label;
  std::optional<double> significance;
  std::optional<Vec3> hand;
  std::optional<std::string> attached_to;

  friend bool operator==(const RawEntity&, const RawEntity&) = default;
};

enum class ActionPhase { begin, update, end };

struct ActionAnnotation {
  std::string actor;
  std::string verb;  // free text; unknown verbs become gesture
  std::optional<std::string> target;
  ActionPhase phase = ActionPhase::begin;
  std::optional<std::string> payload;

  friend bool operator==(const ActionAnnotation&,
                         const ActionAnnotation&) = default;
};

enum class MarkerKind { segment_start, segment_end };

struct SegmentMarker {
  MarkerKind kind = MarkerKind::segment_start;
  std::string label;
  std::vector<std::string> participants;
  std::vector<std::string> key_objects;

  friend bool operator==(const SegmentMarker&, const SegmentMarker&) = default;
};

struct RawFrame {
  Seconds t = 0.0;
  std::vector<RawEntity> entities;
  std::vector<ActionAnnotation> actions;
  std::vector<SegmentMarker> markers;

  friend bool operator==(const RawFrame&, const RawFrame&) = default;
};

struct RawCapture {
  DocumentHeader header;
  std::vector<RawFrame> frames;

  friend bool operator==(const RawCapture&, const RawCapture&) = default;
};

struct LoggerConfig {
  double segment_gap = 5.0;            // s, gap that starts a new cluster
  double min_displacement = 0.10;      // m per frame for a pose change
  double min_rotation_deg = 15.0;      // degrees per frame for a pose change
  double min_segment_duration = 0.1;   // s, width given to instantaneous clusters
  bool strict_actions = false;         // unmatched phases throw instead of warn
  RelationThresholds relations;
};

struct IngestResult {
  MaredDocument document;
  std::vector<std::string> warnings;
};

/// Builds the semantic log. The result always passes validate_document.
///
/// Throws Error with rejected_input (empty capture, non-monotone timestamps,
/// unknown actor/target, bad entity data), truncated_action (strict mode),
/// malformed_markers or uncovered_event.
IngestResult ingest(const RawCapture& raw, const LoggerConfig& config = {});

/// Pose, relation and intrinsic changes between consecutive frames.
/// `events` is used only to attribute causes.
std::vector<StateChangeEvent> detect_state_changes(
    const RawCapture& raw, const std::vector<InteractionEvent>& events,
    const LoggerConfig& config = {});

struct EventSpan {
  Seconds t_start = 0.0;
  Seconds t_end = 0.0;
  std::optional<std::string> actor;
  std::optional<std::string> target;
};

struct TimedMarker {
  Seconds t = 0.0;
  SegmentMarker marker;
};

/// Segments mirror the markers when any exist; otherwise spans are clustered
/// by the configured gap. With neither, one fallback segment covers
/// `capture_span`. Throws Error(malformed_markers).
std::vector<SemanticExperienceSegment> build_segments(
    std::vector<EventSpan> events, const std::vector<TimedMarker>& markers,
    const LoggerConfig& config, std::pair<Seconds, Seconds> capture_span);

}  // namespace mared
