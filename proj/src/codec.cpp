#include "mared/codec.hpp"

#include <algorithm>
#include <cmath>

#include "mared/error.hpp"
#include "mared/json_io.hpp"

namespace mared {

using json_io::json;
using json_io::SchemaError;

std::string_view to_string(DecodeErrorKind kind) {
  switch (kind) {
    case DecodeErrorKind::parse: return "parseError";
    case DecodeErrorKind::version_mismatch: return "versionMismatch";
    case DecodeErrorKind::schema: return "schemaError";
    case DecodeErrorKind::unknown_key: return "unknownKey";
    case DecodeErrorKind::validation: return "validation";
  }
  return "?";
}

std::string describe(const DecodeError& e) {
  std::string out(to_string(e.kind));
  if (e.line > 0) {
    out += " at " + std::to_string(e.line) + ":" + std::to_string(e.column);
  }
  return out + ": " + e.message;
}

namespace {

// ---------------------------------------------------------------------------
// Writers

json properties_json(const PropertyMap& props) {
  json out = json::object();
  for (const auto& [k, v] : props) {
    std::visit([&](const auto& x) { out[k] = x; }, v);
  }
  return out;
}

json relations_json(const RelationSet& relations) {
  json out = json::array();
  for (const auto& r : relations) {
    out.push_back({{"predicate", std::string(to_string(r.predicate))},
                   {"subject", r.subject},
                   {"object", r.object}});
  }
  return out;
}

json snapshot_json(const ObjectSnapshot& s) {
  return {{"relations", relations_json(s.relations)},
          {"properties", properties_json(s.properties)}};
}

json state_value_json(const StateValue& v) {
  if (const auto* p = std::get_if<Pose>(&v)) return json_io::to_json(*p);
  if (const auto* r = std::get_if<RelationSet>(&v)) return relations_json(*r);
  return properties_json(std::get<PropertyMap>(v));
}

json document_json(const MaredDocument& doc) {
  json entities = json::array();
  for (const auto& e : doc.entities) {
    entities.push_back({{"id", e.id},
                        {"kind", std::string(to_string(e.kind))},
                        {"label", e.label},
                        {"significance", e.significance},
                        {"bbox", json_io::to_json(e.bbox)},
                        {"properties", properties_json(e.properties)},
                        {"pose", json_io::to_json(e.pose)}});
  }
  json segments = json::array();
  for (const auto& s : doc.segments) {
    segments.push_back({{"id", s.id},
                        {"label", s.label},
                        {"tStart", s.t_start},
                        {"tEnd", s.t_end},
                        {"participants", s.participants},
                        {"keyObjects", s.key_objects}});
  }
  json interactions = json::array();
  for (const auto& e : doc.interaction_events) {
    json j = {{"id", e.id},
              {"segmentId", e.segment_id},
              {"actor", e.actor},
              {"verb", std::string(to_string(e.verb))},
              {"tStart", e.t_start},
              {"tEnd", e.t_end},
              {"preState", snapshot_json(e.pre_state)},
              {"postState", snapshot_json(e.post_state)}};
    if (e.target) j["target"] = *e.target;
    if (e.payload) j["payload"] = *e.payload;
    interactions.push_back(std::move(j));
  }
  json changes = json::array();
  for (const auto& s : doc.state_change_events) {
    json trajectory = json::array();
    for (const auto& sample : s.trajectory) {
      trajectory.push_back({{"t", sample.t}, {"pose", json_io::to_json(sample.pose)}});
    }
    json j = {{"id", s.id},
              {"subject", s.subject},
              {"kind", std::string(to_string(s.kind))},
              {"tStart", s.t_start},
              {"tEnd", s.t_end},
              {"before", state_value_json(s.before)},
              {"after", state_value_json(s.after)},
              {"trajectory", std::move(trajectory)}};
    if (s.cause_event_id) j["causeEventId"] = *s.cause_event_id;
    changes.push_back(std::move(j));
  }

  json out = {{"maredVersion", doc.mared_version},
              {"header",
               {{"captureEpoch", doc.header.capture_epoch},
                {"anchors", json_io::to_json(doc.header.anchors)}}},
              {"entities", std::move(entities)},
              {"segments", std::move(segments)},
              {"interactionEvents", std::move(interactions)},
              {"stateChangeEvents", std::move(changes)}};
  for (const auto& [key, text] : doc.extensions) {
    if (out.contains(key)) continue;
    out[key] = json::parse(text, nullptr, false);
  }
  return out;
}

[[noreturn]] void refuse(const std::vector<Violation>& violations) {
  std::string message = "refusing to encode an invalid document:";
  for (const auto& v : violations) message += " " + describe(v) + ";";
  throw Error(ErrorCode::invalid_document, message);
}

// ---------------------------------------------------------------------------
// Readers

using json_io::array;
using json_io::expect_keys;
using json_io::field;
using json_io::number;
using json_io::optional_field;
using json_io::string;

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

std::vector<std::string> strings_from(const json& j, const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  for (const auto& item : array(j, path)) out.push_back(string(item, at(path, i++)));
  return out;
}

PropertyMap properties_from(const json& j, const std::string& path) {
  PropertyMap out;
  json_io::object(j, path);
  for (const auto& [key, value] : j.items()) {
    const std::string p = path + "." + key;
    if (value.is_boolean()) {
      out.emplace(key, value.get<bool>());
    } else if (value.is_number()) {
      out.emplace(key, number(value, p));
    } else if (value.is_string()) {
      out.emplace(key, value.get<std::string>());
    } else {
      throw SchemaError(p, "property values must be boolean, number or string");
    }
  }
  return out;
}

RelationSet relations_from(const json& j, const std::string& path) {
  RelationSet out;
  std::size_t i = 0;
  for (const auto& r : array(j, path)) {
    const std::string p = at(path, i++);
    expect_keys(r, {"predicate", "subject", "object"}, p);
    const std::string name = string(field(r, "predicate", p), p + ".predicate");
    const auto predicate = parse_predicate(name);
    if (!predicate) throw SchemaError(p + ".predicate", "unknown predicate '" + name + "'");
    out.insert({*predicate, string(field(r, "subject", p), p + ".subject"),
                string(field(r, "object", p), p + ".object")});
  }
  return out;
}

ObjectSnapshot snapshot_from(const json& j, const std::string& path) {
  expect_keys(j, {"relations", "properties"}, path);
  return {relations_from(field(j, "relations", path), path + ".relations"),
          properties_from(field(j, "properties", path), path + ".properties")};
}

StateValue state_value_from(const json& j, ChangeKind kind, const std::string& path) {
  switch (kind) {
    case ChangeKind::pose: return json_io::pose_from(j, path);
    case ChangeKind::relation: return relations_from(j, path);
    case ChangeKind::intrinsic: return properties_from(j, path);
  }
  throw SchemaError(path, "unknown change kind");
}

std::optional<std::string> optional_string(const json& j, const char* key,
                                           const std::string& path) {
  if (const json* v = optional_field(j, key)) return string(*v, path + "." + key);
  return std::nullopt;
}

Entity entity_from(const json& j, const std::string& path) {
  expect_keys(j, {"id", "kind", "label", "significance", "bbox", "properties", "pose"},
              path);
  Entity e;
  e.id = string(field(j, "id", path), path + ".id");
  const std::string kind = string(field(j, "kind", path), path + ".kind");
  const auto parsed = parse_entity_kind(kind);
  if (!parsed) throw SchemaError(path + ".kind", "unknown entity kind '" + kind + "'");
  e.kind = *parsed;
  e.label = string(field(j, "label", path), path + ".label");
  e.significance = number(field(j, "significance", path), path + ".significance");
  e.bbox = json_io::vec3_from(field(j, "bbox", path), path + ".bbox");
  e.properties = properties_from(field(j, "properties", path), path + ".properties");
  e.pose = json_io::pose_from(field(j, "pose", path), path + ".pose");
  return e;
}

SemanticExperienceSegment segment_from(const json& j, const std::string& path) {
  expect_keys(j, {"id", "label", "tStart", "tEnd", "participants", "keyObjects"}, path);
  SemanticExperienceSegment s;
  s.id = string(field(j, "id", path), path + ".id");
  s.label = string(field(j, "label", path), path + ".label");
  s.t_start = number(field(j, "tStart", path), path + ".tStart");
  s.t_end = number(field(j, "tEnd", path), path + ".tEnd");
  s.participants = strings_from(field(j, "participants", path), path + ".participants");
  s.key_objects = strings_from(field(j, "keyObjects", path), path + ".keyObjects");
  return s;
}

InteractionEvent interaction_from(const json& j, const std::string& path) {
  expect_keys(j, {"id", "segmentId", "actor", "verb", "target", "tStart", "tEnd",
                  "preState", "postState", "payload"},
              path);
  InteractionEvent e;
  e.id = string(field(j, "id", path), path + ".id");
  e.segment_id = string(field(j, "segmentId", path), path + ".segmentId");
  e.actor = string(field(j, "actor", path), path + ".actor");
  const std::string verb = string(field(j, "verb", path), path + ".verb");
  const auto parsed = parse_verb(verb);
  if (!parsed) throw SchemaError(path + ".verb", "unknown verb '" + verb + "'");
  e.verb = *parsed;
  e.target = optional_string(j, "target", path);
  e.t_start = number(field(j, "tStart", path), path + ".tStart");
  e.t_end = number(field(j, "tEnd", path), path + ".tEnd");
  e.pre_state = snapshot_from(field(j, "preState", path), path + ".preState");
  e.post_state = snapshot_from(field(j, "postState", path), path + ".postState");
  e.payload = optional_string(j, "payload", path);
  return e;
}

StateChangeEvent state_change_from(const json& j, const std::string& path) {
  expect_keys(j, {"id", "subject", "kind", "tStart", "tEnd", "before", "after",
                  "trajectory", "causeEventId"},
              path);
  StateChangeEvent s;
  s.id = string(field(j, "id", path), path + ".id");
  s.subject = string(field(j, "subject", path), path + ".subject");
  const std::string kind = string(field(j, "kind", path), path + ".kind");
  const auto parsed = parse_change_kind(kind);
  if (!parsed) throw SchemaError(path + ".kind", "unknown change kind '" + kind + "'");
  s.kind = *parsed;
  s.t_start = number(field(j, "tStart", path), path + ".tStart");
  s.t_end = number(field(j, "tEnd", path), path + ".tEnd");
  s.before = state_value_from(field(j, "before", path), s.kind, path + ".before");
  s.after = state_value_from(field(j, "after", path), s.kind, path + ".after");
  const std::string tpath = path + ".trajectory";
  std::size_t i = 0;
  for (const auto& sample : array(field(j, "trajectory", path), tpath)) {
    const std::string p = at(tpath, i++);
    expect_keys(sample, {"t", "pose"}, p);
    s.trajectory.push_back({number(field(sample, "t", p), p + ".t"),
                            json_io::pose_from(field(sample, "pose", p), p + ".pose")});
  }
  s.cause_event_id = optional_string(j, "causeEventId", path);
  return s;
}

Keyframe keyframe_from(const json& j, const std::string& path) {
  expect_keys(j, {"t", "score", "sources", "anchors"}, path);
  Keyframe k;
  k.t = number(field(j, "t", path), path + ".t");
  k.score = number(field(j, "score", path), path + ".score");
  k.sources = strings_from(field(j, "sources", path), path + ".sources");
  const std::string apath = path + ".anchors";
  std::size_t i = 0;
  for (const auto& a : array(field(j, "anchors", path), apath)) {
    const std::string p = at(apath, i++);
    expect_keys(a, {"entityId", "pose"}, p);
    k.anchors.push_back({string(field(a, "entityId", p), p + ".entityId"),
                         json_io::pose_from(field(a, "pose", p), p + ".pose")});
  }
  return k;
}

template <typename T, typename F>
std::vector<T> list_from(const json& obj, const char* key, F&& read) {
  const std::string path = std::string("$.") + key;
  std::vector<T> out;
  std::size_t i = 0;
  for (const auto& item : array(field(obj, key, "$"), path)) {
    out.push_back(read(item, at(path, i++)));
  }
  return out;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text,
                                                std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t i = 0; i + 1 < end + 1 && i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// Parses JSON text; on failure appends a positioned parse error.
std::optional<json> parse_json(std::string_view text, std::vector<DecodeError>& errors,
                               std::size_t line_offset = 0) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, false);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points at the offending character.
    auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string message = e.what();
    if (auto pos = message.find("syntax error"); pos != std::string::npos) {
      message = message.substr(pos);
    }
    errors.push_back({DecodeErrorKind::parse, message, line + line_offset, column, {}});
  } catch (const std::exception& e) {
    errors.push_back({DecodeErrorKind::parse, e.what(), line_offset + 1, 1, {}});
  }
  return std::nullopt;
}

const char* const kDocumentKeys[] = {"maredVersion",      "header",
                                     "entities",          "segments",
                                     "interactionEvents", "stateChangeEvents"};
const char* const kKeyframedKeys[] = {"threshold", "keyframes"};

template <typename T>
bool check_version(const json& root, DecodeResult<T>& result) {
  const json* version = optional_field(root, "maredVersion");
  if (version == nullptr || !version->is_string()) return true;  // schema reports it
  const std::string found = version->get<std::string>();
  if (std::find(std::begin(kSupportedVersions), std::end(kSupportedVersions), found) !=
      std::end(kSupportedVersions)) {
    return true;
  }
  result.errors.push_back({DecodeErrorKind::version_mismatch,
                           "versionMismatch(supported " +
                               std::string(kSupportedVersions[0]) + ", found " + found +
                               ")",
                           0, 0, {}});
  return false;
}

MaredDocument document_from(const json& root, bool keyframed, const CodecOptions& options,
                            std::vector<DecodeError>& errors) {
  json_io::object(root, "$");
  MaredDocument doc;
  for (const auto& [key, value] : root.items()) {
    const bool known =
        std::any_of(std::begin(kDocumentKeys), std::end(kDocumentKeys),
                    [&](const char* k) { return key == k; }) ||
        (keyframed && std::any_of(std::begin(kKeyframedKeys), std::end(kKeyframedKeys),
                                  [&](const char* k) { return key == k; }));
    if (known) continue;
    if (options.strict) {
      errors.push_back({DecodeErrorKind::unknown_key,
                        "unknown top-level key '" + key + "'", 0, 0, {}});
    } else {
      doc.extensions.emplace(key, json_io::dump(value));
    }
  }
  if (!errors.empty()) return doc;

  doc.mared_version = string(field(root, "maredVersion", "$"), "$.maredVersion");
  const json& header = field(root, "header", "$");
  expect_keys(header, {"captureEpoch", "anchors"}, "$.header");
  doc.header.capture_epoch =
      string(field(header, "captureEpoch", "$.header"), "$.header.captureEpoch");
  doc.header.anchors =
      json_io::anchors_from(field(header, "anchors", "$.header"), "$.header.anchors");
  doc.entities = list_from<Entity>(root, "entities", entity_from);
  doc.segments = list_from<SemanticExperienceSegment>(root, "segments", segment_from);
  doc.interaction_events =
      list_from<InteractionEvent>(root, "interactionEvents", interaction_from);
  doc.state_change_events =
      list_from<StateChangeEvent>(root, "stateChangeEvents", state_change_from);
  return doc;
}

void add_violations(const std::vector<Violation>& violations,
                    std::vector<DecodeError>& errors) {
  for (const auto& v : violations) {
    errors.push_back({DecodeErrorKind::validation, describe(v), 0, 0, v});
  }
}

// Splits into lines, remembering each line's 1-based number.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t line = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view content = text.substr(start, end - start);
    if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
    if (content.find_first_not_of(" \t") != std::string_view::npos) {
      out.emplace_back(line, content);
    }
    start = end + 1;
    ++line;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Raw capture records

json raw_entity_json(const RawEntity& e) {
  json j = {{"id", e.id},
            {"pose", json_io::to_json(e.pose)},
            {"properties", properties_json(e.properties)},
            {"bbox", json_io::to_json(e.bbox)}};
  if (e.kind) j["kind"] = std::string(to_string(*e.kind));
  if (e.label) j["label"] = *e.label;
  if (e.significance) j["significance"] = *e.significance;
  if (e.hand) j["hand"] = json_io::to_json(*e.hand);
  if (e.attached_to) j["attachedTo"] = *e.attached_to;
  return j;
}

std::string_view phase_name(ActionPhase p) {
  switch (p) {
    case ActionPhase::begin: return "begin";
    case ActionPhase::update: return "update";
    case ActionPhase::end: return "end";
  }
  return "?";
}

json frame_json(const RawFrame& f) {
  json entities = json::array();
  for (const auto& e : f.entities) entities.push_back(raw_entity_json(e));
  json actions = json::array();
  for (const auto& a : f.actions) {
    json j = {{"actor", a.actor},
              {"verb", a.verb},
              {"phase", std::string(phase_name(a.phase))}};
    if (a.target) j["target"] = *a.target;
    if (a.payload) j["payload"] = *a.payload;
    actions.push_back(std::move(j));
  }
  json markers = json::array();
  for (const auto& m : f.markers) {
    markers.push_back(
        {{"kind", m.kind == MarkerKind::segment_start ? "segmentStart" : "segmentEnd"},
         {"label", m.label},
         {"participants", m.participants},
         {"keyObjects", m.key_objects}});
  }
  return {{"t", f.t},
          {"entities", std::move(entities)},
          {"actions", std::move(actions)},
          {"markers", std::move(markers)}};
}

RawFrame frame_from(const json& j, const std::string& path) {
  expect_keys(j, {"t", "entities", "actions", "markers"}, path);
  RawFrame f;
  f.t = number(field(j, "t", path), path + ".t");
  if (const json* es = optional_field(j, "entities")) {
    std::size_t i = 0;
    for (const auto& e : array(*es, path + ".entities")) {
      const std::string p = at(path + ".entities", i++);
      expect_keys(e, {"id", "pose", "properties", "bbox", "kind", "label",
                      "significance", "hand", "attachedTo"},
                  p);
      RawEntity r;
      r.id = string(field(e, "id", p), p + ".id");
      r.pose = json_io::pose_from(field(e, "pose", p), p + ".pose");
      if (const json* v = optional_field(e, "properties")) {
        r.properties = properties_from(*v, p + ".properties");
      }
      if (const json* v = optional_field(e, "bbox")) {
        r.bbox = json_io::vec3_from(*v, p + ".bbox");
      }
      if (const json* v = optional_field(e, "kind")) {
        const std::string kind = string(*v, p + ".kind");
        r.kind = parse_entity_kind(kind);
        if (!r.kind) throw SchemaError(p + ".kind", "unknown entity kind '" + kind + "'");
      }
      r.label = optional_string(e, "label", p);
      if (const json* v = optional_field(e, "significance")) {
        r.significance = number(*v, p + ".significance");
      }
      if (const json* v = optional_field(e, "hand")) {
        r.hand = json_io::vec3_from(*v, p + ".hand");
      }
      r.attached_to = optional_string(e, "attachedTo", p);
      f.entities.push_back(std::move(r));
    }
  }
  if (const json* as = optional_field(j, "actions")) {
    std::size_t i = 0;
    for (const auto& a : array(*as, path + ".actions")) {
      const std::string p = at(path + ".actions", i++);
      expect_keys(a, {"actor", "verb", "target", "phase", "payload"}, p);
      ActionAnnotation r;
      r.actor = string(field(a, "actor", p), p + ".actor");
      r.verb = string(field(a, "verb", p), p + ".verb");
      r.target = optional_string(a, "target", p);
      const std::string phase = string(field(a, "phase", p), p + ".phase");
      if (phase == "begin") {
        r.phase = ActionPhase::begin;
      } else if (phase == "update") {
        r.phase = ActionPhase::update;
      } else if (phase == "end") {
        r.phase = ActionPhase::end;
      } else {
        throw SchemaError(p + ".phase", "unknown phase '" + phase + "'");
      }
      r.payload = optional_string(a, "payload", p);
      f.actions.push_back(std::move(r));
    }
  }
  if (const json* ms = optional_field(j, "markers")) {
    std::size_t i = 0;
    for (const auto& m : array(*ms, path + ".markers")) {
      const std::string p = at(path + ".markers", i++);
      expect_keys(m, {"kind", "label", "participants", "keyObjects"}, p);
      SegmentMarker r;
      const std::string kind = string(field(m, "kind", p), p + ".kind");
      if (kind == "segmentStart") {
        r.kind = MarkerKind::segment_start;
      } else if (kind == "segmentEnd") {
        r.kind = MarkerKind::segment_end;
      } else {
        throw SchemaError(p + ".kind", "unknown marker kind '" + kind + "'");
      }
      r.label = string(field(m, "label", p), p + ".label");
      if (const json* v = optional_field(m, "participants")) {
        r.participants = strings_from(*v, p + ".participants");
      }
      if (const json* v = optional_field(m, "keyObjects")) {
        r.key_objects = strings_from(*v, p + ".keyObjects");
      }
      f.markers.push_back(std::move(r));
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Config

void read_number(const json& obj, const char* key, const std::string& path, double& out) {
  if (const json* v = optional_field(obj, key)) {
    const double d = number(*v, path + "." + key);
    if (d < 0.0 && std::string(key) != "onGapMin") {
      throw SchemaError(path + "." + key, "must be non-negative");
    }
    out = d;
  }
}

void read_bool(const json& obj, const char* key, const std::string& path, bool& out) {
  if (const json* v = optional_field(obj, key)) out = json_io::boolean(*v, path + "." + key);
}

ScoringWeights weights_from(const json& j, const std::string& path,
                            ScoringWeights w) {
  expect_keys(j, {"interaction", "stateChange", "verbTable", "nearDistance",
                  "fullDisplacement", "fullSpeed"},
              path);
  if (const json* i = optional_field(j, "interaction")) {
    const std::string p = path + ".interaction";
    expect_keys(*i, {"action", "object", "narrative", "social"}, p);
    read_number(*i, "action", p, w.interaction.action);
    read_number(*i, "object", p, w.interaction.object);
    read_number(*i, "narrative", p, w.interaction.narrative);
    read_number(*i, "social", p, w.interaction.social);
  }
  if (const json* s = optional_field(j, "stateChange")) {
    const std::string p = path + ".stateChange";
    expect_keys(*s, {"magnitude", "relation", "intrinsic"}, p);
    read_number(*s, "magnitude", p, w.state_change.magnitude);
    read_number(*s, "relation", p, w.state_change.relation);
    read_number(*s, "intrinsic", p, w.state_change.intrinsic);
  }
  if (const json* t = optional_field(j, "verbTable")) {
    const std::string p = path + ".verbTable";
    json_io::object(*t, p);
    for (const auto& [name, value] : t->items()) {
      const auto verb = parse_verb(name);
      if (!verb) throw SchemaError(p + "." + name, "unknown verb");
      w.verb_table[*verb] = number(value, p + "." + name);
    }
  }
  read_number(j, "nearDistance", path, w.near_distance);
  read_number(j, "fullDisplacement", path, w.full_displacement);
  read_number(j, "fullSpeed", path, w.full_speed);
  if (!(w.full_displacement > 0.0) || !(w.full_speed > 0.0)) {
    throw SchemaError(path, "saturation constants must be positive");
  }
  if (auto problems = check_weights(w); !problems.empty()) {
    throw SchemaError(path, problems.front());
  }
  return w;
}

template <typename T>
DecodeResult<T> schema_failure(const SchemaError& e) {
  DecodeResult<T> result;
  result.errors.push_back({DecodeErrorKind::schema, e.what(), 0, 0, {}});
  return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API

std::string encode(const MaredDocument& doc) {
  if (auto violations = validate_document(doc); !violations.empty()) refuse(violations);
  return json_io::dump(document_json(doc), 2) + "\n";
}

std::string encode(const KeyframedDocument& kdoc) {
  if (auto violations = validate_keyframed(kdoc); !violations.empty()) refuse(violations);
  json root = document_json(kdoc.document);
  root["threshold"] = kdoc.threshold;
  json keyframes = json::array();
  for (const auto& k : kdoc.keyframes) {
    json anchors = json::array();
    for (const auto& a : k.anchors) {
      anchors.push_back({{"entityId", a.entity_id}, {"pose", json_io::to_json(a.pose)}});
    }
    keyframes.push_back({{"t", k.t},
                         {"score", k.score},
                         {"sources", k.sources},
                         {"anchors", std::move(anchors)}});
  }
  root["keyframes"] = std::move(keyframes);
  return json_io::dump(root, 2) + "\n";
}

DecodeResult<MaredDocument> decode_document(std::string_view text,
                                            const CodecOptions& options) {
  DecodeResult<MaredDocument> result;
  auto root = parse_json(text, result.errors);
  if (!root) return result;
  if (!check_version(*root, result)) return result;
  try {
    MaredDocument doc = document_from(*root, false, options, result.errors);
    if (!result.errors.empty()) return result;
    add_violations(validate_document(doc), result.errors);
    if (result.errors.empty()) result.value = std::move(doc);
  } catch (const SchemaError& e) {
    return schema_failure<MaredDocument>(e);
  }
  return result;
}

DecodeResult<KeyframedDocument> decode_keyframed(std::string_view text,
                                                 const CodecOptions& options) {
  DecodeResult<KeyframedDocument> result;
  auto root = parse_json(text, result.errors);
  if (!root) return result;
  if (!check_version(*root, result)) return result;
  try {
    KeyframedDocument kdoc;
    kdoc.document = document_from(*root, true, options, result.errors);
    if (!result.errors.empty()) return result;
    kdoc.threshold = number(field(*root, "threshold", "$"), "$.threshold");
    kdoc.keyframes = list_from<Keyframe>(*root, "keyframes", keyframe_from);
    add_violations(validate_keyframed(kdoc), result.errors);
    if (result.errors.empty()) result.value = std::move(kdoc);
  } catch (const SchemaError& e) {
    return schema_failure<KeyframedDocument>(e);
  }
  return result;
}

std::string encode_raw_capture(const RawCapture& raw) {
  std::string out;
  if (!raw.header.capture_epoch.empty() || !raw.header.anchors.empty()) {
    json header = {{"header",
                    {{"captureEpoch", raw.header.capture_epoch},
                     {"anchors", json_io::to_json(raw.header.anchors)}}}};
    out += json_io::dump(header) + "\n";
  }
  for (const auto& f : raw.frames) out += json_io::dump(frame_json(f)) + "\n";
  return out;
}

DecodeResult<RawCapture> decode_raw_capture(std::string_view text) {
  DecodeResult<RawCapture> result;
  RawCapture raw;
  bool first = true;
  for (const auto& [line, content] : lines_of(text)) {
    auto record = parse_json(content, result.errors, line - 1);
    if (!record) return result;
    const std::string path = "line " + std::to_string(line);
    try {
      if (record->is_object() && record->contains("header")) {
        if (!first) throw SchemaError(path, "header must be the first record");
        expect_keys(*record, {"header"}, path);
        const json& h = (*record)["header"];
        expect_keys(h, {"captureEpoch", "anchors"}, path + ".header");
        if (const json* e = optional_field(h, "captureEpoch")) {
          raw.header.capture_epoch = string(*e, path + ".header.captureEpoch");
        }
        if (const json* a = optional_field(h, "anchors")) {
          raw.header.anchors = json_io::anchors_from(*a, path + ".header.anchors");
        }
      } else {
        raw.frames.push_back(frame_from(*record, path));
      }
    } catch (const SchemaError& e) {
      result.errors.push_back({DecodeErrorKind::schema, e.what(), line, 1, {}});
      return result;
    }
    first = false;
  }
  result.value = std::move(raw);
  return result;
}

std::string encode_trace(const std::vector<InteractionInput>& trace) {
  std::string out;
  for (const auto& input : trace) out += json_io::dump(json_io::to_json(input)) + "\n";
  return out;
}

DecodeResult<std::vector<InteractionInput>> decode_trace(std::string_view text) {
  DecodeResult<std::vector<InteractionInput>> result;
  std::vector<InteractionInput> trace;
  for (const auto& [line, content] : lines_of(text)) {
    auto record = parse_json(content, result.errors, line - 1);
    if (!record) return result;
    try {
      const std::string path = "line " + std::to_string(line);
      json_io::field(*record, "wallTime", path);
      trace.push_back(json_io::input_from(*record, path));
    } catch (const SchemaError& e) {
      result.errors.push_back({DecodeErrorKind::schema, e.what(), line, 1, {}});
      return result;
    }
  }
  result.value = std::move(trace);
  return result;
}

std::string encode_event(const SessionEvent& event) {
  return json_io::dump(json_io::to_json(event));
}

std::string encode_log(const std::vector<SessionEvent>& log) {
  std::string out;
  for (const auto& e : log) out += encode_event(e) + "\n";
  return out;
}

DecodeResult<ScoringWeights> decode_weights(std::string_view text) {
  DecodeResult<ScoringWeights> result;
  auto root = parse_json(text, result.errors);
  if (!root) return result;
  try {
    result.value = weights_from(*root, "$", ScoringWeights{});
  } catch (const SchemaError& e) {
    return schema_failure<ScoringWeights>(e);
  }
  return result;
}

DecodeResult<PipelineConfig> decode_config(std::string_view text,
                                           const PipelineConfig& defaults) {
  DecodeResult<PipelineConfig> result;
  auto root = parse_json(text, result.errors);
  if (!root) return result;
  try {
    PipelineConfig config = defaults;
    expect_keys(*root, {"logger", "weights", "playback"}, "$");
    if (const json* l = optional_field(*root, "logger")) {
      const std::string p = "$.logger";
      expect_keys(*l, {"segmentGap", "minDisplacement", "minRotationDeg",
                       "minSegmentDuration", "strictActions", "relations"},
                  p);
      LoggerConfig& c = config.logger;
      read_number(*l, "segmentGap", p, c.segment_gap);
      read_number(*l, "minDisplacement", p, c.min_displacement);
      read_number(*l, "minRotationDeg", p, c.min_rotation_deg);
      read_number(*l, "minSegmentDuration", p, c.min_segment_duration);
      read_bool(*l, "strictActions", p, c.strict_actions);
      if (const json* r = optional_field(*l, "relations")) {
        const std::string rp = p + ".relations";
        expect_keys(*r, {"onGapMin", "onGapMax", "onMinOverlap", "nearDistance",
                         "heldDistance"},
                    rp);
        read_number(*r, "onGapMin", rp, c.relations.on_gap_min);
        read_number(*r, "onGapMax", rp, c.relations.on_gap_max);
        read_number(*r, "onMinOverlap", rp, c.relations.on_min_overlap);
        read_number(*r, "nearDistance", rp, c.relations.near_distance);
        read_number(*r, "heldDistance", rp, c.relations.held_distance);
      }
    }
    if (const json* w = optional_field(*root, "weights")) {
      config.weights = weights_from(*w, "$.weights", config.weights);
    }
    if (const json* pb = optional_field(*root, "playback")) {
      const std::string p = "$.playback";
      expect_keys(*pb, {"baseRate", "postBranchSlowdown", "resumePolicy", "branchGrace",
                        "allowScale"},
                  p);
      PlaybackConfig& c = config.playback;
      read_number(*pb, "baseRate", p, c.base_rate);
      read_number(*pb, "postBranchSlowdown", p, c.post_branch_slowdown);
      read_number(*pb, "branchGrace", p, c.branch_grace);
      read_bool(*pb, "allowScale", p, c.allow_scale);
      if (const json* r = optional_field(*pb, "resumePolicy")) {
        const std::string name = string(*r, p + ".resumePolicy");
        const auto policy = parse_resume_policy(name);
        if (!policy) throw SchemaError(p + ".resumePolicy", "unknown policy '" + name + "'");
        c.resume_policy = *policy;
      }
    }
    result.value = std::move(config);
  } catch (const SchemaError& e) {
    return schema_failure<PipelineConfig>(e);
  }
  return result;
}

}  // namespace mared
