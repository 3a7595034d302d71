#include "mared/semantic_logger.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <tuple>

#include "mared/error.hpp"
#include "mared/validation.hpp"

namespace mared {

namespace {

constexpr double kThresholdSlack = 1e-9;

struct MatchedAction {
  std::string actor;
  Verb verb = Verb::gesture;
  std::optional<std::string> target;
  std::size_t begin_frame = 0;
  std::size_t end_frame = 0;
  std::optional<std::string> payload;
  std::size_t order = 0;
};

struct SceneFrame {
  Seconds t = 0.0;
  std::map<std::string, EntityState> states;
  std::map<std::string, PropertyMap> properties;
  RelationSet relations;
};

// Per-frame view of the capture with carried-forward entity state,
// matched action phases and the relations holding in each frame.
struct Scene {
  std::vector<std::string> entity_order;
  std::map<std::string, Entity> entities;
  std::vector<SceneFrame> frames;
  std::vector<MatchedAction> actions;
  std::vector<std::string> warnings;
};

using ActionKey = std::tuple<std::string, Verb, std::optional<std::string>>;

struct OpenAction {
  std::size_t frame = 0;
  std::optional<std::string> payload;
  std::size_t order = 0;
};

std::string describe_key(const ActionKey& key) {
  const auto& [actor, verb, target] = key;
  return std::string(to_string(verb)) + "(" + actor +
         (target ? " -> " + *target : std::string()) + ")";
}

void check_frame_entity(const RawEntity& e, Seconds t) {
  const std::string where = "entity '" + e.id + "' at t=" + std::to_string(t);
  if (e.id.empty()) throw Error(ErrorCode::rejected_input, "empty entity id");
  if (!is_finite(e.pose) || !is_finite(e.bbox) || (e.hand && !is_finite(*e.hand))) {
    throw Error(ErrorCode::rejected_input, "non-finite pose for " + where);
  }
  if (std::abs(norm(e.pose.orientation) - 1.0) > kUnitQuaternionTolerance) {
    throw Error(ErrorCode::rejected_input, "non-unit quaternion for " + where);
  }
}

Scene build_scene(const RawCapture& raw, const LoggerConfig& config) {
  if (raw.frames.empty()) {
    throw Error(ErrorCode::rejected_input, "raw capture has no frames");
  }
  for (std::size_t i = 0; i < raw.frames.size(); ++i) {
    const Seconds t = raw.frames[i].t;
    if (!std::isfinite(t) || t < 0.0) {
      throw Error(ErrorCode::rejected_input,
                  "invalid frame timestamp at frame " + std::to_string(i));
    }
    if (i > 0 && !(t > raw.frames[i - 1].t)) {
      throw Error(ErrorCode::rejected_input,
                  "frame timestamps not strictly increasing at frame " +
                      std::to_string(i));
    }
  }

  std::set<std::string> actors;
  for (const auto& f : raw.frames) {
    for (const auto& a : f.actions) actors.insert(a.actor);
  }

  Scene scene;
  std::map<std::string, RawEntity> current;
  std::map<ActionKey, OpenAction> open;
  std::set<std::pair<std::string, std::string>> grasps;
  std::size_t order = 0;

  for (std::size_t fi = 0; fi < raw.frames.size(); ++fi) {
    const RawFrame& frame = raw.frames[fi];

    std::set<std::string> seen;
    for (const auto& e : frame.entities) {
      check_frame_entity(e, frame.t);
      if (!seen.insert(e.id).second) {
        throw Error(ErrorCode::rejected_input,
                    "duplicate entity '" + e.id + "' in frame at t=" +
                        std::to_string(frame.t));
      }
      if (!scene.entities.contains(e.id)) {
        Entity entity;
        entity.id = e.id;
        entity.kind = e.kind.value_or(actors.contains(e.id) ? EntityKind::user
                                                            : EntityKind::object);
        entity.label = e.label.value_or(e.id);
        entity.significance = e.significance.value_or(0.5);
        entity.bbox = e.bbox;
        entity.properties = e.properties;
        entity.pose = e.pose;
        scene.entities.emplace(e.id, std::move(entity));
        scene.entity_order.push_back(e.id);
      }
      current[e.id] = e;
    }

    for (const auto& a : frame.actions) {
      if (!current.contains(a.actor)) {
        throw Error(ErrorCode::rejected_input,
                    "action actor '" + a.actor + "' is not a known entity");
      }
      if (scene.entities.at(a.actor).kind != EntityKind::user) {
        throw Error(ErrorCode::rejected_input,
                    "action actor '" + a.actor + "' is not a user");
      }
      if (a.target && !current.contains(*a.target)) {
        throw Error(ErrorCode::rejected_input,
                    "action target '" + *a.target + "' is not a known entity");
      }
      std::optional<Verb> verb = parse_verb(a.verb);
      if (!verb) {
        if (a.phase == ActionPhase::begin) {
          scene.warnings.push_back("unknown verb '" + a.verb +
                                   "' mapped to gesture at t=" +
                                   std::to_string(frame.t));
        }
        verb = Verb::gesture;
      }
      const ActionKey key{a.actor, *verb, a.target};

      switch (a.phase) {
        case ActionPhase::begin: {
          if (open.contains(key)) {
            throw Error(ErrorCode::rejected_input,
                        "second begin for open action " + describe_key(key));
          }
          open.emplace(key, OpenAction{fi, a.payload, order++});
          break;
        }
        case ActionPhase::update: {
          auto it = open.find(key);
          if (it == open.end()) {
            scene.warnings.push_back("update without begin for " +
                                     describe_key(key) + " ignored");
          } else if (a.payload) {
            it->second.payload = a.payload;
          }
          break;
        }
        case ActionPhase::end: {
          auto it = open.find(key);
          if (it == open.end()) {
            if (config.strict_actions) {
              throw Error(ErrorCode::rejected_input,
                          "end without begin for " + describe_key(key));
            }
            scene.warnings.push_back("end without begin for " +
                                     describe_key(key) + " dropped");
            break;
          }
          MatchedAction m;
          m.actor = a.actor;
          m.verb = *verb;
          m.target = a.target;
          m.begin_frame = it->second.frame;
          m.end_frame = fi;
          m.payload = a.payload ? a.payload : it->second.payload;
          m.order = it->second.order;
          open.erase(it);

          if (m.target) {
            if (m.verb == Verb::grasp) {
              grasps.insert({m.actor, *m.target});
            } else if (m.verb == Verb::release || m.verb == Verb::place ||
                       m.verb == Verb::give) {
              grasps.erase({m.actor, *m.target});
            }
          }
          scene.actions.push_back(std::move(m));
          break;
        }
      }
    }

    RelationContext context;
    context.active_grasps = grasps;
    context.thresholds = config.relations;

    SceneFrame sf;
    sf.t = frame.t;
    std::vector<EntityState> states;
    for (const auto& id : scene.entity_order) {
      const RawEntity& e = current.at(id);
      EntityState s{id, scene.entities.at(id).kind, e.pose, e.bbox, e.hand};
      if (e.attached_to) context.attachments.insert({id, *e.attached_to});
      sf.states.emplace(id, s);
      sf.properties.emplace(id, e.properties);
      states.push_back(std::move(s));
    }
    sf.relations = relate_scene(states, context);
    scene.frames.push_back(std::move(sf));
  }

  for (const auto& [key, action] : open) {
    if (config.strict_actions) {
      throw Error(ErrorCode::truncated_action,
                  "unmatched begin for " + describe_key(key) + " at t=" +
                      std::to_string(raw.frames[action.frame].t));
    }
    scene.warnings.push_back("unmatched begin for " + describe_key(key) +
                             " dropped at end of stream");
  }
  return scene;
}

ObjectSnapshot snapshot(const SceneFrame& frame,
                        const std::optional<std::string>& target) {
  if (!target) return {};
  ObjectSnapshot s;
  s.relations = relations_involving(frame.relations, *target);
  if (auto it = frame.properties.find(*target); it != frame.properties.end()) {
    s.properties = it->second;
  }
  return s;
}

std::vector<InteractionEvent> build_interactions(const Scene& scene) {
  std::vector<const MatchedAction*> sorted;
  for (const auto& a : scene.actions) sorted.push_back(&a);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return std::tie(a->begin_frame, a->end_frame, a->order) <
           std::tie(b->begin_frame, b->end_frame, b->order);
  });

  std::vector<InteractionEvent> out;
  for (const MatchedAction* a : sorted) {
    InteractionEvent e;
    e.id = "ie-" + std::to_string(out.size() + 1);
    e.actor = a->actor;
    e.verb = a->verb;
    e.target = a->target;
    e.t_start = scene.frames[a->begin_frame].t;
    e.t_end = scene.frames[a->end_frame].t;
    e.pre_state = snapshot(scene.frames[a->begin_frame], a->target);
    e.post_state = snapshot(scene.frames[a->end_frame], a->target);
    e.payload = a->payload;
    out.push_back(std::move(e));
  }
  return out;
}

std::optional<std::string> attribute_cause(
    const StateChangeEvent& s, const std::vector<InteractionEvent>& events) {
  std::vector<const InteractionEvent*> overlapping;
  std::vector<const InteractionEvent*> involving;
  for (const auto& e : events) {
    if (e.t_start > s.t_end || s.t_start > e.t_end) continue;
    overlapping.push_back(&e);
    if (e.actor == s.subject || e.target == s.subject) involving.push_back(&e);
  }
  if (involving.size() == 1) return involving.front()->id;
  if (involving.empty() && overlapping.size() == 1) return overlapping.front()->id;
  return std::nullopt;
}

RelationSet relations_as_subject(const RelationSet& all, const std::string& id) {
  RelationSet out;
  for (const auto& r : all) {
    if (r.subject == id) out.insert(r);
  }
  return out;
}

std::vector<StateChangeEvent> detect_in_scene(
    const Scene& scene, const std::vector<InteractionEvent>& events,
    const LoggerConfig& config) {
  const double min_rotation =
      config.min_rotation_deg * std::numbers::pi / 180.0;
  std::vector<StateChangeEvent> out;

  for (const auto& id : scene.entity_order) {
    std::size_t first = 0;
    while (!scene.frames[first].states.contains(id)) ++first;

    std::optional<std::size_t> run_start;
    auto close_run = [&](std::size_t run_end) {
      const std::size_t a = *run_start;
      run_start.reset();
      StateChangeEvent s;
      s.subject = id;
      s.kind = ChangeKind::pose;
      s.t_start = scene.frames[a].t;
      s.t_end = scene.frames[run_end].t;
      s.before = scene.frames[a].states.at(id).pose;
      s.after = scene.frames[run_end].states.at(id).pose;
      if (s.before == s.after) return;
      for (std::size_t k = a; k <= run_end; ++k) {
        s.trajectory.push_back({scene.frames[k].t, scene.frames[k].states.at(id).pose});
      }
      out.push_back(std::move(s));
    };

    for (std::size_t i = first + 1; i < scene.frames.size(); ++i) {
      const SceneFrame& prev = scene.frames[i - 1];
      const SceneFrame& cur = scene.frames[i];
      const Pose& p0 = prev.states.at(id).pose;
      const Pose& p1 = cur.states.at(id).pose;

      const bool jump =
          distance(p0.position, p1.position) >=
              config.min_displacement - kThresholdSlack ||
          angle_between(p0.orientation, p1.orientation) >=
              min_rotation - kThresholdSlack;
      if (jump && !run_start) run_start = i - 1;
      if (!jump && run_start) close_run(i - 1);

      const RelationSet r0 = relations_as_subject(prev.relations, id);
      const RelationSet r1 = relations_as_subject(cur.relations, id);
      if (r0 != r1) {
        StateChangeEvent s;
        s.subject = id;
        s.kind = ChangeKind::relation;
        s.t_start = prev.t;
        s.t_end = cur.t;
        s.before = r0;
        s.after = r1;
        out.push_back(std::move(s));
      }

      const PropertyMap& m0 = prev.properties.at(id);
      const PropertyMap& m1 = cur.properties.at(id);
      if (m0 != m1) {
        PropertyMap before;
        PropertyMap after;
        for (const auto& [k, v] : m0) {
          auto it = m1.find(k);
          if (it == m1.end() || it->second != v) before.emplace(k, v);
        }
        for (const auto& [k, v] : m1) {
          auto it = m0.find(k);
          if (it == m0.end() || it->second != v) after.emplace(k, v);
        }
        StateChangeEvent s;
        s.subject = id;
        s.kind = ChangeKind::intrinsic;
        s.t_start = prev.t;
        s.t_end = cur.t;
        s.before = std::move(before);
        s.after = std::move(after);
        out.push_back(std::move(s));
      }
    }
    if (run_start) close_run(scene.frames.size() - 1);
  }

  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.t_start, a.t_end, a.subject, a.kind) <
           std::tie(b.t_start, b.t_end, b.subject, b.kind);
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].id = "sc-" + std::to_string(i + 1);
    out[i].cause_event_id = attribute_cause(out[i], events);
  }
  return out;
}

void add_unique(std::vector<std::string>& list, const std::string& id) {
  if (std::find(list.begin(), list.end(), id) == list.end()) list.push_back(id);
}

std::vector<SemanticExperienceSegment> segments_from_markers(
    const std::vector<TimedMarker>& markers) {
  std::vector<const TimedMarker*> sorted;
  for (const auto& m : markers) sorted.push_back(&m);
  // Within one instant, closing a segment precedes opening the next.
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    if (a->t != b->t) return a->t < b->t;
    return a->marker.kind == MarkerKind::segment_end &&
           b->marker.kind == MarkerKind::segment_start;
  });

  std::vector<SemanticExperienceSegment> out;
  std::optional<SemanticExperienceSegment> open;
  for (const TimedMarker* m : sorted) {
    if (m->marker.kind == MarkerKind::segment_start) {
      if (open) {
        throw Error(ErrorCode::malformed_markers,
                    "segment '" + m->marker.label + "' starts at t=" +
                        std::to_string(m->t) + " while '" + open->label +
                        "' is open");
      }
      open = SemanticExperienceSegment{};
      open->label = m->marker.label;
      open->t_start = m->t;
      open->participants = m->marker.participants;
      open->key_objects = m->marker.key_objects;
      continue;
    }
    if (!open || open->label != m->marker.label) {
      throw Error(ErrorCode::malformed_markers,
                  "segment end '" + m->marker.label + "' at t=" +
                      std::to_string(m->t) + " has no matching start");
    }
    if (!(m->t > open->t_start)) {
      throw Error(ErrorCode::malformed_markers,
                  "segment '" + open->label + "' has an empty span");
    }
    open->t_end = m->t;
    open->id = "seg-" + std::to_string(out.size() + 1);
    out.push_back(std::move(*open));
    open.reset();
  }
  if (open) {
    throw Error(ErrorCode::malformed_markers,
                "segment '" + open->label + "' is never closed");
  }
  return out;
}

}  // namespace

std::vector<SemanticExperienceSegment> build_segments(
    std::vector<EventSpan> events, const std::vector<TimedMarker>& markers,
    const LoggerConfig& config, std::pair<Seconds, Seconds> capture_span) {
  if (!markers.empty()) return segments_from_markers(markers);

  std::vector<SemanticExperienceSegment> out;
  if (events.empty()) {
    SemanticExperienceSegment s;
    s.id = "seg-1";
    s.label = "capture";
    s.t_start = capture_span.first;
    s.t_end = std::max(capture_span.second,
                       capture_span.first + config.min_segment_duration);
    out.push_back(std::move(s));
    return out;
  }

  std::stable_sort(events.begin(), events.end(),
                   [](const auto& a, const auto& b) { return a.t_start < b.t_start; });

  SemanticExperienceSegment current;
  bool have = false;
  auto flush = [&] {
    if (!have) return;
    current.id = "seg-" + std::to_string(out.size() + 1);
    current.label = "cluster-" + std::to_string(out.size() + 1);
    out.push_back(current);
    current = {};
    have = false;
  };

  for (const auto& e : events) {
    if (have && e.t_start - current.t_end > config.segment_gap) flush();
    if (!have) {
      current.t_start = e.t_start;
      current.t_end = e.t_end;
      have = true;
    }
    current.t_end = std::max(current.t_end, e.t_end);
    if (e.actor) add_unique(current.participants, *e.actor);
    if (e.target) add_unique(current.key_objects, *e.target);
  }
  flush();

  // Instantaneous clusters get a minimal width, never reaching the next one.
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].t_end > out[i].t_start) continue;
    double width = config.min_segment_duration;
    if (i + 1 < out.size()) {
      width = std::min(width, (out[i + 1].t_start - out[i].t_end) / 2.0);
    }
    out[i].t_end = out[i].t_start + width;
  }
  for (auto& s : out) {
    std::sort(s.participants.begin(), s.participants.end());
    std::sort(s.key_objects.begin(), s.key_objects.end());
  }
  return out;
}

std::vector<StateChangeEvent> detect_state_changes(
    const RawCapture& raw, const std::vector<InteractionEvent>& events,
    const LoggerConfig& config) {
  return detect_in_scene(build_scene(raw, config), events, config);
}

IngestResult ingest(const RawCapture& raw, const LoggerConfig& config) {
  Scene scene = build_scene(raw, config);

  IngestResult result;
  result.warnings = std::move(scene.warnings);
  MaredDocument& doc = result.document;
  doc.header = raw.header;
  for (const auto& id : scene.entity_order) {
    doc.entities.push_back(scene.entities.at(id));
  }

  doc.interaction_events = build_interactions(scene);
  doc.state_change_events = detect_in_scene(scene, doc.interaction_events, config);

  std::vector<EventSpan> spans;
  for (const auto& e : doc.interaction_events) {
    spans.push_back({e.t_start, e.t_end, e.actor, e.target});
  }
  for (const auto& s : doc.state_change_events) {
    spans.push_back({s.t_start, s.t_end, std::nullopt, std::nullopt});
  }
  std::vector<TimedMarker> markers;
  for (const auto& f : raw.frames) {
    for (const auto& m : f.markers) markers.push_back({f.t, m});
  }
  doc.segments = build_segments(std::move(spans), markers, config,
                                {raw.frames.front().t, raw.frames.back().t});

  for (auto& e : doc.interaction_events) {
    auto it = std::find_if(doc.segments.begin(), doc.segments.end(),
                           [&](const auto& s) {
                             return s.t_start <= e.t_start && e.t_end <= s.t_end;
                           });
    if (it == doc.segments.end()) {
      throw Error(ErrorCode::uncovered_event,
                  "interaction " + e.id + " [" + std::to_string(e.t_start) +
                      ", " + std::to_string(e.t_end) +
                      "] lies outside every marked segment");
    }
    e.segment_id = it->id;
  }

  if (auto violations = validate_document(doc); !violations.empty()) {
    std::string message = "capture yields an invalid document:";
    for (const auto& v : violations) message += " " + describe(v) + ";";
    throw Error(ErrorCode::rejected_input, message);
  }
  return result;
}

}  // namespace mared
