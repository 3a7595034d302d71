#include "mared/validation.hpp"

#include <cmath>
#include <set>
#include <unordered_set>

namespace mared {

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::dangling_reference: return "danglingReference";
    case Rule::duplicate_id: return "duplicateId";
    case Rule::empty_span: return "emptySpan";
    case Rule::invalid_span: return "invalidSpan";
    case Rule::invalid_timestamp: return "invalidTimestamp";
    case Rule::unsorted_segments: return "unsortedSegments";
    case Rule::overlapping_segments: return "overlappingSegments";
    case Rule::event_outside_segment: return "eventOutsideSegment";
    case Rule::actor_not_user: return "actorNotUser";
    case Rule::self_relation: return "selfRelation";
    case Rule::out_of_range: return "outOfRange";
    case Rule::non_finite: return "nonFinite";
    case Rule::non_unit_quaternion: return "nonUnitQuaternion";
    case Rule::kind_mismatch: return "kindMismatch";
    case Rule::unchanged_state: return "unchangedState";
    case Rule::trajectory_order: return "trajectoryOrder";
    case Rule::unsupported_version: return "unsupportedVersion";
    case Rule::unsorted_keyframes: return "unsortedKeyframes";
    case Rule::empty_sources: return "emptySources";
  }
  return "unknown";
}

std::string describe(const Violation& v) {
  std::string out(to_string(v.rule));
  out += "(" + v.id + ") at " + v.field;
  if (!v.message.empty()) out += ": " + v.message;
  return out;
}

namespace {

class Checker {
 public:
  explicit Checker(const MaredDocument& doc) : doc_(doc) {
    for (const auto& e : doc.entities) entity_ids_.insert(e.id);
    for (const auto& e : doc.interaction_events) interaction_ids_.insert(e.id);
  }

  std::vector<Violation> take() { return std::move(out_); }

  void add(Rule rule, std::string field, std::string id,
           std::string message = {}) {
    out_.push_back({rule, std::move(field), std::move(id), std::move(message)});
  }

  void check_all() {
    if (doc_.mared_version != kMaredVersion) {
      add(Rule::unsupported_version, "maredVersion", doc_.mared_version,
          "supported " + std::string(kMaredVersion));
    }
    check_anchors();
    check_entities();
    check_segments();
    check_interactions();
    check_state_changes();
  }

  void check_pose(const Pose& p, const std::string& field,
                  const std::string& id) {
    if (!is_finite(p)) {
      add(Rule::non_finite, field, id, "pose has non-finite component");
      return;
    }
    if (std::abs(norm(p.orientation) - 1.0) > kUnitQuaternionTolerance) {
      add(Rule::non_unit_quaternion, field, id);
    }
  }

  void check_time(double t, const std::string& field, const std::string& id) {
    if (!std::isfinite(t) || t < 0.0) {
      add(Rule::invalid_timestamp, field, id);
    }
  }

  void check_ref(const std::string& ref, const std::string& field) {
    if (!entity_ids_.contains(ref)) add(Rule::dangling_reference, field, ref);
  }

  void check_relations(const RelationSet& relations, const std::string& field,
                       const std::string& owner) {
    for (const auto& r : relations) {
      check_ref(r.subject, field + ".subject");
      check_ref(r.object, field + ".object");
      if (r.subject == r.object) add(Rule::self_relation, field, owner);
    }
  }

  void check_properties(const PropertyMap& props, const std::string& field,
                        const std::string& owner) {
    for (const auto& [key, value] : props) {
      if (const double* d = std::get_if<double>(&value);
          d != nullptr && !std::isfinite(*d)) {
        add(Rule::non_finite, field + "." + key, owner);
      }
    }
  }

  void check_unique(const std::string& id, const std::string& field,
                    std::unordered_set<std::string>& seen) {
    if (!seen.insert(id).second) add(Rule::duplicate_id, field, id);
  }

 private:
  void check_anchors() {
    std::unordered_set<std::string> seen;
    for (const auto& a : doc_.header.anchors) {
      check_unique(a.id, "header.anchors.id", seen);
      check_pose(a.pose, "header.anchors.pose", a.id);
    }
  }

  void check_entities() {
    std::unordered_set<std::string> seen;
    for (const auto& e : doc_.entities) {
      check_unique(e.id, "entities.id", seen);
      if (!(e.significance >= 0.0 && e.significance <= 1.0)) {
        add(Rule::out_of_range, "entities.significance", e.id,
            "significance must lie in [0,1]");
      }
      if (!is_finite(e.bbox) || !(e.bbox.x > 0.0 && e.bbox.y > 0.0 &&
                                  e.bbox.z > 0.0)) {
        add(Rule::out_of_range, "entities.bbox", e.id,
            "extents must be positive");
      }
      check_pose(e.pose, "entities.pose", e.id);
      check_properties(e.properties, "entities.properties", e.id);
    }
  }

  void check_segments() {
    std::unordered_set<std::string> seen;
    const SemanticExperienceSegment* prev = nullptr;
    for (const auto& s : doc_.segments) {
      check_unique(s.id, "segments.id", seen);
      check_time(s.t_start, "segments.tStart", s.id);
      check_time(s.t_end, "segments.tEnd", s.id);
      if (s.t_start == s.t_end) {
        add(Rule::empty_span, "segments.tEnd", s.id);
      } else if (!(s.t_start < s.t_end)) {
        add(Rule::invalid_span, "segments.tEnd", s.id);
      }
      for (const auto& p : s.participants) check_ref(p, "segments.participants");
      for (const auto& k : s.key_objects) check_ref(k, "segments.keyObjects");
      if (prev != nullptr) {
        if (s.t_start < prev->t_start) {
          add(Rule::unsorted_segments, "segments.tStart", s.id);
        } else if (s.t_start < prev->t_end) {
          add(Rule::overlapping_segments, "segments.tStart", s.id,
              "overlaps " + prev->id);
        }
      }
      prev = &s;
    }
  }

  void check_interactions() {
    std::unordered_set<std::string> seen;
    for (const auto& e : doc_.interaction_events) {
      check_unique(e.id, "interactionEvents.id", seen);
      check_time(e.t_start, "interactionEvents.tStart", e.id);
      check_time(e.t_end, "interactionEvents.tEnd", e.id);
      if (!(e.t_start <= e.t_end)) {
        add(Rule::invalid_span, "interactionEvents.tEnd", e.id);
      }
      const Entity* actor = find_entity(doc_, e.actor);
      if (actor == nullptr) {
        add(Rule::dangling_reference, "interactionEvents.actor", e.actor);
      } else if (actor->kind != EntityKind::user) {
        add(Rule::actor_not_user, "interactionEvents.actor", e.id);
      }
      if (e.target) check_ref(*e.target, "interactionEvents.target");
      const SemanticExperienceSegment* seg = find_segment(doc_, e.segment_id);
      if (seg == nullptr) {
        add(Rule::dangling_reference, "interactionEvents.segmentId",
            e.segment_id);
      } else if (e.t_start < seg->t_start || e.t_end > seg->t_end) {
        add(Rule::event_outside_segment, "interactionEvents.tStart", e.id,
            "not within " + seg->id);
      }
      check_relations(e.pre_state.relations, "interactionEvents.preState",
                      e.id);
      check_relations(e.post_state.relations, "interactionEvents.postState",
                      e.id);
      check_properties(e.pre_state.properties, "interactionEvents.preState",
                       e.id);
      check_properties(e.post_state.properties, "interactionEvents.postState",
                       e.id);
    }
  }

  void check_state_changes() {
    std::unordered_set<std::string> seen(interaction_ids_.begin(),
                                         interaction_ids_.end());
    for (const auto& s : doc_.state_change_events) {
      check_unique(s.id, "stateChangeEvents.id", seen);
      check_ref(s.subject, "stateChangeEvents.subject");
      check_time(s.t_start, "stateChangeEvents.tStart", s.id);
      check_time(s.t_end, "stateChangeEvents.tEnd", s.id);
      if (!(s.t_start <= s.t_end)) {
        add(Rule::invalid_span, "stateChangeEvents.tEnd", s.id);
      }
      const std::size_t expected = static_cast<std::size_t>(s.kind);
      if (s.before.index() != expected || s.after.index() != expected) {
        add(Rule::kind_mismatch, "stateChangeEvents.before", s.id);
      } else if (s.before == s.after) {
        add(Rule::unchanged_state, "stateChangeEvents.after", s.id);
      } else if (s.kind == ChangeKind::pose) {
        check_pose(std::get<Pose>(s.before), "stateChangeEvents.before", s.id);
        check_pose(std::get<Pose>(s.after), "stateChangeEvents.after", s.id);
      } else if (s.kind == ChangeKind::relation) {
        check_relations(std::get<RelationSet>(s.before),
                        "stateChangeEvents.before", s.id);
        check_relations(std::get<RelationSet>(s.after),
                        "stateChangeEvents.after", s.id);
      } else {
        check_properties(std::get<PropertyMap>(s.before),
                         "stateChangeEvents.before", s.id);
        check_properties(std::get<PropertyMap>(s.after),
                         "stateChangeEvents.after", s.id);
      }
      double last = -INFINITY;
      for (const auto& sample : s.trajectory) {
        if (!(sample.t > last) || sample.t < s.t_start || sample.t > s.t_end) {
          add(Rule::trajectory_order, "stateChangeEvents.trajectory", s.id);
          break;
        }
        last = sample.t;
        check_pose(sample.pose, "stateChangeEvents.trajectory", s.id);
      }
      if (s.cause_event_id && !interaction_ids_.contains(*s.cause_event_id)) {
        add(Rule::dangling_reference, "stateChangeEvents.causeEventId",
            *s.cause_event_id);
      }
    }
  }

  const MaredDocument& doc_;
  std::unordered_set<std::string> entity_ids_;
  std::unordered_set<std::string> interaction_ids_;
  std::vector<Violation> out_;
};

}  // namespace

std::vector<Violation> validate_document(const MaredDocument& doc) {
  Checker checker(doc);
  checker.check_all();
  return checker.take();
}

std::vector<Violation> validate_keyframed(const KeyframedDocument& kdoc) {
  Checker checker(kdoc.document);
  checker.check_all();

  if (!(kdoc.threshold >= 0.0 && kdoc.threshold <= 1.0)) {
    checker.add(Rule::out_of_range, "threshold", "threshold",
                "threshold must lie in [0,1]");
  }
  std::set<std::string> sources;
  for (const auto& e : kdoc.document.interaction_events) sources.insert(e.id);
  for (const auto& s : kdoc.document.state_change_events) sources.insert(s.id);

  double last = -INFINITY;
  for (const auto& k : kdoc.keyframes) {
    const std::string id = "keyframe@" + std::to_string(k.t);
    checker.check_time(k.t, "keyframes.t", id);
    if (!(k.t > last)) checker.add(Rule::unsorted_keyframes, "keyframes.t", id);
    last = k.t;
    if (!(k.score >= 0.0 && k.score <= 1.0)) {
      checker.add(Rule::out_of_range, "keyframes.score", id);
    }
    if (k.sources.empty()) checker.add(Rule::empty_sources, "keyframes.sources", id);
    for (const auto& src : k.sources) {
      if (!sources.contains(src)) {
        checker.add(Rule::dangling_reference, "keyframes.sources", src);
      }
    }
    for (const auto& a : k.anchors) {
      checker.check_ref(a.entity_id, "keyframes.anchors.entityId");
      checker.check_pose(a.pose, "keyframes.anchors.pose", a.entity_id);
    }
  }
  return checker.take();
}

}  // namespace mared
