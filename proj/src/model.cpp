#include "mared/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "mared/error.hpp"

namespace mared {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::rejected_input: return "rejectedInput";
    case ErrorCode::truncated_action: return "truncatedAction";
    case ErrorCode::malformed_markers: return "malformedMarkers";
    case ErrorCode::uncovered_event: return "uncoveredEvent";
    case ErrorCode::scoring_error: return "scoringError";
    case ErrorCode::invalid_document: return "invalidDocument";
    case ErrorCode::parse_error: return "parseError";
    case ErrorCode::version_mismatch: return "versionMismatch";
    case ErrorCode::nothing_to_play: return "nothingToPlay";
    case ErrorCode::monotonicity: return "monotonicity";
    case ErrorCode::nested_branch_rejected: return "nestedBranchRejected";
    case ErrorCode::no_branch_open: return "noBranchOpen";
    case ErrorCode::insufficient_anchors: return "insufficientAnchors";
    case ErrorCode::session_still_active: return "sessionStillActive";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }

double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

double norm(const Quat& q) {
  return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
}

bool is_finite(const Quat& q) {
  return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) &&
         std::isfinite(q.z);
}

Quat quat_from_axis_angle(const Vec3& axis, double radians) {
  const double n = norm(axis);
  const double s = std::sin(radians / 2.0) / n;
  return {std::cos(radians / 2.0), axis.x * s, axis.y * s, axis.z * s};
}

Vec3 rotate(const Quat& q, const Vec3& v) {
  const Quat p{0.0, v.x, v.y, v.z};
  const Quat conj{q.w, -q.x, -q.y, -q.z};
  const Quat r = q * p * conj;
  return {r.x, r.y, r.z};
}

double angle_between(const Quat& a, const Quat& b) {
  const double d = std::abs(a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z) /
                   (norm(a) * norm(b));
  return 2.0 * std::acos(std::min(1.0, d));
}

bool is_finite(const Pose& p) {
  return is_finite(p.position) && is_finite(p.orientation);
}

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> parse_from(
    const std::array<std::pair<Enum, std::string_view>, N>& table,
    std::string_view name) {
  for (const auto& [value, text] : table) {
    if (text == name) return value;
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(
    const std::array<std::pair<Enum, std::string_view>, N>& table,
    Enum value) {
  for (const auto& [v, text] : table) {
    if (v == value) return text;
  }
  return "?";
}

constexpr std::array<std::pair<EntityKind, std::string_view>, 2> kEntityKinds{{
    {EntityKind::user, "user"},
    {EntityKind::object, "object"},
}};

constexpr std::array<std::pair<Predicate, std::string_view>, 5> kPredicates{{
    {Predicate::on, "on"},
    {Predicate::in, "in"},
    {Predicate::held_by, "heldBy"},
    {Predicate::near, "near"},
    {Predicate::attached_to, "attachedTo"},
}};

constexpr std::array<std::pair<Verb, std::string_view>, 9> kVerbs{{
    {Verb::grasp, "grasp"},
    {Verb::release, "release"},
    {Verb::press, "press"},
    {Verb::activate, "activate"},
    {Verb::give, "give"},
    {Verb::place, "place"},
    {Verb::speak, "speak"},
    {Verb::gesture, "gesture"},
    {Verb::gaze, "gaze"},
}};

constexpr std::array<std::pair<ChangeKind, std::string_view>, 3> kChangeKinds{{
    {ChangeKind::pose, "pose"},
    {ChangeKind::relation, "relation"},
    {ChangeKind::intrinsic, "intrinsic"},
}};

}  // namespace

std::string_view to_string(EntityKind kind) { return name_of(kEntityKinds, kind); }
std::string_view to_string(Predicate predicate) {
  return name_of(kPredicates, predicate);
}
std::string_view to_string(Verb verb) { return name_of(kVerbs, verb); }
std::string_view to_string(ChangeKind kind) {
  return name_of(kChangeKinds, kind);
}

std::optional<EntityKind> parse_entity_kind(std::string_view name) {
  return parse_from(kEntityKinds, name);
}
std::optional<Predicate> parse_predicate(std::string_view name) {
  return parse_from(kPredicates, name);
}
std::optional<Verb> parse_verb(std::string_view name) {
  return parse_from(kVerbs, name);
}
std::optional<ChangeKind> parse_change_kind(std::string_view name) {
  return parse_from(kChangeKinds, name);
}

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, std::string_view id) {
  auto it = std::find_if(items.begin(), items.end(),
                         [&](const T& item) { return item.id == id; });
  return it == items.end() ? nullptr : &*it;
}

}  // namespace

const Entity* find_entity(const MaredDocument& doc, std::string_view id) {
  return find_by_id(doc.entities, id);
}

const SemanticExperienceSegment* find_segment(const MaredDocument& doc,
                                              std::string_view id) {
  return find_by_id(doc.segments, id);
}

const InteractionEvent* find_interaction(const MaredDocument& doc,
                                         std::string_view id) {
  return find_by_id(doc.interaction_events, id);
}

const StateChangeEvent* find_state_change(const MaredDocument& doc,
                                          std::string_view id) {
  return find_by_id(doc.state_change_events, id);
}

std::optional<Pose> pose_at(const MaredDocument& doc, std::string_view entity_id,
                            Seconds t) {
  const Entity* entity = find_entity(doc, entity_id);
  if (entity == nullptr) return std::nullopt;

  std::vector<const StateChangeEvent*> moves;
  for (const auto& s : doc.state_change_events) {
    if (s.subject == entity_id && s.kind == ChangeKind::pose &&
        s.t_start <= t) {
      moves.push_back(&s);
    }
  }
  std::stable_sort(moves.begin(), moves.end(), [](const auto* a, const auto* b) {
    return a->t_start < b->t_start;
  });

  Pose pose = entity->pose;
  for (const StateChangeEvent* s : moves) {
    if (t >= s->t_end) {
      pose = std::get<Pose>(s->after);
      continue;
    }
    pose = std::get<Pose>(s->before);
    for (const auto& sample : s->trajectory) {
      if (sample.t > t) break;
      pose = sample.pose;
    }
  }
  return pose;
}

}  // namespace mared
