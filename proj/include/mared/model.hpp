#pragma once

// Domain types shared by every pipeline stage: the semantic log
// (MaredDocument), its keyframed form, and the small geometry values
// they are built from. All values are plain aggregates with value
// semantics and defaulted equality.

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mared {

inline constexpr std::string_view kMaredVersion = "0.1";

/// Seconds since the capture epoch.
using Seconds = double;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& v);
double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);
double distance(const Vec3& a, const Vec3& b);
bool is_finite(const Vec3& v);

/// Unit quaternion stored as (w, x, y, z).
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Quat&, const Quat&) = default;
};

Quat operator*(const Quat& a, const Quat& b);
double norm(const Quat& q);
bool is_finite(const Quat& q);
Quat quat_from_axis_angle(const Vec3& axis, double radians);
Vec3 rotate(const Quat& q, const Vec3& v);
/// Smallest rotation angle (radians) taking one orientation to the other.
double angle_between(const Quat& a, const Quat& b);

struct Pose {
  Vec3 position;
  Quat orientation;

  friend bool operator==(const Pose&, const Pose&) = default;
};

bool is_finite(const Pose& p);

enum class EntityKind { user, object };

using PropertyValue = std::variant<bool, double, std::string>;
using PropertyMap = std::map<std::string, PropertyValue>;

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::object;
  std::string label;
  double significance = 0.0;  // object-importance prior in [0,1]
  Vec3 bbox{0.1, 0.1, 0.1};   // axis-aligned extents
  PropertyMap properties;     // intrinsic state at capture start
  Pose pose;                  // pose at capture start

  friend bool operator==(const Entity&, const Entity&) = default;
};

enum class Predicate { on, in, held_by, near, attached_to };

struct SemanticRelation {
  Predicate predicate = Predicate::on;
  std::string subject;
  std::string object;

  friend auto operator<=>(const SemanticRelation&,
                          const SemanticRelation&) = default;
  friend bool operator==(const SemanticRelation&,
                         const SemanticRelation&) = default;
};

using RelationSet = std::set<SemanticRelation>;

struct SemanticExperienceSegment {
  std::string id;
  std::string label;
  Seconds t_start = 0.0;
  Seconds t_end = 0.0;
  std::vector<std::string> participants;
  std::vector<std::string> key_objects;

  friend bool operator==(const SemanticExperienceSegment&,
                         const SemanticExperienceSegment&) = default;
};

enum class Verb {
  grasp,
  release,
  press,
  activate,
  give,
  place,
  speak,
  gesture,
  gaze
};

/// Relations touching an object plus its intrinsic properties at one instant.
struct ObjectSnapshot {
  RelationSet relations;
  PropertyMap properties;

  friend bool operator==(const ObjectSnapshot&,
                         const ObjectSnapshot&) = default;
};

struct InteractionEvent {
  std::string id;
  std::string segment_id;
  std::string actor;
  Verb verb = Verb::gesture;
  std::optional<std::string> target;
  Seconds t_start = 0.0;
  Seconds t_end = 0.0;
  ObjectSnapshot pre_state;
  ObjectSnapshot post_state;
  std::optional<std::string> payload;

  friend bool operator==(const InteractionEvent&,
                         const InteractionEvent&) = default;
};

enum class ChangeKind { pose, relation, intrinsic };

/// Holds a Pose, RelationSet or PropertyMap matching the ChangeKind.
using StateValue = std::variant<Pose, RelationSet, PropertyMap>;

struct TrajectorySample {
  Seconds t = 0.0;
  Pose pose;

  friend bool operator==(const TrajectorySample&,
                         const TrajectorySample&) = default;
};

struct StateChangeEvent {
  std::string id;
  std::string subject;
  ChangeKind kind = ChangeKind::pose;
  Seconds t_start = 0.0;
  Seconds t_end = 0.0;
  StateValue before;
  StateValue after;
  std::vector<TrajectorySample> trajectory;
  std::optional<std::string> cause_event_id;

  friend bool operator==(const StateChangeEvent&,
                         const StateChangeEvent&) = default;
};

struct SpaceAnchor {
  std::string id;
  Pose pose;

  friend bool operator==(const SpaceAnchor&, const SpaceAnchor&) = default;
};

using SpaceAnchors = std::vector<SpaceAnchor>;

struct DocumentHeader {
  std::string capture_epoch;
  SpaceAnchors anchors;

  friend bool operator==(const DocumentHeader&,
                         const DocumentHeader&) = default;
};

struct MaredDocument {
  std::string mared_version{kMaredVersion};
  DocumentHeader header;
  std::vector<Entity> entities;
  std::vector<SemanticExperienceSegment> segments;
  std::vector<InteractionEvent> interaction_events;
  std::vector<StateChangeEvent> state_change_events;
  // Unrecognised top-level keys kept by the lenient decoder, as canonical
  // encoded text keyed by name.
  std::map<std::string, std::string> extensions;

  friend bool operator==(const MaredDocument&, const MaredDocument&) = default;
};

struct EntityPose {
  std::string entity_id;
  Pose pose;

  friend bool operator==(const EntityPose&, const EntityPose&) = default;
};

struct Keyframe {
  Seconds t = 0.0;
  double score = 0.0;
  std::vector<std::string> sources;
  std::vector<EntityPose> anchors;

  friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

struct KeyframedDocument {
  MaredDocument document;
  double threshold = 0.0;
  std::vector<Keyframe> keyframes;

  friend bool operator==(const KeyframedDocument&,
                         const KeyframedDocument&) = default;
};

// Vocabulary names as they appear in encoded documents.
std::string_view to_string(EntityKind kind);
std::string_view to_string(Predicate predicate);
std::string_view to_string(Verb verb);
std::string_view to_string(ChangeKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view name);
std::optional<Predicate> parse_predicate(std::string_view name);
std::optional<Verb> parse_verb(std::string_view name);
std::optional<ChangeKind> parse_change_kind(std::string_view name);

// Document lookups.
const Entity* find_entity(const MaredDocument& doc, std::string_view id);
const SemanticExperienceSegment* find_segment(const MaredDocument& doc,
                                              std::string_view id);
const InteractionEvent* find_interaction(const MaredDocument& doc,
                                         std::string_view id);
const StateChangeEvent* find_state_change(const MaredDocument& doc,
                                          std::string_view id);

/// Pose of an entity at time t, reconstructed from its initial pose and the
/// pose-kind state changes recorded for it. Inside a change span the latest
/// trajectory sample at or before t is used. Returns nullopt for unknown ids.
std::optional<Pose> pose_at(const MaredDocument& doc, std::string_view entity_id,
                            Seconds t);

}  // namespace mared
