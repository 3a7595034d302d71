#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mared/model.hpp"

namespace mared {

/// Geometric thresholds for relation predicates. z is the vertical axis.
struct RelationThresholds {
  double on_gap_min = -0.01;         // m, bottom of subject vs top of object
  double on_gap_max = 0.02;          // m
  double on_min_overlap = 0.5;       // fraction of the subject footprint
  double near_distance = 0.5;        // m, centroid distance (exclusive)
  double held_distance = 0.05;       // m, hand to centroid (exclusive)
};

/// Instantaneous state of one entity as seen by the relation evaluator.
struct EntityState {
  std::string id;
  EntityKind kind = EntityKind::object;
  Pose pose;
  Vec3 bbox{0.1, 0.1, 0.1};
  std::optional<Vec3> hand;  // users only; defaults to the pose position
};

struct RelationContext {
  std::set<std::pair<std::string, std::string>> active_grasps;  // (user, object)
  std::set<std::pair<std::string, std::string>> attachments;    // (subject, object)
  RelationThresholds thresholds;
};

/// Relations with `subject` as subject and `object` as object.
///
/// on:      subject bottom lies within [on_gap_min, on_gap_max] of the object
///          top, the footprints overlap by at least on_min_overlap of the
///          subject footprint, and the subject centroid is higher.
/// in:      subject centroid inside the object box and subject volume smaller.
/// heldBy:  subject is an object, the object entity is a user with an active
///          grasp on it, and the hand is within held_distance of the centroid.
/// attachedTo: only from context annotations.
/// near:    centroid distance below near_distance, reported only when no other
///          predicate relates the pair in either direction.
///
/// Throws Error(rejected_input) on non-finite poses or boxes.
RelationSet relate(const EntityState& subject, const EntityState& object,
                   const RelationContext& context);

/// All relations among a set of entities. near is symmetric and reported once,
/// with the lexicographically smaller id as subject.
RelationSet relate_scene(const std::vector<EntityState>& states,
                         const RelationContext& context);

/// Relations in which `id` appears as subject or object.
RelationSet relations_involving(const RelationSet& relations,
                                const std::string& id);

}  // namespace mared
