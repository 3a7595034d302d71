#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mared/model.hpp"

namespace mared {

enum class Rule {
  dangling_reference,
  duplicate_id,
  empty_span,
  invalid_span,
  invalid_timestamp,
  unsorted_segments,
  overlapping_segments,
  event_outside_segment,
  actor_not_user,
  self_relation,
  out_of_range,
  non_finite,
  non_unit_quaternion,
  kind_mismatch,
  unchanged_state,
  trajectory_order,
  unsupported_version,
  unsorted_keyframes,
  empty_sources,
};

std::string_view to_string(Rule rule);

struct Violation {
  Rule rule;
  std::string field;  // e.g. "interactionEvents.actor"
  std::string id;     // offending id, or the element id the field belongs to
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::string describe(const Violation& v);

/// Every broken invariant of the document, in a deterministic order.
/// An empty result means the document is well-formed.
std::vector<Violation> validate_document(const MaredDocument& doc);

/// validate_document plus the keyframe invariants.
std::vector<Violation> validate_keyframed(const KeyframedDocument& kdoc);

/// Quaternion norm tolerance accepted for poses.
inline constexpr double kUnitQuaternionTolerance = 1e-6;

}  // namespace mared
