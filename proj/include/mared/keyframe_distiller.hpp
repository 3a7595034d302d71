#pragma once

// Stage 2: scores interaction and state-change events and keeps the
// significant instants as keyframes.

#include <map>
#include <vector>

#include "mared/model.hpp"
#include "mared/relations.hpp"

namespace mared {

struct InteractionWeights {
  double action = 0.40;
  double object = 0.25;
  double narrative = 0.20;
  double social = 0.15;
};

struct StateChangeWeights {
  double magnitude = 0.30;
  double relation = 0.40;
  double intrinsic = 0.30;
};

struct ScoringWeights {
  InteractionWeights interaction;
  StateChangeWeights state_change;
  std::map<Verb, double> verb_table{
      {Verb::give, 1.0},    {Verb::press, 0.9},   {Verb::activate, 0.9},
      {Verb::grasp, 0.8},   {Verb::place, 0.7},   {Verb::release, 0.6},
      {Verb::speak, 0.6},   {Verb::gaze, 0.3},    {Verb::gesture, 0.3},
  };
  double near_distance = RelationThresholds{}.near_distance;  // social term
  double full_displacement = 1.0;  // m at which the magnitude term saturates
  double full_speed = 1.0;         // m/s at which the magnitude term saturates
};

/// Problems with a weight set: groups not summing to 1 (within 1e-9) or
/// table entries outside [0,1]. Empty when usable.
std::vector<std::string> check_weights(const ScoringWeights& weights);

/// Weighted sum of action semantics, object significance, narrative
/// progression and social context, clamped to [0,1].
/// Throws Error(scoring_error) naming any dangling id.
double score_interaction(const InteractionEvent& e, const MaredDocument& doc,
                         const ScoringWeights& weights = {});

/// Weighted sum of motion magnitude, relation change and intrinsic change,
/// clamped to [0,1]. Throws Error(scoring_error) on a dangling subject.
double score_state_change(const StateChangeEvent& s, const MaredDocument& doc,
                          const ScoringWeights& weights = {});

/// Candidates closer than this are merged into one keyframe.
inline constexpr double kKeyframeMergeWindow = 0.1;

/// Keyframes of `doc` for threshold `theta` in [0,1].
///
/// Candidate instants are every interaction start/end and every state-change
/// end. The significance of an instant is the highest score among events
/// whose closed span contains it. Candidates are first grouped by
/// single-linkage over kKeyframeMergeWindow; each group is represented by
/// its most significant (then earliest) member. A representative is kept
/// when theta == 0, or when theta < 1 and its significance >= theta.
KeyframedDocument distill(const MaredDocument& doc, double theta,
                          const ScoringWeights& weights = {});

}  // namespace mared
