#include "mared/keyframe_distiller.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mared/error.hpp"

namespace mared {

namespace {

double clamp_unit(double x) {
  if (!(x >= 0.0)) return 0.0;  // also maps NaN to 0
  return std::min(x, 1.0);
}

const Entity& resolve(const MaredDocument& doc, const std::string& id,
                      const std::string& owner) {
  const Entity* e = find_entity(doc, id);
  if (e == nullptr) {
    throw Error(ErrorCode::scoring_error,
                "event " + owner + " references unknown entity '" + id + "'");
  }
  return *e;
}

bool other_user_near(const InteractionEvent& e, const MaredDocument& doc,
                     double near_distance) {
  for (const Seconds t : {e.t_start, e.t_end}) {
    const auto actor_pose = pose_at(doc, e.actor, t);
    if (!actor_pose) continue;
    for (const auto& other : doc.entities) {
      if (other.kind != EntityKind::user || other.id == e.actor) continue;
      const auto pose = pose_at(doc, other.id, t);
      if (pose && distance(pose->position, actor_pose->position) < near_distance) {
        return true;
      }
    }
  }
  return false;
}

bool advances_narrative(const InteractionEvent& e, const MaredDocument& doc) {
  if (!e.target || e.pre_state.relations == e.post_state.relations) return false;
  return std::any_of(doc.segments.begin(), doc.segments.end(), [&](const auto& s) {
    return s.id != e.segment_id && s.t_start >= e.t_end &&
           std::find(s.key_objects.begin(), s.key_objects.end(), *e.target) !=
               s.key_objects.end();
  });
}

double peak_speed(const StateChangeEvent& s, double displacement) {
  if (s.trajectory.size() < 2) {
    const double duration = s.t_end - s.t_start;
    return duration > 0.0 ? displacement / duration : 0.0;
  }
  double peak = 0.0;
  for (std::size_t i = 1; i < s.trajectory.size(); ++i) {
    const double dt = s.trajectory[i].t - s.trajectory[i - 1].t;
    if (dt <= 0.0) continue;
    peak = std::max(peak, distance(s.trajectory[i].pose.position,
                                   s.trajectory[i - 1].pose.position) /
                              dt);
  }
  return peak;
}

struct ScoredSpan {
  std::string id;
  Seconds t_start;
  Seconds t_end;
  double score;
  std::vector<std::string> entities;
};

struct Candidate {
  Seconds t;
  double significance;
};

}  // namespace

std::vector<std::string> check_weights(const ScoringWeights& w) {
  std::vector<std::string> problems;
  const auto& i = w.interaction;
  const auto& s = w.state_change;
  if (std::abs(i.action + i.object + i.narrative + i.social - 1.0) > 1e-9) {
    problems.emplace_back("interaction weights must sum to 1");
  }
  if (std::abs(s.magnitude + s.relation + s.intrinsic - 1.0) > 1e-9) {
    problems.emplace_back("state-change weights must sum to 1");
  }
  for (const auto& [verb, value] : w.verb_table) {
    if (!(value >= 0.0 && value <= 1.0)) {
      problems.push_back("verb table entry '" + std::string(to_string(verb)) +
                         "' outside [0,1]");
    }
  }
  return problems;
}

double score_interaction(const InteractionEvent& e, const MaredDocument& doc,
                         const ScoringWeights& weights) {
  resolve(doc, e.actor, e.id);
  const Entity* target = e.target ? &resolve(doc, *e.target, e.id) : nullptr;

  const auto verb = weights.verb_table.find(e.verb);
  const double action = verb == weights.verb_table.end() ? 0.0 : verb->second;
  const double object = target != nullptr ? target->significance : 0.0;
  const double narrative = advances_narrative(e, doc) ? 1.0 : 0.0;
  const bool social = (target != nullptr && target->kind == EntityKind::user &&
                       target->id != e.actor) ||
                      other_user_near(e, doc, weights.near_distance);

  const auto& w = weights.interaction;
  return clamp_unit(w.action * action + w.object * object +
                    w.narrative * narrative + w.social * (social ? 1.0 : 0.0));
}

double score_state_change(const StateChangeEvent& s, const MaredDocument& doc,
                          const ScoringWeights& weights) {
  resolve(doc, s.subject, s.id);
  if (s.cause_event_id && find_interaction(doc, *s.cause_event_id) == nullptr) {
    throw Error(ErrorCode::scoring_error,
                "state change " + s.id + " references unknown event '" +
                    *s.cause_event_id + "'");
  }

  double magnitude = 0.0;
  if (s.kind == ChangeKind::pose) {
    const auto* before = std::get_if<Pose>(&s.before);
    const auto* after = std::get_if<Pose>(&s.after);
    if (before != nullptr && after != nullptr) {
      const double d = distance(before->position, after->position);
      magnitude = std::max(std::min(d / weights.full_displacement, 1.0),
                           std::min(peak_speed(s, d) / weights.full_speed, 1.0));
    }
  }
  const auto& w = weights.state_change;
  return clamp_unit(w.magnitude * magnitude +
                    w.relation * (s.kind == ChangeKind::relation ? 1.0 : 0.0) +
                    w.intrinsic * (s.kind == ChangeKind::intrinsic ? 1.0 : 0.0));
}

KeyframedDocument distill(const MaredDocument& doc, double theta,
                          const ScoringWeights& weights) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::rejected_input, "threshold must lie in [0,1]");
  }

  std::vector<ScoredSpan> spans;
  std::vector<Seconds> times;
  for (const auto& e : doc.interaction_events) {
    std::vector<std::string> involved{e.actor};
    if (e.target) involved.push_back(*e.target);
    spans.push_back({e.id, e.t_start, e.t_end, score_interaction(e, doc, weights),
                     std::move(involved)});
    times.push_back(e.t_start);
    times.push_back(e.t_end);
  }
  for (const auto& s : doc.state_change_events) {
    spans.push_back({s.id, s.t_start, s.t_end, score_state_change(s, doc, weights),
                     {s.subject}});
    times.push_back(s.t_end);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  auto significance = [&](Seconds t) {
    double best = 0.0;
    for (const auto& s : spans) {
      if (s.t_start <= t && t <= s.t_end) best = std::max(best, s.score);
    }
    return best;
  };

  // Single-linkage grouping, then one representative per group.
  std::vector<Candidate> representatives;
  std::size_t i = 0;
  while (i < times.size()) {
    Candidate best{times[i], significance(times[i])};
    std::size_t j = i + 1;
    while (j < times.size() && times[j] - times[j - 1] < kKeyframeMergeWindow) {
      const double sig = significance(times[j]);
      if (sig > best.significance) best = {times[j], sig};
      ++j;
    }
    representatives.push_back(best);
    i = j;
  }

  KeyframedDocument out;
  out.document = doc;
  out.threshold = theta;
  for (const auto& c : representatives) {
    const bool keep = theta == 0.0 || (theta < 1.0 && c.significance >= theta);
    if (!keep) continue;

    Keyframe k;
    k.t = c.t;
    k.score = c.significance;
    std::set<std::string> involved;
    for (const auto& s : spans) {
      if (s.t_start <= c.t && c.t <= s.t_end && s.score == c.significance) {
        k.sources.push_back(s.id);
        involved.insert(s.entities.begin(), s.entities.end());
      }
    }
    for (const auto& id : involved) {
      if (auto pose = pose_at(doc, id, c.t)) k.anchors.push_back({id, *pose});
    }
    out.keyframes.push_back(std::move(k));
  }
  return out;
}

}  // namespace mared
