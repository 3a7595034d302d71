#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#ifndef MARED_FIXTURE_DIR
#error "MARED_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace mared::testing {

namespace {

constexpr double kFrameStep = 0.5;

Pose at(double x, double y, double z) { return {{x, y, z}, {}}; }

RawEntity raw(const std::string& id, Pose pose, Vec3 bbox) {
  RawEntity e;
  e.id = id;
  e.pose = pose;
  e.bbox = bbox;
  return e;
}

ActionAnnotation action(const std::string& actor, const std::string& verb,
                        std::optional<std::string> target, ActionPhase phase,
                        std::optional<std::string> payload = std::nullopt) {
  return {actor, verb, std::move(target), phase, std::move(payload)};
}

SegmentMarker marker(MarkerKind kind, const std::string& label,
                     std::vector<std::string> participants,
                     std::vector<std::string> key_objects) {
  return {kind, label, std::move(participants), std::move(key_objects)};
}

SpaceAnchors room_anchors() {
  return {{"anchor-door", at(-2.0, -2.0, 0.0)},
          {"anchor-window", at(3.0, -2.0, 0.0)},
          {"anchor-corner", at(3.0, 4.0, 0.0)},
          {"anchor-ceiling", at(0.0, 0.0, 2.5)}};
}

bool near_time(double a, double b) { return std::abs(a - b) < 1e-9; }

}  // namespace

RawCapture drone_capture() {
  RawCapture capture;
  capture.header.capture_epoch = "2024-03-14T09:00:00Z";
  capture.header.anchors = room_anchors();

  const Pose drone_pose = at(0.0, 0.0, 0.85);
  for (int i = 0; i <= 40; ++i) {
    RawFrame f;
    f.t = i * kFrameStep;

    RawEntity instructor = raw("instructor", at(0.0, -1.2, 0.9), {0.5, 0.3, 1.8});
    RawEntity drone = raw("drone", drone_pose, {0.3, 0.3, 0.1});
    RawEntity table = raw("table", at(0.0, 0.0, 0.4), {1.0, 1.0, 0.8});
    if (i == 0) {
      instructor.kind = EntityKind::user;
      instructor.label = "Instructor";
      drone.label = "Quadcopter";
      drone.significance = 1.0;
      table.label = "Workbench";
      table.significance = 0.2;
    }
    // The hand rests on the drone from the grasp until the release.
    if (f.t >= 10.0 && f.t <= 19.0) instructor.hand = drone_pose.position;
    drone.properties["powered"] = f.t >= 5.0;
    f.entities = {instructor, drone, table};

    if (near_time(f.t, 0.0)) {
      f.markers.push_back(marker(MarkerKind::segment_start, "drone principles",
                                 {"instructor"}, {"drone"}));
    }
    if (near_time(f.t, 10.0)) {
      f.markers.push_back(marker(MarkerKind::segment_end, "drone principles", {}, {}));
      f.markers.push_back(marker(MarkerKind::segment_start, "drone assembly",
                                 {"instructor"}, {"drone"}));
    }
    if (near_time(f.t, 20.0)) {
      f.markers.push_back(marker(MarkerKind::segment_end, "drone assembly", {}, {}));
    }

    const auto phase_at = [&](double begin, double end) -> std::optional<ActionPhase> {
      if (near_time(f.t, begin)) return ActionPhase::begin;
      if (near_time(f.t, end)) return ActionPhase::end;
      return std::nullopt;
    };
    if (auto p = phase_at(1.0, 3.0)) f.actions.push_back(action("instructor", "gaze", "table", *p));
    if (auto p = phase_at(5.0, 10.0)) {
      f.actions.push_back(action("instructor", "activate", "drone", *p));
    }
    if (auto p = phase_at(10.0, 15.0)) f.actions.push_back(action("instructor", "grasp", "drone", *p));
    if (auto p = phase_at(17.0, 19.0)) {
      f.actions.push_back(action("instructor", "release", "drone", *p));
    }
    capture.frames.push_back(std::move(f));
  }
  return capture;
}

MaredDocument drone_document() { return ingest(drone_capture()).document; }

KeyframedDocument drone_keyframed(double theta) { return distill(drone_document(), theta); }

std::vector<InteractionInput> drone_question_trace() {
  return {{4.0, InputKind::speech, "how do the rotors generate lift?", std::nullopt}};
}

RawCapture workshop_capture() {
  RawCapture capture;
  capture.header.capture_epoch = "2024-05-02T14:30:00Z";
  capture.header.anchors = room_anchors();

  const Vec3 cup_start{0.0, 0.0, 0.85};
  const Vec3 cup_end{2.0, 0.0, 1.25};
  for (int i = 0; i <= 50; ++i) {
    RawFrame f;
    f.t = i * kFrameStep;

    // The cup travels table -> shelf between t=2 and t=5.
    double s = std::clamp((f.t - 2.0) / 3.0, 0.0, 1.0);
    const Vec3 cup_pos = cup_start + s * (cup_end - cup_start);
    Pose cup_pose{cup_pos, quat_from_axis_angle({0.0, 0.0, 1.0}, s * 1.2)};

    RawEntity alice = raw("alice", at(0.0, -0.6, 0.9), {0.5, 0.3, 1.7});
    RawEntity bob = raw("bob", at(0.35, -0.6, 0.9), {0.5, 0.3, 1.8});
    RawEntity cup = raw("cup", cup_pose, {0.08, 0.08, 0.1});
    RawEntity table = raw("table", at(0.0, 0.0, 0.4), {1.0, 1.0, 0.8});
    RawEntity shelf = raw("shelf", at(2.0, 0.0, 0.6), {0.6, 0.4, 1.2});
    RawEntity wrench = raw("wrench", at(0.4, 0.3, 0.825), {0.2, 0.05, 0.05});
    if (i == 0) {
      alice.kind = EntityKind::user;
      bob.kind = EntityKind::user;
      cup.significance = 0.6;
      table.significance = 0.2;
      shelf.significance = 0.3;
      wrench.significance = 0.8;
      cup.label = "Mug";
    }
    if (f.t >= 1.0 && f.t <= 5.0) alice.hand = cup_pos;
    wrench.properties["torque"] = f.t >= 21.0 ? 20.0 : 10.0;
    cup.properties["full"] = true;
    f.entities = {alice, bob, cup, table, shelf, wrench};

    const auto phase_at = [&](double begin, double end) -> std::optional<ActionPhase> {
      if (near_time(f.t, begin)) return ActionPhase::begin;
      if (near_time(f.t, end)) return ActionPhase::end;
      return std::nullopt;
    };
    if (auto p = phase_at(1.0, 2.0)) f.actions.push_back(action("alice", "grasp", "cup", *p));
    if (auto p = phase_at(4.5, 5.0)) f.actions.push_back(action("alice", "place", "cup", *p));
    if (auto p = phase_at(15.0, 16.0)) {
      f.actions.push_back(action("bob", "speak", std::nullopt, *p, "hand me the wrench"));
    }
    if (auto p = phase_at(16.0, 18.0)) f.actions.push_back(action("bob", "give", "wrench", *p));
    if (auto p = phase_at(19.0, 20.0)) f.actions.push_back(action("alice", "point", "shelf", *p));
    capture.frames.push_back(std::move(f));
  }
  return capture;
}

MaredDocument workshop_document() { return ingest(workshop_capture()).document; }

KeyframedDocument workshop_keyframed(double theta) {
  return distill(workshop_document(), theta);
}

std::vector<NamedFixture> all_fixtures() {
  return {{"drone", drone_keyframed()}, {"workshop", workshop_keyframed()}};
}

std::string fixture_dir() { return MARED_FIXTURE_DIR; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// ---------------------------------------------------------------------------
// Random documents

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

// Times on a 0.05 grid so that coincident and nearby candidates occur.
double grid(double t) { return std::round(t * 20.0) / 20.0; }

Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q{n(rng), n(rng), n(rng), n(rng)};
  const double len = norm(q);
  if (len < 1e-6) return {};
  return {q.w / len, q.x / len, q.y / len, q.z / len};
}

Pose random_pose(std::mt19937_64& rng) {
  return {{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0, 2)},
          chance(rng, 0.5) ? Quat{} : random_quat(rng)};
}

RelationSet random_relations(std::mt19937_64& rng, const std::vector<Entity>& entities) {
  RelationSet out;
  const int n = pick(rng, 0, 3);
  for (int i = 0; i < n; ++i) {
    const auto& a = entities[pick(rng, 0, static_cast<int>(entities.size()) - 1)];
    const auto& b = entities[pick(rng, 0, static_cast<int>(entities.size()) - 1)];
    if (a.id == b.id) continue;
    out.insert({static_cast<Predicate>(pick(rng, 0, 4)), a.id, b.id});
  }
  return out;
}

}  // namespace

MaredDocument random_document(std::mt19937_64& rng, int max_events) {
  MaredDocument doc;
  doc.header.capture_epoch = "2024-01-01T00:00:00Z";
  const int anchors = pick(rng, 0, 4);
  for (int i = 0; i < anchors; ++i) {
    doc.header.anchors.push_back({"anchor-" + std::to_string(i), random_pose(rng)});
  }

  const int users = pick(rng, 1, 3);
  const int objects = pick(rng, 1, 5);
  for (int i = 0; i < users + objects; ++i) {
    Entity e;
    const bool user = i < users;
    e.id = (user ? "user-" : "obj-") + std::to_string(user ? i : i - users);
    e.kind = user ? EntityKind::user : EntityKind::object;
    e.label = chance(rng, 0.5) ? "" : "label " + std::to_string(i);
    e.significance = grid(uniform(rng, 0.0, 1.0));
    e.bbox = {grid(uniform(rng, 0.05, 1.0)) + 0.05, grid(uniform(rng, 0.05, 1.0)) + 0.05,
              grid(uniform(rng, 0.05, 1.0)) + 0.05};
    e.pose = random_pose(rng);
    if (chance(rng, 0.3)) e.properties["on"] = chance(rng, 0.5);
    if (chance(rng, 0.3)) e.properties["level"] = grid(uniform(rng, 0, 10));
    if (chance(rng, 0.2)) e.properties["mode"] = std::string("idle");
    doc.entities.push_back(std::move(e));
  }
  const std::vector<Entity>& entities = doc.entities;
  auto any_entity = [&]() -> const Entity& {
    return entities[pick(rng, 0, static_cast<int>(entities.size()) - 1)];
  };

  const int segments = pick(rng, 1, 4);
  double cursor = grid(uniform(rng, 0.0, 2.0));
  for (int i = 0; i < segments; ++i) {
    SemanticExperienceSegment s;
    s.id = "seg-" + std::to_string(i + 1);
    s.label = "segment " + std::to_string(i + 1);
    s.t_start = cursor;
    s.t_end = grid(cursor + uniform(rng, 1.0, 10.0));
    cursor = grid(s.t_end + (chance(rng, 0.5) ? 0.0 : uniform(rng, 0.0, 3.0)));
    s.participants.push_back("user-" + std::to_string(pick(rng, 0, users - 1)));
    if (chance(rng, 0.7)) {
      s.key_objects.push_back("obj-" + std::to_string(pick(rng, 0, objects - 1)));
    }
    doc.segments.push_back(std::move(s));
  }
  const double horizon = doc.segments.back().t_end;

  const int total = pick(rng, 0, max_events);
  const int interactions = pick(rng, 0, total);
  for (int i = 0; i < interactions; ++i) {
    const auto& seg = doc.segments[pick(rng, 0, segments - 1)];
    InteractionEvent e;
    e.id = "ie-" + std::to_string(i + 1);
    e.segment_id = seg.id;
    e.actor = "user-" + std::to_string(pick(rng, 0, users - 1));
    e.verb = static_cast<Verb>(pick(rng, 0, 8));
    if (chance(rng, 0.85)) {
      const auto& target = any_entity();
      if (target.id != e.actor || chance(rng, 0.2)) e.target = target.id;
    }
    e.t_start = std::clamp(grid(uniform(rng, seg.t_start, seg.t_end)), seg.t_start, seg.t_end);
    e.t_end = std::clamp(grid(e.t_start + uniform(rng, 0.0, 3.0)), e.t_start, seg.t_end);
    e.pre_state.relations = random_relations(rng, entities);
    e.post_state.relations =
        chance(rng, 0.5) ? e.pre_state.relations : random_relations(rng, entities);
    if (e.verb == Verb::speak && chance(rng, 0.5)) e.payload = "line " + std::to_string(i);
    doc.interaction_events.push_back(std::move(e));
  }

  for (int i = 0; i < total - interactions; ++i) {
    StateChangeEvent s;
    s.id = "sc-" + std::to_string(i + 1);
    s.subject = any_entity().id;
    s.kind = static_cast<ChangeKind>(pick(rng, 0, 2));
    s.t_start = grid(uniform(rng, 0.0, horizon));
    s.t_end = grid(s.t_start + uniform(rng, 0.0, 2.0));
    switch (s.kind) {
      case ChangeKind::pose: {
        Pose before = random_pose(rng);
        Pose after = random_pose(rng);
        after.position.x += 0.5;  // guarantees a change
        s.before = before;
        s.after = after;
        if (chance(rng, 0.5) && s.t_end > s.t_start) {
          const int samples = pick(rng, 2, 5);
          for (int k = 0; k < samples; ++k) {
            const double a = static_cast<double>(k) / (samples - 1);
            const double t = k + 1 == samples ? s.t_end
                                             : std::min(s.t_end, s.t_start + a * (s.t_end - s.t_start));
            if (!s.trajectory.empty() && !(t > s.trajectory.back().t)) continue;
            s.trajectory.push_back(
                {t, {before.position + a * (after.position - before.position), after.orientation}});
          }
        }
        break;
      }
      case ChangeKind::relation: {
        RelationSet before = random_relations(rng, entities);
        RelationSet after = random_relations(rng, entities);
        if (before == after) {
          const auto& other = entities[entities.size() > 1 && entities[0].id == s.subject ? 1 : 0];
          if (other.id != s.subject) {
            after.insert({Predicate::near, s.subject, other.id});
          }
          if (before == after) before.insert({Predicate::attached_to, "user-0", "obj-0"});
        }
        s.before = before;
        s.after = after;
        break;
      }
      case ChangeKind::intrinsic:
        s.before = PropertyMap{{"level", grid(uniform(rng, 0, 5))}};
        s.after = PropertyMap{{"level", 6.0}};
        break;
    }
    if (interactions > 0 && chance(rng, 0.4)) {
      s.cause_event_id = "ie-" + std::to_string(pick(rng, 1, interactions));
    }
    doc.state_change_events.push_back(std::move(s));
  }
  return doc;
}

std::vector<InteractionInput> random_trace(std::mt19937_64& rng, double horizon,
                                           int max_inputs) {
  static const std::vector<std::pair<InputKind, std::string>> kInputs = {
      {InputKind::speech, "why does it spin?"},
      {InputKind::speech, "what is that?"},
      {InputKind::speech, "interesting"},
      {InputKind::gesture, "point"},
      {InputKind::gaze, "look"},
      {InputKind::selection, "done"},
      {InputKind::selection, "done"},
      {InputKind::selection, "other"},
  };
  std::vector<InteractionInput> trace;
  const int n = pick(rng, 0, max_inputs);
  for (int i = 0; i < n; ++i) {
    const auto& [kind, payload] = kInputs[pick(rng, 0, static_cast<int>(kInputs.size()) - 1)];
    InteractionInput input{grid(uniform(rng, 0.0, horizon)), kind, payload, std::nullopt};
    if (kind == InputKind::gesture && chance(rng, 0.7)) input.target = "obj-0";
    trace.push_back(input);
  }
  std::sort(trace.begin(), trace.end(),
            [](const auto& a, const auto& b) { return a.wall_time < b.wall_time; });
  return trace;
}

// ---------------------------------------------------------------------------
// Oracle

std::vector<std::pair<double, double>> naive_keyframes(const MaredDocument& doc,
                                                       double theta,
                                                       const ScoringWeights& w) {
  struct Span {
    double a, b, score;
  };
  std::vector<Span> spans;
  std::vector<double> candidates;
  for (const auto& e : doc.interaction_events) {
    spans.push_back({e.t_start, e.t_end, score_interaction(e, doc, w)});
    candidates.push_back(e.t_start);
    candidates.push_back(e.t_end);
  }
  for (const auto& s : doc.state_change_events) {
    spans.push_back({s.t_start, s.t_end, score_state_change(s, doc, w)});
    candidates.push_back(s.t_end);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const std::size_t n = candidates.size();
  std::vector<double> sig(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& s : spans) {
      if (s.a <= candidates[i] && candidates[i] <= s.b) sig[i] = std::max(sig[i], s.score);
    }
  }

  // Transitive closure of "closer than the merge window" by union-find.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(candidates[j] - candidates[i]) < kKeyframeMergeWindow) {
        parent[root(j)] = root(i);
      }
    }
  }

  std::vector<std::pair<double, double>> out;
  for (std::size_t r = 0; r < n; ++r) {
    if (root(r) != r) continue;
    std::size_t best = r;
    for (std::size_t i = 0; i < n; ++i) {
      if (root(i) != r) continue;
      if (sig[i] > sig[best] || (sig[i] == sig[best] && candidates[i] < candidates[best])) {
        best = i;
      }
    }
    const bool keep = theta == 0.0 || (theta < 1.0 && sig[best] >= theta);
    if (keep) out.emplace_back(candidates[best], sig[best]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mared::testing
