#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "mared/error.hpp"
#include "mared/keyframe_distiller.hpp"
#include "mared/validation.hpp"
#include "support.hpp"

using namespace mared;

namespace {

std::vector<double> times(const KeyframedDocument& k) {
  std::vector<double> out;
  for (const auto& f : k.keyframes) out.push_back(f.t);
  return out;
}

std::set<double> candidate_times(const MaredDocument& doc) {
  std::set<double> out;
  for (const auto& e : doc.interaction_events) {
    out.insert(e.t_start);
    out.insert(e.t_end);
  }
  for (const auto& s : doc.state_change_events) out.insert(s.t_end);
  return out;
}

}  // namespace

TEST_CASE("drone event scores") {
  const MaredDocument doc = testing::drone_document();
  // action + object significance; no narrative or social contribution.
  CHECK(score_interaction(doc.interaction_events[0], doc) == doctest::Approx(0.40 * 0.3 + 0.25 * 0.2));
  CHECK(score_interaction(doc.interaction_events[1], doc) == doctest::Approx(0.61));
  CHECK(score_interaction(doc.interaction_events[2], doc) == doctest::Approx(0.57));
  CHECK(score_interaction(doc.interaction_events[3], doc) == doctest::Approx(0.49));
  CHECK(score_state_change(doc.state_change_events[0], doc) == doctest::Approx(0.30));
  CHECK(score_state_change(doc.state_change_events[1], doc) == doctest::Approx(0.40));
}

TEST_CASE("drone keyframes at threshold 0.5") {
  const KeyframedDocument k = testing::drone_keyframed(0.5);
  CHECK(times(k) == std::vector<double>{5, 10, 15});
  CHECK(k.threshold == 0.5);
  CHECK(k.keyframes[0].sources == std::vector<std::string>{"ie-2"});
  CHECK(k.keyframes[2].sources == std::vector<std::string>{"ie-3"});
  CHECK(k.keyframes[2].score == doctest::Approx(0.57));
  REQUIRE(k.keyframes[0].anchors.size() == 2);
  CHECK(k.keyframes[0].anchors[0].entity_id == "drone");
  CHECK(k.keyframes[0].anchors[1].entity_id == "instructor");
  CHECK(k.keyframes[0].anchors[0].pose.position.z == doctest::Approx(0.85));
  CHECK(validate_keyframed(k).empty());
}

TEST_CASE("threshold endpoints keep everything or nothing") {
  for (const auto& doc : {testing::drone_document(), testing::workshop_document()}) {
    const auto all = times(distill(doc, 0.0));
    CHECK(std::set<double>(all.begin(), all.end()) == candidate_times(doc));
    CHECK(distill(doc, 1.0).keyframes.empty());
  }
}

TEST_CASE("narrative term: relation change on an object a later segment needs") {
  MaredDocument doc = testing::drone_document();
  // Move the grasp into the first segment; the drone is a key object of seg-2.
  auto& grasp = doc.interaction_events[2];
  grasp.segment_id = "seg-1";
  grasp.t_start = 7.0;
  grasp.t_end = 9.0;
  CHECK(score_interaction(grasp, doc) == doctest::Approx(0.57 + 0.20));
  grasp.post_state = grasp.pre_state;
  CHECK(score_interaction(grasp, doc) == doctest::Approx(0.57));
}

TEST_CASE("social term: a user target or another user close by") {
  MaredDocument doc = testing::drone_document();
  Entity guest;
  guest.id = "guest";
  guest.kind = EntityKind::user;
  guest.pose = {{0.0, -1.5, 0.9}, {}};  // 0.3 m from the instructor
  doc.entities.push_back(guest);
  CHECK(score_interaction(doc.interaction_events[0], doc) == doctest::Approx(0.17 + 0.15));
  doc.entities.back().pose.position.y = -3.0;
  CHECK(score_interaction(doc.interaction_events[0], doc) == doctest::Approx(0.17));
  doc.interaction_events[0].target = "guest";
  doc.interaction_events[0].verb = Verb::speak;
  CHECK(score_interaction(doc.interaction_events[0], doc) == doctest::Approx(0.40 * 0.6 + 0.15));
}

TEST_CASE("pose magnitude saturates by distance or speed") {
  MaredDocument doc = testing::drone_document();
  StateChangeEvent move;
  move.id = "sc-9";
  move.subject = "drone";
  move.kind = ChangeKind::pose;
  move.t_start = 1.0;
  move.t_end = 3.0;
  move.before = Pose{{0, 0, 0}, {}};
  move.after = Pose{{0.5, 0, 0}, {}};
  CHECK(score_state_change(move, doc) == doctest::Approx(0.30 * 0.5));
  move.trajectory = {{1.0, {{0, 0, 0}, {}}}, {1.2, {{0.4, 0, 0}, {}}}, {3.0, {{0.5, 0, 0}, {}}}};
  CHECK(score_state_change(move, doc) == doctest::Approx(0.30));
}

TEST_CASE("nearby candidates merge into the most significant one") {
  MaredDocument doc = testing::drone_document();
  doc.interaction_events[0].t_end = 4.95;  // gaze now ends 0.05 before activate starts
  const auto k = distill(doc, 0.0);
  const auto ts = times(k);
  CHECK(std::find(ts.begin(), ts.end(), 4.95) == ts.end());
  CHECK(std::find(ts.begin(), ts.end(), 5.0) != ts.end());
}

TEST_CASE("distill rejects thresholds outside [0,1] and dangling ids") {
  const MaredDocument doc = testing::drone_document();
  CHECK_THROWS_AS(distill(doc, 1.5), Error);
  CHECK_THROWS_AS(distill(doc, -0.1), Error);
  CHECK_THROWS_AS(distill(doc, NAN), Error);

  MaredDocument broken = doc;
  broken.interaction_events[0].target = "ghost";
  try {
    distill(broken, 0.5);
    FAIL("expected scoring_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::scoring_error);
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
}

TEST_CASE("weight sets must be normalised") {
  ScoringWeights w;
  CHECK(check_weights(w).empty());
  w.interaction.social = 0.5;
  CHECK(check_weights(w).size() == 1);
  w.verb_table[Verb::gaze] = 2.0;
  CHECK(check_weights(w).size() == 2);
}

TEST_CASE("scores stay in [0,1] even with odd weights") {
  ScoringWeights w;
  w.interaction = {2.0, 2.0, 2.0, 2.0};
  w.state_change = {NAN, 0, 0};
  const MaredDocument doc = testing::drone_document();
  for (const auto& e : doc.interaction_events) CHECK(score_interaction(e, doc, w) <= 1.0);
  for (const auto& s : doc.state_change_events) {
    const double v = score_state_change(s, doc, w);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("property: distill agrees with the brute-force filter") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto doc = testing::random_document(rng);
    for (double theta : {0.0, 1.0, unit(rng), unit(rng)}) {
      std::vector<std::pair<double, double>> got;
      for (const auto& k : distill(doc, theta).keyframes) got.emplace_back(k.t, k.score);
      CHECK(got == testing::naive_keyframes(doc, theta));
    }
  }
}

TEST_CASE("property: keyframe sets shrink as the threshold grows") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto doc = testing::random_document(rng);
    double a = unit(rng), b = unit(rng);
    if (a > b) std::swap(a, b);
    const auto low = times(distill(doc, a));
    const auto high = times(distill(doc, b));
    CHECK(std::includes(low.begin(), low.end(), high.begin(), high.end()));
  }
}
