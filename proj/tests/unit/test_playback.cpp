#include <doctest.h>

#include <algorithm>
#include <random>

#include "mared/error.hpp"
#include "mared/playback.hpp"
#include "mared/validation.hpp"
#include "support.hpp"

using namespace mared;

namespace {

const SessionEvent* find_event(const PlaybackSession& s, const std::string& type,
                               std::size_t nth = 0) {
  for (const auto& e : s.log()) {
    if (e.type == type && nth-- == 0) return &e;
  }
  return nullptr;
}

std::size_t count_events(const PlaybackSession& s, const std::string& type) {
  return std::count_if(s.log().begin(), s.log().end(),
                       [&](const auto& e) { return e.type == type; });
}

double num(const SessionEvent& e, const std::string& key) {
  return std::get<double>(e.details.at(key));
}

std::string str(const SessionEvent& e, const std::string& key) {
  return std::get<std::string>(e.details.at(key));
}

InteractionInput speech(double wall, const std::string& text) {
  return {wall, InputKind::speech, text, std::nullopt};
}

InteractionInput done(double wall) { return {wall, InputKind::selection, "done", std::nullopt}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::usage;
}

class TwoStepResponder final : public Responder {
 public:
  std::vector<BranchEvent> generate(const Intent& intent,
                                    const ResponderContext& ctx) const override {
    BranchEvent point{"e2", "instructor", Verb::gesture, "drone", 1.0, 2.0, std::nullopt};
    BranchEvent say{"e1", "instructor", Verb::speak, std::nullopt, 0.0, 3.0,
                    "about " + intent.topic + " at " + std::to_string(ctx.exp_time)};
    return {point, say};
  }
};

}  // namespace

TEST_CASE("clock map pieces") {
  ClockMap clock({0.0, 2.0, 1.0});
  CHECK(clock.exp_at(3.0) == 5.0);
  clock.set(4.0, 6.0, 0.0);
  CHECK(clock.exp_at(10.0) == 6.0);
  CHECK_FALSE(clock.wall_reaching(7.0).has_value());
  clock.set(10.0, 8.0, 0.5);
  CHECK(clock.exp_at(12.0) == 9.0);
  CHECK(clock.exp_at(3.0) == 5.0);  // earlier pieces still answer
  CHECK(*clock.wall_reaching(10.0) == 14.0);
  clock.set(10.0, 8.0, 2.0);  // same start replaces
  CHECK(clock.pieces().size() == 3);
  CHECK(clock.current_rate() == 2.0);
}

TEST_CASE("intent classification rules") {
  CHECK(classify_intent(speech(0, "why is it red? ")).kind == IntentKind::question);
  CHECK(classify_intent(speech(0, "why is it red? ")).topic == "why is it red? ");
  CHECK(classify_intent(speech(0, "nice")).kind == IntentKind::noop);
  CHECK(classify_intent({0, InputKind::gesture, "point", "drone"}) == Intent{IntentKind::inspect, "drone"});
  CHECK(classify_intent({0, InputKind::gesture, "wave", std::nullopt}).kind == IntentKind::noop);
  CHECK(classify_intent(done(0)).kind == IntentKind::done);
  CHECK(classify_intent({0, InputKind::selection, "more", std::nullopt}).kind == IntentKind::noop);
  CHECK(classify_intent({0, InputKind::gaze, "what?", std::nullopt}).kind == IntentKind::noop);
}

TEST_CASE("drone tutorial: question, answer, resume at the next keyframe") {
  PlaybackSession s = open_session(testing::drone_keyframed());
  CHECK(s.mode() == PlaybackMode::main);
  CHECK(s.exp_time() == 0.0);

  CHECK(s.inject(speech(4.0, "how do the rotors generate lift?")) == InjectResult::branch_opened);
  const SessionEvent* opened = find_event(s, "branchOpened");
  REQUIRE(opened != nullptr);
  CHECK(opened->wall_time == 4.0);
  CHECK(opened->exp_time == 4.0);
  CHECK(str(*opened, "intent") == "question");
  CHECK(str(*find_event(s, "branchEventStarted"), "payload") ==
        "answer(how do the rotors generate lift?)");
  CHECK(str(*find_event(s, "branchEventStarted"), "actor") == "instructor");

  s.tick(8.0);
  CHECK(s.mode() == PlaybackMode::branch);
  CHECK(s.exp_time() == 4.0);  // main clock frozen
  CHECK(s.state().rate == 0.0);

  s.run_to_end();
  const SessionEvent* closed = find_event(s, "branchClosed");
  REQUIRE(closed != nullptr);
  CHECK(closed->wall_time == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(num(*closed, "resumeAt") == 5.0);
  CHECK(num(*closed, "rate") == doctest::Approx(0.8));
  CHECK(s.mode() == PlaybackMode::ended);
  CHECK(s.wall_time() == doctest::Approx(29.75).epsilon(1e-12));
  CHECK(std::abs(s.wall_time() - 29.75) < 1e-9);

  const SessionEvent* k10 = find_event(s, "keyframePassed", 1);
  CHECK(num(*k10, "t") == 10.0);
  CHECK(std::abs(k10->wall_time - 17.25) < 1e-9);
  CHECK(find_event(s, "sessionEnded")->exp_time == 20.0);

  // Order of the log around the segment boundary: exit, enter, keyframe.
  std::vector<std::string> at10;
  for (const auto& e : s.log()) {
    if (e.exp_time == 10.0) at10.push_back(e.type);
  }
  CHECK(at10 == std::vector<std::string>{"segmentExited", "segmentEntered", "keyframePassed"});

  REQUIRE(s.branches().size() == 1);
  CHECK(s.branches()[0].status == BranchStatus::closed);
  CHECK(s.branches()[0].resume_at == 5.0);
}

TEST_CASE("empty run logs only progression events") {
  PlaybackSession s = open_session(testing::drone_keyframed());
  s.run_to_end();
  std::vector<std::string> types;
  for (const auto& e : s.log()) types.push_back(e.type);
  CHECK(types == std::vector<std::string>{"segmentEntered", "keyframePassed", "segmentExited",
                                          "segmentEntered", "keyframePassed", "keyframePassed",
                                          "segmentExited", "sessionEnded"});
  CHECK(s.wall_time() == 20.0);
  for (const auto& e : s.log()) CHECK(e.wall_time == e.exp_time);
}

TEST_CASE("resume policies") {
  SUBCASE("pause point") {
    PlaybackConfig c;
    c.resume_policy = ResumePolicy::pause_point;
    PlaybackSession s = open_session(testing::drone_keyframed(), std::nullopt, c);
    s.inject(speech(12.0, "what now?"));
    const ResumeInfo info = s.return_to_main();
    CHECK(info.resume_at == 12.0);
    CHECK(info.parent_exp_time == 12.0);
  }
  SUBCASE("previous keyframe") {
    PlaybackConfig c;
    c.resume_policy = ResumePolicy::previous_keyframe;
    PlaybackSession s = open_session(testing::drone_keyframed(), std::nullopt, c);
    s.inject(speech(12.0, "again?"));
    CHECK(s.return_to_main().resume_at == 10.0);
    // The replayed stretch does not repeat already logged marks.
    s.run_to_end();
    CHECK(count_events(s, "keyframePassed") == 3);
  }
  SUBCASE("next keyframe never skips an unplayed event start") {
    KeyframedDocument k = testing::drone_keyframed();
    PlaybackSession s = open_session(k);
    s.inject(speech(0.5, "what is this?"));
    // Next keyframe is 5 but the gaze starts at 1.
    CHECK(s.return_to_main().resume_at == 1.0);
  }
  SUBCASE("after the last keyframe the pause point is kept") {
    PlaybackSession s = open_session(testing::drone_keyframed());
    s.inject(speech(16.0, "and then?"));
    CHECK(s.return_to_main().resume_at == 16.0);
  }
}

TEST_CASE("inspect branches keep the previous rate") {
  PlaybackSession s = open_session(testing::drone_keyframed());
  CHECK(s.inject({2.0, InputKind::gesture, "point", "drone"}) == InjectResult::branch_opened);
  CHECK(s.branches()[0].intent.topic == "drone");
  CHECK(s.inject(done(3.0)) == InjectResult::branch_closed);
  CHECK(s.clock().current_rate() == 1.0);
  CHECK(s.exp_time() == 5.0);
}

TEST_CASE("single-level branching") {
  PlaybackSession s = open_session(testing::drone_keyframed());
  s.inject(speech(2.0, "first?"));
  CHECK(s.inject(speech(3.0, "second?")) == InjectResult::rejected);
  CHECK(count_events(s, "nestedBranchRejected") == 1);
  CHECK(code_of([&] { s.create_new_branch(speech(3.5, "third?")); }) ==
        ErrorCode::nested_branch_rejected);
  CHECK(s.branches().size() == 1);
  // The rejected inputs still count as activity and push the deadline.
  CHECK(s.next_deadline() == doctest::Approx(7.0 + 2.0));
}

TEST_CASE("inputs inside a branch extend it; done closes it") {
  PlaybackSession s = open_session(testing::drone_keyframed());
  s.inject(speech(2.0, "why?"));
  CHECK(s.inject(speech(8.0, "hmm")) == InjectResult::ignored);
  CHECK(s.next_deadline() == doctest::Approx(10.0));
  s.tick(9.5);
  CHECK(s.mode() == PlaybackMode::branch);
  CHECK_FALSE(s.branch_end_condition_met());
  s.tick(10.0);
  CHECK(s.mode() == PlaybackMode::main);
  CHECK(count_events(s, "inputIgnored") == 1);
}

TEST_CASE("operations in the wrong state") {
  PlaybackSession s = open_session(testing::drone_keyframed());
  CHECK(code_of([&] { s.return_to_main(); }) == ErrorCode::no_branch_open);
  s.tick(3.0);
  CHECK(code_of([&] { s.tick(2.0); }) == ErrorCode::monotonicity);
  CHECK(code_of([&] { export_session(s); }) == ErrorCode::session_still_active);
  CHECK(s.inject(speech(3.0, "hello")) == InjectResult::ignored);
  s.run_to_end();
  CHECK(s.inject(speech(40.0, "anyone?")) == InjectResult::ignored);
  CHECK(find_event(s, "inputIgnored", 1) != nullptr);
  CHECK(str(*find_event(s, "inputIgnored", 1), "reason") == "ended");
}

TEST_CASE("opening a session checks the document") {
  KeyframedDocument empty;
  CHECK(code_of([&] { open_session(empty); }) == ErrorCode::nothing_to_play);
  KeyframedDocument broken = testing::drone_keyframed();
  broken.keyframes[0].sources = {"nope"};
  CHECK(code_of([&] { open_session(broken); }) == ErrorCode::invalid_document);
  PlaybackConfig bad;
  bad.base_rate = -1.0;
  CHECK(code_of([&] { open_session(testing::drone_keyframed(), std::nullopt, bad); }) ==
        ErrorCode::rejected_input);
}

TEST_CASE("rate changes") {
  PlaybackSession s = open_session(testing::drone_keyframed());
  s.set_rate(2.0, 2.0);
  s.tick(4.0);
  CHECK(s.exp_time() == 6.0);
  s.set_rate(4.0, 0.0);
  s.run_to_end();  // stalls
  CHECK(s.mode() == PlaybackMode::main);
  CHECK(s.exp_time() == 6.0);
  s.inject(speech(5.0, "paused?"));
  s.set_rate(6.0, 1.0);  // applies after the branch, then slowed by the question
  s.run_to_end();
  CHECK(num(*find_event(s, "branchClosed"), "rate") == doctest::Approx(0.8));
  CHECK(count_events(s, "rateChanged") == 3);
  CHECK(code_of([&] { s.set_rate(100.0, -1.0); }) == ErrorCode::rejected_input);
}

TEST_CASE("tick reports swept events and passed keyframes") {
  PlaybackSession s = open_session(testing::drone_keyframed());
  PlaybackState st = s.tick(2.0);
  CHECK(st.active_events == std::vector<std::string>{"ie-1"});
  st = s.tick(6.0);
  CHECK(st.keyframes_passed == std::vector<double>{5.0});
  // gaze ended at 3, activate and the power change were swept.
  CHECK(std::find(st.active_events.begin(), st.active_events.end(), "ie-1") != st.active_events.end());
  CHECK(std::find(st.active_events.begin(), st.active_events.end(), "sc-1") != st.active_events.end());
  st = s.tick(7.0);
  CHECK(st.keyframes_passed.empty());
  CHECK(st.active_events == std::vector<std::string>{"ie-2"});
}

TEST_CASE("custom responders script the branch") {
  PlaybackSession s = open_session(testing::drone_keyframed(), std::nullopt, {},
                                   std::make_shared<TwoStepResponder>());
  s.inject(speech(2.0, "show me?"));
  CHECK(count_events(s, "branchEventStarted") == 1);
  const PlaybackState st = s.tick(2.5);
  CHECK(st.branch_id == "br-1");
  CHECK(st.active_events == std::vector<std::string>{"e1"});
  s.tick(3.5);
  CHECK(count_events(s, "branchEventStarted") == 2);
  CHECK(find_event(s, "branchEventStarted", 1)->wall_time == 3.0);
  s.run_to_end();
  CHECK(find_event(s, "branchClosed")->wall_time == 2.0 + 3.0 + 2.0);
}

TEST_CASE("spatial re-anchoring on open") {
  const KeyframedDocument k = testing::drone_keyframed();
  SpaceAnchors target = k.document.header.anchors;
  for (auto& a : target) a.pose.position = a.pose.position + Vec3{10, 0, 0};
  PlaybackSession s = open_session(k, target);
  REQUIRE(s.alignment.has_value());
  CHECK(find_entity(s.kdoc().document, "drone")->pose.position.x == doctest::Approx(10.0));
}

TEST_CASE("export splices the branch into the experienced timeline") {
  PlaybackSession s = open_session(testing::drone_keyframed());
  s.inject(speech(4.0, "how do the rotors generate lift?"));
  s.run_to_end();
  const MaredDocument out = export_session(s);
  CHECK(validate_document(out).empty());

  std::vector<std::string> ids;
  for (const auto& seg : out.segments) ids.push_back(seg.id);
  CHECK(ids == std::vector<std::string>{"seg-1", "br-1", "seg-1-r1", "seg-2"});
  const auto* branch = find_segment(out, "br-1");
  CHECK(branch->label == "how do the rotors generate lift?");
  CHECK(branch->t_start == 4.0);
  CHECK(branch->t_end == doctest::Approx(11.0));
  CHECK(branch->participants == std::vector<std::string>{"instructor"});
  CHECK(find_segment(out, "seg-2")->t_end == doctest::Approx(29.75));

  const auto* activate = find_interaction(out, "ie-2");
  CHECK(activate->segment_id == "seg-1-r1");
  CHECK(activate->t_start == doctest::Approx(11.0));
  CHECK(activate->t_end == doctest::Approx(17.25));
  const auto* answer = find_interaction(out, "br-1-e1");
  REQUIRE(answer != nullptr);
  CHECK(answer->t_end == doctest::Approx(9.0));
  CHECK(answer->payload == "answer(how do the rotors generate lift?)");
}

TEST_CASE("property: clock contract under random tick and inject sequences") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int run = 0; run < 150; ++run) {
    const auto doc = testing::random_document(rng, 20);
    PlaybackConfig config;
    config.resume_policy = static_cast<ResumePolicy>(run % 3);
    config.branch_grace = unit(rng) * 3;
    PlaybackSession s = open_session(distill(doc, unit(rng)), std::nullopt, config);
    const double horizon = s.main_end() + 10;
    auto trace = testing::random_trace(rng, horizon, 10);
    double wall = 0;
    std::size_t next = 0;
    while (s.mode() != PlaybackMode::ended && wall < 5 * horizon) {
      wall += unit(rng) * 2;
      while (next < trace.size() && trace[next].wall_time <= wall) {
        try {
          s.inject(trace[next++]);
        } catch (const Error&) {
        }
      }
      if (unit(rng) < 0.1) s.set_rate(wall, 0.25 + unit(rng) * 2);
      s.tick(wall);
    }
    s.run_to_end();

    const auto& log = s.log();
    for (std::size_t i = 1; i < log.size(); ++i) {
      INFO(log[i - 1].type, " ", log[i - 1].wall_time, "/", log[i - 1].exp_time, " -> ",
           log[i].type, " ", log[i].wall_time, "/", log[i].exp_time, " policy ", run % 3);
      CHECK(log[i].wall_time >= log[i - 1].wall_time);
      if (log[i].type != "branchClosed") CHECK(log[i].exp_time >= log[i - 1].exp_time);
    }
    for (const auto& b : s.branches()) {
      REQUIRE(b.closed_wall.has_value());
      const double mid = (b.opened_wall + *b.closed_wall) / 2;
      CHECK(s.clock().exp_at(b.opened_wall) == s.clock().exp_at(mid));
    }
    const auto vs = validate_document(export_session(s));
    if (!vs.empty()) FAIL_CHECK(describe(vs.front()));
  }
}
