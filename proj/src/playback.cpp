#include "mared/playback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mared/error.hpp"
#include "mared/validation.hpp"

namespace mared {

std::string_view to_string(ResumePolicy policy) {
  switch (policy) {
    case ResumePolicy::next_keyframe: return "nextKeyframe";
    case ResumePolicy::pause_point: return "pausePoint";
    case ResumePolicy::previous_keyframe: return "previousKeyframe";
  }
  return "?";
}

std::optional<ResumePolicy> parse_resume_policy(std::string_view name) {
  for (auto p : {ResumePolicy::next_keyframe, ResumePolicy::pause_point,
                 ResumePolicy::previous_keyframe}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::string_view to_string(PlaybackMode mode) {
  switch (mode) {
    case PlaybackMode::main: return "main";
    case PlaybackMode::branch: return "branch";
    case PlaybackMode::ended: return "ended";
  }
  return "?";
}

std::string_view to_string(InputKind kind) {
  switch (kind) {
    case InputKind::speech: return "speech";
    case InputKind::gesture: return "gesture";
    case InputKind::gaze: return "gaze";
    case InputKind::selection: return "selection";
  }
  return "?";
}

std::string_view to_string(IntentKind kind) {
  switch (kind) {
    case IntentKind::question: return "question";
    case IntentKind::inspect: return "inspect";
    case IntentKind::done: return "done";
    case IntentKind::noop: return "noop";
  }
  return "?";
}

std::optional<InputKind> parse_input_kind(std::string_view name) {
  for (auto k : {InputKind::speech, InputKind::gesture, InputKind::gaze,
                 InputKind::selection}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ClockMap

ClockMap::ClockMap(ClockSegment first) : pieces_{first} {}

void ClockMap::set(double wall, Seconds exp, double rate) {
  if (wall == pieces_.back().wall_start) {
    pieces_.back() = {wall, exp, rate};
  } else {
    pieces_.push_back({wall, exp, rate});
  }
}

Seconds ClockMap::exp_at(double wall) const {
  auto it = std::upper_bound(
      pieces_.begin(), pieces_.end(), wall,
      [](double w, const ClockSegment& p) { return w < p.wall_start; });
  const ClockSegment& p = it == pieces_.begin() ? pieces_.front() : *std::prev(it);
  return p.exp_start + p.rate * std::max(0.0, wall - p.wall_start);
}

std::optional<double> ClockMap::wall_reaching(Seconds exp) const {
  const ClockSegment& p = pieces_.back();
  if (exp <= p.exp_start) return p.wall_start;
  if (p.rate <= 0.0) return std::nullopt;
  return p.wall_start + (exp - p.exp_start) / p.rate;
}

// ---------------------------------------------------------------------------
// Intent and responder

Intent classify_intent(const InteractionInput& input) {
  switch (input.kind) {
    case InputKind::speech: {
      auto end = input.payload.find_last_not_of(" \t\r\n");
      if (end != std::string::npos && input.payload[end] == '?') {
        return {IntentKind::question, input.payload};
      }
      break;
    }
    case InputKind::gesture:
      if (input.target && !input.target->empty()) {
        return {IntentKind::inspect, *input.target};
      }
      break;
    case InputKind::selection:
      if (input.payload == "done") return {IntentKind::done, {}};
      break;
    case InputKind::gaze:
      break;
  }
  return {IntentKind::noop, {}};
}

std::vector<BranchEvent> TemplateResponder::generate(
    const Intent& intent, const ResponderContext& context) const {
  const MaredDocument& doc = context.document;
  const Entity* speaker = nullptr;
  if (context.segment != nullptr) {
    for (const auto& id : context.segment->participants) {
      const Entity* e = find_entity(doc, id);
      if (e != nullptr && e->kind == EntityKind::user) {
        speaker = e;
        break;
      }
    }
  }
  if (speaker == nullptr) {
    for (const auto& e : doc.entities) {
      if (e.kind == EntityKind::user) {
        speaker = &e;
        break;
      }
    }
  }
  if (speaker == nullptr) return {};

  BranchEvent answer;
  answer.id = "e1";
  answer.actor = speaker->id;
  answer.verb = Verb::speak;
  answer.t_start = 0.0;
  answer.t_end = duration_;
  answer.payload = "answer(" + intent.topic + ")";
  return {answer};
}

// ---------------------------------------------------------------------------
// PlaybackSession

namespace {

constexpr int kRankExit = 0;
constexpr int kRankEnter = 1;
constexpr int kRankKeyframe = 2;

void check_config(const PlaybackConfig& c) {
  auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
  if (bad(c.base_rate) || bad(c.post_branch_slowdown) || bad(c.branch_grace)) {
    throw Error(ErrorCode::rejected_input,
                "playback rates and grace must be finite and non-negative");
  }
}

}  // namespace

PlaybackSession::PlaybackSession(KeyframedDocument kdoc, PlaybackConfig config,
                                 std::shared_ptr<const Responder> responder)
    : kdoc_(std::move(kdoc)),
      config_(config),
      responder_(responder ? std::move(responder)
                           : std::make_shared<TemplateResponder>()),
      clock_(ClockSegment{0.0, 0.0, config.base_rate}) {
  check_config(config_);
  const auto& segments = kdoc_.document.segments;
  if (segments.empty()) {
    throw Error(ErrorCode::nothing_to_play, "document has no segments");
  }
  Seconds start = segments.front().t_start;
  main_end_ = segments.front().t_end;
  for (const auto& s : segments) {
    start = std::min(start, s.t_start);
    main_end_ = std::max(main_end_, s.t_end);
  }
  clock_ = ClockMap(ClockSegment{0.0, start, config_.base_rate});

  for (const auto& s : segments) {
    marks_.push_back({s.t_start, kRankEnter, "segmentEntered",
                      {{"segmentId", s.id}, {"label", s.label}}});
    marks_.push_back({s.t_end, kRankExit, "segmentExited", {{"segmentId", s.id}}});
  }
  for (const auto& k : kdoc_.keyframes) {
    marks_.push_back({k.t, kRankKeyframe, "keyframePassed",
                      {{"t", k.t}, {"score", k.score}}});
  }
  std::stable_sort(marks_.begin(), marks_.end(), [](const Mark& a, const Mark& b) {
    if (a.exp != b.exp) return a.exp < b.exp;
    return a.rank < b.rank;
  });
  while (next_mark_ < marks_.size() && marks_[next_mark_].exp < start) ++next_mark_;

  unreported_from_ = start;
  log_marks_upto(start);
}

Seconds PlaybackSession::exp_time() const {
  if (mode_ == PlaybackMode::ended) return main_end_;
  const Seconds exp = clock_.exp_at(last_wall_);
  return mode_ == PlaybackMode::main ? std::min(exp, main_end_) : exp;
}

const Branch* PlaybackSession::open_branch() const {
  if (!branches_.empty() && branches_.back().status == BranchStatus::open) {
    return &branches_.back();
  }
  return nullptr;
}

Branch* PlaybackSession::mutable_open_branch() {
  return const_cast<Branch*>(std::as_const(*this).open_branch());
}

void PlaybackSession::append(double wall, Seconds exp, std::string type,
                             std::map<std::string, DetailValue> details) {
  log_.push_back({wall, exp, std::move(type), std::move(details)});
}

double PlaybackSession::branch_deadline(const Branch& b) const {
  double script_end = b.opened_wall;
  for (const auto& e : b.script) script_end = std::max(script_end, b.opened_wall + e.t_end);
  return std::max(script_end, b.last_input_wall) + config_.branch_grace;
}

bool PlaybackSession::branch_end_condition_met() const {
  const Branch* b = open_branch();
  return b != nullptr && last_wall_ >= branch_deadline(*b);
}

void PlaybackSession::log_marks_upto(Seconds exp) {
  const ClockSegment& piece = clock_.last();
  while (next_mark_ < marks_.size() && marks_[next_mark_].exp <= exp) {
    const Mark& m = marks_[next_mark_++];
    double wall = piece.wall_start;
    if (m.exp > piece.exp_start && piece.rate > 0.0) {
      wall = std::min(last_wall_, piece.wall_start + (m.exp - piece.exp_start) / piece.rate);
    }
    if (!log_.empty()) wall = std::max(wall, log_.back().wall_time);
    if (m.type == "keyframePassed") pending_keyframes_.push_back(m.exp);
    // Marks jumped over by a forward resume are experienced at the resume point.
    append(wall, std::max(m.exp, piece.exp_start), m.type, m.details);
  }
}

void PlaybackSession::log_branch_script_upto(double wall) {
  const Branch* b = open_branch();
  if (b == nullptr) return;
  while (next_script_event_ < b->script.size() &&
         b->opened_wall + b->script[next_script_event_].t_start <= wall) {
    const BranchEvent& e = b->script[next_script_event_++];
    std::map<std::string, DetailValue> details{
        {"branchId", b->id}, {"eventId", e.id}, {"actor", e.actor},
        {"verb", std::string(to_string(e.verb))}};
    if (e.payload) details.emplace("payload", *e.payload);
    append(b->opened_wall + e.t_start, b->parent_exp_time, "branchEventStarted",
           std::move(details));
  }
}

void PlaybackSession::advance_to(double wall) {
  while (true) {
    if (mode_ == PlaybackMode::ended) {
      last_wall_ = std::max(last_wall_, wall);
      return;
    }
    if (mode_ == PlaybackMode::branch) {
      const double deadline = branch_deadline(*open_branch());
      if (deadline <= wall) {
        log_branch_script_upto(deadline);
        last_wall_ = std::max(last_wall_, deadline);
        return_to_main();
        continue;
      }
      log_branch_script_upto(wall);
      last_wall_ = std::max(last_wall_, wall);
      return;
    }
    const std::optional<double> end_wall = clock_.wall_reaching(main_end_);
    if (end_wall && *end_wall <= wall) {
      last_wall_ = std::max(last_wall_, *end_wall);
      log_marks_upto(main_end_);
      mode_ = PlaybackMode::ended;
      ended_wall_ = last_wall_;
      append(last_wall_, main_end_, "sessionEnded");
      continue;
    }
    last_wall_ = std::max(last_wall_, wall);
    log_marks_upto(exp_time());
    return;
  }
}

PlaybackState PlaybackSession::state() const {
  PlaybackState s;
  s.wall_time = last_wall_;
  s.exp_time = exp_time();
  s.mode = mode_;
  s.keyframes_passed = pending_keyframes_;

  if (const Branch* b = open_branch()) {
    s.rate = 0.0;
    s.branch_id = b->id;
    const double from = std::max(last_tick_wall_, b->opened_wall) - b->opened_wall;
    const double to = last_wall_ - b->opened_wall;
    for (const auto& e : b->script) {
      if (e.t_start <= to && from <= e.t_end) s.active_events.push_back(e.id);
    }
    return s;
  }

  s.rate = mode_ == PlaybackMode::main ? clock_.current_rate() : 0.0;
  std::vector<std::pair<Seconds, Seconds>> swept = pending_intervals_;
  swept.emplace_back(unreported_from_, s.exp_time);
  auto touched = [&](Seconds a, Seconds b) {
    return std::any_of(swept.begin(), swept.end(), [&](const auto& iv) {
      return a <= iv.second && iv.first <= b;
    });
  };
  const MaredDocument& doc = kdoc_.document;
  for (const auto& e : doc.interaction_events) {
    if (touched(e.t_start, e.t_end)) s.active_events.push_back(e.id);
  }
  for (const auto& e : doc.state_change_events) {
    if (touched(e.t_start, e.t_end)) s.active_events.push_back(e.id);
  }
  return s;
}

PlaybackState PlaybackSession::tick(double wall_now) {
  if (!(wall_now >= last_wall_)) {
    throw Error(ErrorCode::monotonicity,
                "wall time " + std::to_string(wall_now) + " precedes " +
                    std::to_string(last_wall_));
  }
  advance_to(wall_now);
  PlaybackState s = state();
  pending_keyframes_.clear();
  last_tick_wall_ = last_wall_;
  if (mode_ != PlaybackMode::branch) {
    pending_intervals_.clear();
    unreported_from_ = s.exp_time;
  }
  return s;
}

const SemanticExperienceSegment* PlaybackSession::segment_at(Seconds exp) const {
  const SemanticExperienceSegment* found = nullptr;
  for (const auto& s : kdoc_.document.segments) {
    if (s.t_start <= exp && exp <= s.t_end) found = &s;
  }
  return found;
}

std::optional<Branch> PlaybackSession::create_new_branch(
    const InteractionInput& input) {
  if (input.wall_time > last_wall_) advance_to(input.wall_time);
  const Intent intent = classify_intent(input);
  const double now = last_wall_;
  const std::map<std::string, DetailValue> input_details{
      {"kind", std::string(to_string(input.kind))}, {"payload", input.payload}};

  if (mode_ == PlaybackMode::ended) {
    auto details = input_details;
    details.emplace("reason", "ended");
    append(now, exp_time(), "inputIgnored", std::move(details));
    return std::nullopt;
  }
  if (Branch* open = mutable_open_branch()) {
    open->last_input_wall = now;
    append(now, exp_time(), "nestedBranchRejected", input_details);
    throw Error(ErrorCode::nested_branch_rejected,
                "branch " + open->id + " is still open");
  }
  if (intent.kind == IntentKind::noop || intent.kind == IntentKind::done) {
    auto details = input_details;
    details.emplace("reason", std::string(to_string(intent.kind)));
    append(now, exp_time(), "inputIgnored", std::move(details));
    return std::nullopt;
  }

  const Seconds pause = exp_time();
  rate_before_branch_ = clock_.current_rate();
  clock_.set(now, pause, 0.0);

  Branch b;
  b.id = "br-" + std::to_string(branches_.size() + 1);
  b.parent_exp_time = pause;
  b.opened_wall = now;
  b.intent = intent;
  b.last_input_wall = now;
  b.script = responder_->generate(
      intent, ResponderContext{kdoc_.document, segment_at(pause), pause});
  for (auto& e : b.script) {
    e.t_start = std::max(0.0, e.t_start);
    e.t_end = std::max(e.t_start, e.t_end);
  }
  std::stable_sort(b.script.begin(), b.script.end(),
                   [](const auto& x, const auto& y) { return x.t_start < y.t_start; });

  branches_.push_back(b);
  mode_ = PlaybackMode::branch;
  next_script_event_ = 0;
  append(now, pause, "branchOpened",
         {{"branchId", b.id},
          {"intent", std::string(to_string(intent.kind))},
          {"topic", intent.topic},
          {"parentExpTime", pause}});
  log_branch_script_upto(now);
  return b;
}

Seconds PlaybackSession::resume_point(Seconds pause) const {
  const auto& keyframes = kdoc_.keyframes;
  switch (config_.resume_policy) {
    case ResumePolicy::pause_point:
      return pause;
    case ResumePolicy::previous_keyframe: {
      Seconds best = pause;
      bool found = false;
      for (const auto& k : keyframes) {
        if (k.t <= pause) {
          best = found ? std::max(best, k.t) : k.t;
          found = true;
        }
      }
      return best;
    }
    case ResumePolicy::next_keyframe: {
      auto it = std::find_if(keyframes.begin(), keyframes.end(),
                             [&](const Keyframe& k) { return k.t >= pause; });
      if (it == keyframes.end()) return pause;
      Seconds resume = std::min(it->t, std::max(pause, main_end_));
      // Never jump over an interaction that has not started yet. State
      // changes are effects; their keyframe sits at their end.
      for (const auto& e : kdoc_.document.interaction_events) {
        if (e.t_start > pause) resume = std::min(resume, e.t_start);
      }
      return resume;
    }
  }
  return pause;
}

ResumeInfo PlaybackSession::return_to_main() {
  Branch* b = mutable_open_branch();
  if (b == nullptr) throw Error(ErrorCode::no_branch_open, "no branch is open");

  const double now = last_wall_;
  const Seconds resume = resume_point(b->parent_exp_time);
  const double rate = b->intent.kind == IntentKind::question
                          ? rate_before_branch_ * config_.post_branch_slowdown
                          : rate_before_branch_;
  b->status = BranchStatus::closed;
  b->resume_at = resume;
  b->closed_wall = now;
  ResumeInfo info{b->id, b->parent_exp_time, resume, rate};

  clock_.set(now, resume, rate);
  mode_ = PlaybackMode::main;
  pending_intervals_.emplace_back(unreported_from_, b->parent_exp_time);
  unreported_from_ = resume;
  append(now, resume, "branchClosed",
         {{"branchId", b->id},
          {"parentExpTime", b->parent_exp_time},
          {"resumeAt", resume},
          {"rate", rate}});
  advance_to(now);
  return info;
}

InjectResult PlaybackSession::inject(const InteractionInput& input) {
  if (input.wall_time > last_wall_) advance_to(input.wall_time);
  const Intent intent = classify_intent(input);

  if (Branch* open = mutable_open_branch()) {
    open->last_input_wall = last_wall_;
    if (intent.kind == IntentKind::done) {
      return_to_main();
      return InjectResult::branch_closed;
    }
    if (intent.kind == IntentKind::noop) {
      append(last_wall_, exp_time(), "inputIgnored",
             {{"kind", std::string(to_string(input.kind))},
              {"payload", input.payload},
              {"reason", "noop"}});
      return InjectResult::ignored;
    }
    try {
      create_new_branch(input);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::nested_branch_rejected) throw;
    }
    return InjectResult::rejected;
  }
  return create_new_branch(input) ? InjectResult::branch_opened
                                  : InjectResult::ignored;
}

void PlaybackSession::set_rate(double wall, double rate) {
  if (!std::isfinite(rate) || rate < 0.0) {
    throw Error(ErrorCode::rejected_input, "rate must be finite and non-negative");
  }
  if (wall > last_wall_) advance_to(wall);
  if (mode_ == PlaybackMode::ended) return;
  if (mode_ == PlaybackMode::branch) {
    rate_before_branch_ = rate;
  } else {
    clock_.set(last_wall_, exp_time(), rate);
  }
  append(last_wall_, exp_time(), "rateChanged", {{"rate", rate}});
  advance_to(last_wall_);
}

std::optional<double> PlaybackSession::next_deadline() const {
  switch (mode_) {
    case PlaybackMode::ended:
      return std::nullopt;
    case PlaybackMode::branch:
      return std::max(last_wall_, branch_deadline(*open_branch()));
    case PlaybackMode::main: {
      auto end = clock_.wall_reaching(main_end_);
      if (!end) return std::nullopt;
      return std::max(last_wall_, *end);
    }
  }
  return std::nullopt;
}

void PlaybackSession::run_to_end() {
  while (auto deadline = next_deadline()) advance_to(*deadline);
}

PlaybackSession open_session(const KeyframedDocument& kdoc,
                             const std::optional<SpaceAnchors>& target_space,
                             const PlaybackConfig& config,
                             std::shared_ptr<const Responder> responder) {
  if (auto violations = validate_keyframed(kdoc); !violations.empty()) {
    std::string message = "cannot play an invalid document:";
    for (const auto& v : violations) message += " " + describe(v) + ";";
    throw Error(ErrorCode::invalid_document, message);
  }
  if (kdoc.document.segments.empty()) {
    throw Error(ErrorCode::nothing_to_play, "document has no segments");
  }
  if (!target_space) return PlaybackSession(kdoc, config, std::move(responder));

  SpatialAdaptation adapted = adapt_spatial(kdoc, *target_space, config.allow_scale);
  PlaybackSession session(adapted.kdoc, config, std::move(responder));
  session.alignment = std::move(adapted);
  return session;
}

// ---------------------------------------------------------------------------
// Export

namespace {

// Experience -> wall lookups over the played (rate > 0) clock pieces.
class PlayedTimeline {
 public:
  PlayedTimeline(const ClockMap& clock, Seconds main_end, double ended_wall)
      : ended_wall_(ended_wall) {
    const auto& pieces = clock.pieces();
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      const ClockSegment& p = pieces[k];
      if (p.rate <= 0.0) continue;
      const bool last = k + 1 == pieces.size();
      const double wall_end = last ? ended_wall : pieces[k + 1].wall_start;
      const Seconds exp_end =
          last ? main_end : p.exp_start + p.rate * (wall_end - p.wall_start);
      played_.push_back({p.wall_start, p.exp_start, p.rate, exp_end});
    }
  }

  // First wall time at which experience time reached x.
  double first_reach(Seconds x) const {
    for (const auto& p : played_) {
      if (x <= p.exp_end) return x < p.exp_start ? p.wall_start : interpolate(p, x);
    }
    return ended_wall_;
  }

  // Last wall time at which experience time was still at or below x.
  double last_at(Seconds x) const {
    for (const auto& p : played_) {
      if (p.exp_end > x) return x < p.exp_start ? p.wall_start : interpolate(p, x);
    }
    return ended_wall_;
  }

 private:
  struct Piece {
    double wall_start;
    Seconds exp_start;
    double rate;
    Seconds exp_end;
  };

  static double interpolate(const Piece& p, Seconds x) {
    return p.wall_start + (x - p.exp_start) / p.rate;
  }

  std::vector<Piece> played_;
  double ended_wall_;
};

struct ExportPart {
  SemanticExperienceSegment segment;
  std::string source_id;
};

}  // namespace

MaredDocument export_session(const PlaybackSession& session) {
  if (session.mode() != PlaybackMode::ended) {
    throw Error(ErrorCode::session_still_active, "session has not ended");
  }
  const MaredDocument& source = session.kdoc().document;
  const PlayedTimeline timeline(session.clock(), session.main_end(),
                                session.wall_time());
  std::vector<const Branch*> branches;
  for (const auto& b : session.branches()) {
    if (b.closed_wall) branches.push_back(&b);
  }

  MaredDocument out;
  out.mared_version = source.mared_version;
  out.header = source.header;
  out.entities = source.entities;
  out.extensions = source.extensions;

  std::vector<ExportPart> parts;
  for (const auto& s : source.segments) {
    double start = timeline.last_at(s.t_start);
    int index = 0;
    auto emit = [&](double from, double to) {
      if (!(to > from)) return;
      ExportPart part{s, s.id};
      part.segment.id = index == 0 ? s.id : s.id + "-r" + std::to_string(index);
      part.segment.t_start = from;
      part.segment.t_end = to;
      parts.push_back(std::move(part));
      ++index;
    };
    for (const Branch* b : branches) {
      if (s.t_start < b->parent_exp_time && b->parent_exp_time < s.t_end) {
        emit(start, b->opened_wall);
        start = std::max(start, *b->closed_wall);
      }
    }
    emit(start, timeline.first_reach(s.t_end));
  }

  auto part_for = [&](const std::string& segment_id, double t) -> const ExportPart* {
    const ExportPart* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : parts) {
      if (p.source_id != segment_id) continue;
      if (p.segment.t_start <= t && t <= p.segment.t_end) return &p;
      const double d = std::min(std::abs(t - p.segment.t_start),
                                std::abs(t - p.segment.t_end));
      if (d < best) {
        best = d;
        nearest = &p;
      }
    }
    if (nearest != nullptr) return nearest;
    for (const auto& p : parts) {
      if (p.segment.t_start <= t && t <= p.segment.t_end) return &p;
    }
    return parts.empty() ? nullptr : &parts.front();
  };

  for (const auto& e : source.interaction_events) {
    const ExportPart* part = part_for(e.segment_id, timeline.last_at(e.t_start));
    if (part == nullptr) continue;
    InteractionEvent x = e;
    x.segment_id = part->segment.id;
    x.t_start = std::clamp(timeline.last_at(e.t_start), part->segment.t_start,
                           part->segment.t_end);
    x.t_end = std::clamp(timeline.first_reach(e.t_end), x.t_start,
                         part->segment.t_end);
    out.interaction_events.push_back(std::move(x));
  }

  for (const auto& p : parts) out.segments.push_back(p.segment);

  for (const Branch* b : branches) {
    const double open = b->opened_wall;
    const double close = *b->closed_wall;
    if (!(close > open)) continue;
    SemanticExperienceSegment seg;
    seg.id = b->id;
    seg.label = b->intent.topic;
    seg.t_start = open;
    seg.t_end = close;
    std::set<std::string> participants;
    std::set<std::string> objects;
    if (b->intent.kind == IntentKind::inspect &&
        find_entity(source, b->intent.topic) != nullptr) {
      objects.insert(b->intent.topic);
    }
    for (const auto& e : b->script) {
      const double t0 = open + e.t_start;
      if (t0 > close || find_entity(source, e.actor) == nullptr) continue;
      participants.insert(e.actor);
      if (e.target) objects.insert(*e.target);
      InteractionEvent x;
      x.id = b->id + "-" + e.id;
      x.segment_id = seg.id;
      x.actor = e.actor;
      x.verb = e.verb;
      x.target = e.target;
      x.t_start = t0;
      x.t_end = std::min(close, open + e.t_end);
      x.payload = e.payload;
      out.interaction_events.push_back(std::move(x));
    }
    seg.participants.assign(participants.begin(), participants.end());
    seg.key_objects.assign(objects.begin(), objects.end());
    out.segments.push_back(std::move(seg));
  }

  for (const auto& s : source.state_change_events) {
    StateChangeEvent x = s;
    x.t_start = timeline.last_at(s.t_start);
    x.t_end = std::max(x.t_start, timeline.first_reach(s.t_end));
    x.trajectory.clear();
    for (const auto& sample : s.trajectory) {
      double w = sample.t == s.t_start ? x.t_start : timeline.first_reach(sample.t);
      w = std::clamp(w, x.t_start, x.t_end);
      if (x.trajectory.empty() || w > x.trajectory.back().t) {
        x.trajectory.push_back({w, sample.pose});
      }
    }
    out.state_change_events.push_back(std::move(x));
  }

  auto by_start = [](const auto& a, const auto& b) { return a.t_start < b.t_start; };
  std::stable_sort(out.segments.begin(), out.segments.end(), by_start);
  std::stable_sort(out.interaction_events.begin(), out.interaction_events.end(),
                   by_start);
  std::stable_sort(out.state_change_events.begin(), out.state_change_events.end(),
                   by_start);
  return out;
}

}  // namespace mared
