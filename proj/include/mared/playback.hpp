#pragma once

// Stage 3: adaptive playback of a keyframed document. A session maps wall
// time onto experience time through a piecewise-linear clock, pauses the
// main timeline while a user-triggered branch runs, and resumes at a
// keyframe when the branch closes.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mared/model.hpp"
#include "mared/spatial.hpp"

namespace mared {

enum class ResumePolicy { next_keyframe, pause_point, previous_keyframe };

struct PlaybackConfig {
  double base_rate = 1.0;
  double post_branch_slowdown = 0.8;  // applied after a question branch
  ResumePolicy resume_policy = ResumePolicy::next_keyframe;
  double branch_grace = 2.0;  // s of silence after the script before closing
  bool allow_scale = false;   // similarity instead of rigid spatial alignment
};

std::string_view to_string(ResumePolicy policy);
std::optional<ResumePolicy> parse_resume_policy(std::string_view name);

struct ClockSegment {
  double wall_start = 0.0;
  Seconds exp_start = 0.0;
  double rate = 1.0;

  friend bool operator==(const ClockSegment&, const ClockSegment&) = default;
};

/// Piecewise-linear wall -> experience time map.
class ClockMap {
 public:
  explicit ClockMap(ClockSegment first);

  /// Starts a new piece at `wall` (>= the last piece start). A piece starting
  /// at the same wall time as the last one replaces it.
  void set(double wall, Seconds exp, double rate);

  Seconds exp_at(double wall) const;
  double current_rate() const { return pieces_.back().rate; }
  const ClockSegment& last() const { return pieces_.back(); }
  const std::vector<ClockSegment>& pieces() const { return pieces_; }

  /// Wall time at which the last piece reaches `exp`; nullopt if it never
  /// does (rate 0 and exp beyond the piece start).
  std::optional<double> wall_reaching(Seconds exp) const;

 private:
  std::vector<ClockSegment> pieces_;
};

enum class PlaybackMode { main, branch, ended };
enum class InputKind { speech, gesture, gaze, selection };
enum class IntentKind { question, inspect, done, noop };

std::string_view to_string(PlaybackMode mode);
std::string_view to_string(InputKind kind);
std::string_view to_string(IntentKind kind);
std::optional<InputKind> parse_input_kind(std::string_view name);

struct InteractionInput {
  double wall_time = 0.0;
  InputKind kind = InputKind::speech;
  std::string payload;
  std::optional<std::string> target;

  friend bool operator==(const InteractionInput&,
                         const InteractionInput&) = default;
};

struct Intent {
  IntentKind kind = IntentKind::noop;
  std::string topic;

  friend bool operator==(const Intent&, const Intent&) = default;
};

/// Fixed rule table: a spoken line ending in '?' is a question about that
/// line, a gesture at an entity inspects it, selecting "done" ends a branch,
/// anything else is noop.
Intent classify_intent(const InteractionInput& input);

/// One scripted event inside a branch; times are relative to branch start.
struct BranchEvent {
  std::string id;
  std::string actor;
  Verb verb = Verb::speak;
  std::optional<std::string> target;
  Seconds t_start = 0.0;
  Seconds t_end = 0.0;
  std::optional<std::string> payload;

  friend bool operator==(const BranchEvent&, const BranchEvent&) = default;
};

enum class BranchStatus { open, closed };

struct Branch {
  std::string id;
  Seconds parent_exp_time = 0.0;
  double opened_wall = 0.0;
  Intent intent;
  std::vector<BranchEvent> script;
  BranchStatus status = BranchStatus::open;
  std::optional<Seconds> resume_at;
  std::optional<double> closed_wall;
  double last_input_wall = 0.0;

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct ResponderContext {
  const MaredDocument& document;
  const SemanticExperienceSegment* segment;  // segment playing at the pause
  Seconds exp_time;
};

/// Produces the event script of a new branch.
class Responder {
 public:
  virtual ~Responder() = default;
  virtual std::vector<BranchEvent> generate(const Intent& intent,
                                            const ResponderContext& context) const = 0;
};

/// One speak event by the paused segment's first recorded user, payload
/// "answer(<topic>)".
class TemplateResponder final : public Responder {
 public:
  explicit TemplateResponder(double duration = 5.0) : duration_(duration) {}
  std::vector<BranchEvent> generate(const Intent& intent,
                                    const ResponderContext& context) const override;

 private:
  double duration_;
};

using DetailValue = std::variant<std::string, double>;

struct SessionEvent {
  double wall_time = 0.0;
  Seconds exp_time = 0.0;
  std::string type;
  std::map<std::string, DetailValue> details;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

struct PlaybackState {
  double wall_time = 0.0;
  Seconds exp_time = 0.0;
  PlaybackMode mode = PlaybackMode::main;
  double rate = 0.0;
  std::vector<std::string> active_events;  // main or branch event ids
  std::vector<Seconds> keyframes_passed;   // since the previous tick
  std::optional<std::string> branch_id;
};

enum class InjectResult { branch_opened, branch_closed, ignored, rejected };

struct ResumeInfo {
  std::string branch_id;
  Seconds parent_exp_time = 0.0;
  Seconds resume_at = 0.0;
  double rate = 0.0;
};

class PlaybackSession {
 public:
  PlaybackSession(KeyframedDocument kdoc, PlaybackConfig config,
                  std::shared_ptr<const Responder> responder);

  /// Advances to `wall_now`, processing every internal transition (keyframe
  /// and segment crossings, branch closure, end of playback) at its exact
  /// wall time. Throws Error(monotonicity) if wall time regresses.
  PlaybackState tick(double wall_now);

  /// Opens a branch for a question or inspect input at the current wall time
  /// (after advancing to the input's wall time). noop/done inputs are logged
  /// and yield nullopt. Throws Error(nested_branch_rejected) while a branch is
  /// open.
  std::optional<Branch> create_new_branch(const InteractionInput& input);

  /// Closes the open branch now and resumes the main timeline according to
  /// the resume policy. Throws Error(no_branch_open).
  ResumeInfo return_to_main();

  /// Routes a live input: opens a branch, closes one on "done", or logs it
  /// as ignored/rejected.
  InjectResult inject(const InteractionInput& input);

  /// Sets the main playback rate from `wall` onward. During a branch the
  /// rate applies when the main timeline resumes.
  void set_rate(double wall, double rate);

  /// Wall time of the next internal transition, if any.
  std::optional<double> next_deadline() const;

  /// Follows internal transitions until playback ends (or stalls at rate 0).
  void run_to_end();

  bool branch_end_condition_met() const;

  PlaybackState state() const;
  const KeyframedDocument& kdoc() const { return kdoc_; }
  const PlaybackConfig& config() const { return config_; }
  const ClockMap& clock() const { return clock_; }
  PlaybackMode mode() const { return mode_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const Branch* open_branch() const;
  const std::vector<SessionEvent>& log() const { return log_; }
  double wall_time() const { return last_wall_; }
  Seconds exp_time() const;
  Seconds main_end() const { return main_end_; }

  std::optional<SpatialAdaptation> alignment;

 private:
  struct Mark {
    Seconds exp;
    int rank;
    std::string type;
    std::map<std::string, DetailValue> details;
  };

  void advance_to(double wall);
  void log_marks_upto(Seconds exp);
  void log_branch_script_upto(double wall);
  double branch_deadline(const Branch& b) const;
  Branch* mutable_open_branch();
  void append(double wall, Seconds exp, std::string type,
              std::map<std::string, DetailValue> details = {});
  Seconds resume_point(Seconds pause) const;
  const SemanticExperienceSegment* segment_at(Seconds exp) const;

  KeyframedDocument kdoc_;
  PlaybackConfig config_;
  std::shared_ptr<const Responder> responder_;
  ClockMap clock_;
  PlaybackMode mode_ = PlaybackMode::main;
  std::vector<Branch> branches_;
  std::vector<SessionEvent> log_;
  std::vector<Mark> marks_;
  std::size_t next_mark_ = 0;
  std::size_t next_script_event_ = 0;
  double last_wall_ = 0.0;
  double ended_wall_ = 0.0;
  Seconds main_end_ = 0.0;
  double rate_before_branch_ = 0.0;
  // Experience intervals swept since the last tick, for active-event reports.
  std::vector<std::pair<Seconds, Seconds>> pending_intervals_;
  Seconds unreported_from_ = 0.0;
  double last_tick_wall_ = 0.0;
  std::vector<Seconds> pending_keyframes_;
};

/// Starts a session at the earliest segment start, wall time 0. When a target
/// space is given every pose is re-anchored first.
/// Throws Error(invalid_document) or Error(nothing_to_play).
PlaybackSession open_session(
    const KeyframedDocument& kdoc,
    const std::optional<SpaceAnchors>& target_space = std::nullopt,
    const PlaybackConfig& config = {},
    std::shared_ptr<const Responder> responder = nullptr);

/// The session as experienced, on its wall-time axis: main segments and
/// events remapped through the clock, each branch spliced in as a segment
/// labeled with its intent topic (a paused segment is split around it).
/// Throws Error(session_still_active) unless the session has ended.
MaredDocument export_session(const PlaybackSession& session);

}  // namespace mared
