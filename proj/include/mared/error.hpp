#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mared {

enum class ErrorCode {
  rejected_input,
  truncated_action,
  malformed_markers,
  uncovered_event,
  scoring_error,
  invalid_document,
  parse_error,
  version_mismatch,
  nothing_to_play,
  monotonicity,
  nested_branch_rejected,
  no_branch_open,
  insufficient_anchors,
  session_still_active,
  usage,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mared
