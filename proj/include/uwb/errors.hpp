#pragma once

#include <stdexcept>
#include <string>

namespace uwb {

/// Stable error classes. Values double as CLI exit codes and C-API status
/// codes, so they must not be renumbered.
enum class ErrorCode : int {
  ok = 0,
  config_error = 1,
  io_error = 2,
  format_error = 3,
  version_mismatch = 4,
  insufficient_tags = 5,
  missing_truth = 6,
  rank_deficient = 7,
  non_convergence = 8,
  insufficient_data = 9,
  degenerate_domain = 10,
  degenerate_interval = 11,
  degenerate_sigma = 12,
  singular_geometry = 13,
  empty_dataset = 14,
  no_positive_root = 15,
  usage_error = 16,
  internal_error = 17,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace uwb
