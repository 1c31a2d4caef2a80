#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ccoh {

enum class ErrorKind {
  invalid_parameter,
  degenerate_labeling,
  invalid_frame,
  elastic_instability,
  unsupported_order,
  not_converged,
  degenerate_branch,
  step_size,
  no_decay,
  unreachable_frequency,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::degenerate_labeling: return "degenerate-labeling";
    case ErrorKind::invalid_frame: return "invalid-frame";
    case ErrorKind::elastic_instability: return "elastic-instability";
    case ErrorKind::unsupported_order: return "unsupported-order";
    case ErrorKind::not_converged: return "not-converged";
    case ErrorKind::degenerate_branch: return "degenerate-branch";
    case ErrorKind::step_size: return "step-size";
    case ErrorKind::no_decay: return "no-decay";
    case ErrorKind::unreachable_frequency: return "unreachable-frequency";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ccoh
