#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pointnls {

enum class ErrorKind {
  invalid_field,
  incompatible_grids,
  domain,
  under_resolved_profile,
  singular_kernel,
  step_size_too_large,
  window,
  interpolation_unsupported,
  truncation_domain,
  validation,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_field: return "invalid-field";
    case ErrorKind::incompatible_grids: return "incompatible-grids";
    case ErrorKind::domain: return "domain";
    case ErrorKind::under_resolved_profile: return "under-resolved-profile";
    case ErrorKind::singular_kernel: return "singular-kernel";
    case ErrorKind::step_size_too_large: return "step-size-too-large";
    case ErrorKind::window: return "window";
    case ErrorKind::interpolation_unsupported: return "interpolation-unsupported";
    case ErrorKind::truncation_domain: return "truncation-domain";
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pointnls
