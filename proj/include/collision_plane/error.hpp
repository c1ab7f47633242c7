#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace collision_plane {

enum class ErrorCode {
  InvalidInput,
  BehindCamera,
  DegenerateGeometry,
  StationaryPoint,
  ParallelToHorizon,
  InsufficientData,
  SingularGeometry,
  DegenerateConfiguration,
  DegenerateFlow,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::StationaryPoint: return "StationaryPoint";
    case ErrorCode::ParallelToHorizon: return "ParallelToHorizon";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SingularGeometry: return "SingularGeometry";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DegenerateFlow: return "DegenerateFlow";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code. Every failure raised by
/// the library is one of these.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace collision_plane
