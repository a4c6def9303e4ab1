#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fastlight {

enum class ErrorCode {
  GridTooCoarse,
  PulseExceedsGrid,
  InvalidGrid,
  SizeMismatch,
  ZeroPulse,
  OutsideGrid,
  EmpiricalModeMisuse,
  ProbeOutsideBand,
  BandViolation,
  GridMismatch,
  GainBelowUnity,
  LengthMismatch,
  GateOutsideGrid,
  NonUniformDelays,
  OutOfBounds,
  StackTooShort,
  NoPrePulseRegion,
  AxisMismatch,
  UnknownParameter,
  MissingSeries,
  InvalidSpec,
  Config,
  Numerical,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::GridTooCoarse: return "grid-too-coarse";
    case ErrorCode::PulseExceedsGrid: return "pulse-exceeds-grid";
    case ErrorCode::InvalidGrid: return "invalid-grid";
    case ErrorCode::SizeMismatch: return "size-mismatch";
    case ErrorCode::ZeroPulse: return "zero-pulse";
    case ErrorCode::OutsideGrid: return "outside-grid";
    case ErrorCode::EmpiricalModeMisuse: return "empirical-mode-misuse";
    case ErrorCode::ProbeOutsideBand: return "probe-outside-band";
    case ErrorCode::BandViolation: return "band-violation";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::GainBelowUnity: return "gain-below-unity";
    case ErrorCode::LengthMismatch: return "length-mismatch";
    case ErrorCode::GateOutsideGrid: return "gate-outside-grid";
    case ErrorCode::NonUniformDelays: return "non-uniform-delays";
    case ErrorCode::OutOfBounds: return "out-of-bounds";
    case ErrorCode::StackTooShort: return "stack-too-short";
    case ErrorCode::NoPrePulseRegion: return "no-pre-pulse-region";
    case ErrorCode::AxisMismatch: return "axis-mismatch";
    case ErrorCode::UnknownParameter: return "unknown-parameter";
    case ErrorCode::MissingSeries: return "missing-series";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::Config: return "config-error";
    case ErrorCode::Numerical: return "numerical-failure";
    case ErrorCode::Io: return "io-error";
  }
  return "unknown";
}

}  // namespace fastlight
