#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gcs {

enum class Errc {
  InvalidMagnitude,
  EmptyDatagram,
  UnknownCommand,
  ConnectTimeout,
  BindFailure,
  ReplyTimeout,
  DroneError,
  NotInSdkMode,
  StreamOff,
  Overflow,
  InvalidWindow,
  BadKernel,
  BadParams,
  TypeMismatch,
  BadPipeline,
  MalformedFrame,
  NoFrameYet,
  IoFailure,
  MalformedPpm,
  NotFound,
  SideOutOfRange,
  BadPlan,
  BadEndpoint,
};

std::string_view to_string(Errc code);

/// Base exception for everything in the ground station. Callers branch on
/// code(); what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by apply_pipeline; step() is the 1-based index of the offending op.
class PipelineError : public Error {
 public:
  PipelineError(Errc code, std::size_t step, const std::string& detail)
      : Error(code, detail), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace gcs
