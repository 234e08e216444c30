#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmcyto {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveSigma,
  EmptyOutput,
  QOutOfRange,
  DegenerateInput,
  NoValidOverlap,
  TooSmall,
  Border,
  OutOfMovingBounds,
  UnknownPatient,
  BadPartitionCount,
  ShiftTooLarge,
  LengthMismatch,
  EmptyCounts,
  SingleClass,
  EmptyPatient,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mmcyto
