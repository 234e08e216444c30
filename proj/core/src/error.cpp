#include "mmcyto/error.hpp"

namespace mmcyto {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::EmptyOutput: return "EmptyOutput";
    case ErrorCode::QOutOfRange: return "QOutOfRange";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NoValidOverlap: return "NoValidOverlap";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::Border: return "Border";
    case ErrorCode::OutOfMovingBounds: return "OutOfMovingBounds";
    case ErrorCode::UnknownPatient: return "UnknownPatient";
    case ErrorCode::BadPartitionCount: return "BadPartitionCount";
    case ErrorCode::ShiftTooLarge: return "ShiftTooLarge";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyCounts: return "EmptyCounts";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyPatient: return "EmptyPatient";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace mmcyto
