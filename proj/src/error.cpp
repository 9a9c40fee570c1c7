#include "amodal/error.hpp"

namespace amodal {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InsufficientSupport: return "InsufficientSupport";
    case ErrorKind::DegenerateSupport: return "DegenerateSupport";
    case ErrorKind::FullyOccluded: return "FullyOccluded";
    case ErrorKind::DepthOrderViolation: return "DepthOrderViolation";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidDepth: return "InvalidDepth";
    case ErrorKind::NumericalError: return "NumericalError";
    case ErrorKind::MissingPrediction: return "MissingPrediction";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

FormatError::FormatError(const std::string& message, std::uint64_t offset)
    : Error(ErrorKind::FormatError, message + " (at byte " + std::to_string(offset) + ")"),
      detail_(message),
      offset_(offset) {}

}  // namespace amodal
