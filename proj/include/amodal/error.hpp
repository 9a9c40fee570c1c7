#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace amodal {

enum class ErrorKind {
  InvalidInput,
  DimensionError,
  EmptyMask,
  InvariantViolation,
  FormatError,
  IoError,
  InsufficientSupport,
  DegenerateSupport,
  FullyOccluded,
  DepthOrderViolation,
  InvalidSpec,
  InvalidDepth,
  NumericalError,
  MissingPrediction,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed raster or manifest content. `offset()` is the byte position
/// where decoding stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::uint64_t offset);

  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::uint64_t offset_;
};

}  // namespace amodal
