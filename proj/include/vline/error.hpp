#pragma once

#include <stdexcept>
#include <string>

namespace vline {

enum class ErrorKind {
  InvalidArgument,
  DegenerateFrame,
  AsymmetricCone,
  InvalidWeight,
  DimensionMismatch,
  GridMismatch,
  FrameMismatch,
  StencilTooSmall,
  NotUpwardFrame,
  NegativeSinogram,
  FormatError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so that front ends can
// map it to an exit status; what() is prefixed with the kind's name.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vline
