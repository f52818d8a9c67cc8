#include "vline/error.hpp"

namespace vline {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DegenerateFrame: return "DegenerateFrame";
    case ErrorKind::AsymmetricCone: return "AsymmetricCone";
    case ErrorKind::InvalidWeight: return "InvalidWeight";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::FrameMismatch: return "FrameMismatch";
    case ErrorKind::StencilTooSmall: return "StencilTooSmall";
    case ErrorKind::NotUpwardFrame: return "NotUpwardFrame";
    case ErrorKind::NegativeSinogram: return "NegativeSinogram";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace vline
