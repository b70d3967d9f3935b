#include "cfreg/error.hpp"

namespace cfreg {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidK: return "InvalidK";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::UnsupportedKernel: return "UnsupportedKernel";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MixedDimensions: return "MixedDimensions";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorKind::EmptyCorrespondence: return "EmptyCorrespondence";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace cfreg
