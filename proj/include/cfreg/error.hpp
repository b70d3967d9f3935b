#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfreg {

enum class ErrorKind {
  DegenerateInput,
  DimensionMismatch,
  InvalidArgument,
  InvalidK,
  SingularSystem,
  UnsupportedKernel,
  ParseError,
  MixedDimensions,
  UnsupportedFormat,
  UnsupportedDimension,
  EmptyCorrespondence,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` tells callers (the CLI in
/// particular) which failure happened without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cfreg
