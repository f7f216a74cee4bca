#include "cproj/error.hpp"

namespace corrproj {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return "invalid-argument";
    case ErrorKind::NumericFailure:
      return "numeric-failure";
    case ErrorKind::DegeneratePose:
      return "degenerate-pose";
    case ErrorKind::EngineInvalid:
      return "engine-invalid";
    case ErrorKind::InvalidConfiguration:
      return "invalid-configuration";
    case ErrorKind::Format:
      return "format";
    case ErrorKind::Io:
      return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

DegeneratePoseError::DegeneratePoseError(std::size_t bone, const std::string& message)
    : Error(ErrorKind::DegeneratePose, message), bone_(bone) {}

void throw_error(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

} // namespace corrproj
