#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corrproj {

enum class ErrorKind {
  InvalidArgument,
  NumericFailure,
  DegeneratePose,
  EngineInvalid,
  InvalidConfiguration,
  Format,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind is
/// machine-readable; the message is a single line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept {
    return kind_;
  }

 private:
  ErrorKind kind_;
};

/// Raised by inverse kinematics when a bone configuration leaves an axis
/// undefined. Carries the offending bone index.
class DegeneratePoseError : public Error {
 public:
  DegeneratePoseError(std::size_t bone, const std::string& message);

  std::size_t bone() const noexcept {
    return bone_;
  }

 private:
  std::size_t bone_;
};

[[noreturn]] void throw_error(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) {
    throw_error(kind, message);
  }
}

inline void require(bool condition, ErrorKind kind, const char* message) {
  if (!condition) {
    throw_error(kind, message);
  }
}

} // namespace corrproj
