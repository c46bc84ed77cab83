#pragma once

#include <stdexcept>
#include <string>

namespace kpg {

enum class ErrorKind {
  Validation,  // bad parameters, invariant violations, malformed content
  Io,          // file cannot be opened, read or written
  Internal,
};

/// Single exception type for the library. The C API maps `kind` onto status
/// codes and the CLI maps it onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& message) {
  throw Error(ErrorKind::Validation, message);
}

[[noreturn]] inline void fail_io(const std::string& message) {
  throw Error(ErrorKind::Io, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(message);
}

}  // namespace kpg
