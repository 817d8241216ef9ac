#pragma once

#include <stdexcept>
#include <string>

namespace f2ocl {

enum class ErrorKind {
  config,   // invalid configuration or option values
  input,    // bad runtime input (dimension mismatch, empty argument)
  logic,    // API misuse (duplicate class, missing prerequisite)
  state,    // operation on an empty or unready container
  parse,    // malformed file content
  numeric,  // non-finite values surfaced during training
  io,       // filesystem failure
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace f2ocl
