#pragma once

#include <stdexcept>
#include <string>

namespace nettomo {

enum class ErrorKind {
  InvalidArgument,
  GenerationFailure,
  Parse,
  Identifiability,
  UnsupportedTopology,
  InsufficientData,
  Configuration,
  Io,
  Internal,
};

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

/// Process exit code for the CLI: 2 config, 3 identifiability, 4 I/O, 1 otherwise.
int exit_code(ErrorKind kind) noexcept;

}  // namespace nettomo
