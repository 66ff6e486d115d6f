#include "nettomo/error.hpp"

namespace nettomo {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::GenerationFailure: return "generation-failure";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Identifiability: return "identifiability-failure";
    case ErrorKind::UnsupportedTopology: return "unsupported-topology";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Configuration: return "configuration-error";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::Internal: return "internal-error";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::GenerationFailure:
    case ErrorKind::Parse:
    case ErrorKind::UnsupportedTopology:
    case ErrorKind::Configuration:
      return 2;
    case ErrorKind::Identifiability:
      return 3;
    case ErrorKind::Io:
      return 4;
    case ErrorKind::InsufficientData:
    case ErrorKind::Internal:
      return 1;
  }
  return 1;
}

}  // namespace nettomo
