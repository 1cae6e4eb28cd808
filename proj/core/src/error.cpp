#include "pilot/error.hpp"

namespace pilot {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::provider: return "provider";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

}  // namespace pilot
