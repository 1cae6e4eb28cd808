#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pilot {

/// Broad failure classes. The CLI maps `usage` to exit status 2 and every
/// other kind to exit status 1.
enum class ErrorKind {
  invalid_input,  // a precondition on an argument does not hold
  validation,     // a document parsed but violates the schema or a record invariant
  parse,          // malformed text (JSON, CSV, tagged output)
  io,             // filesystem failure
  provider,       // generation/embedding backend failed
  degenerate,     // data cannot support the statistic (zero variance, all ties)
  usage,          // bad command-line arguments
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pilot
