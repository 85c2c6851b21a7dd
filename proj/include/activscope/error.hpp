#pragma once

#include <stdexcept>
#include <string>

namespace activscope {

// Every failure raised by the library carries a short machine-parsable code
// ("shape_mismatch", "parse_error", ...) plus a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

  // One-line form used by the CLI: "error: <code>: <message>".
  std::string one_line() const { return "error: " + code_ + ": " + what(); }

 private:
  std::string code_;
};

}  // namespace activscope
