#pragma once

#include <stdexcept>
#include <string>

namespace rme {

enum class ErrorCategory {
  InvalidArgument = 2,
  Format = 3,
  NumericalFailure = 4,
  Config = 5,
};

/// Exception carrying one of the library's error categories. The numeric
/// value of the category doubles as the CLI exit code.
class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

private:
  ErrorCategory category_;
};

const char* category_name(ErrorCategory c) noexcept;

[[noreturn]] inline void throw_invalid(const std::string& msg) {
  throw Error(ErrorCategory::InvalidArgument, msg);
}
[[noreturn]] inline void throw_format(const std::string& msg) {
  throw Error(ErrorCategory::Format, msg);
}
[[noreturn]] inline void throw_numerical(const std::string& msg) {
  throw Error(ErrorCategory::NumericalFailure, msg);
}
[[noreturn]] inline void throw_config(const std::string& msg) {
  throw Error(ErrorCategory::Config, msg);
}

} // namespace rme
