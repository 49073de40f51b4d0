#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rotcool {

// Invalid user input: bad flag values, malformed molecule files, unknown names.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Integrator failure, basis non-convergence, near-degenerate gaps, etc.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Warnings go to stderr unless a handler is installed (tests capture them).
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace rotcool
