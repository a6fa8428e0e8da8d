#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kcpc {

/// Invalid user configuration (bad keys, out-of-range values, inconsistent modes).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an API precondition (size mismatch, wrong coordinate space).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Routes a non-fatal diagnostic to the installed handler (stderr by default).
void emit_warning(std::string_view message);

/// Installs a handler and returns the previous one. Passing an empty handler restores stderr.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace kcpc
