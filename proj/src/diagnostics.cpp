#include "kcpc/error.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace kcpc {

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler handler;
  return handler;
}

}  // namespace

void emit_warning(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (auto& handler = handler_slot()) {
    handler(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  return std::exchange(handler_slot(), std::move(handler));
}

}  // namespace kcpc
