#include "s2fgl/warnings.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace s2fgl {

namespace {
std::mutex handler_mutex;
WarningHandler current_handler;  // empty = default stderr sink
}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(handler_mutex);
  WarningHandler previous = std::move(current_handler);
  current_handler = std::move(handler);
  return previous;
}

void warn(const std::string& message) {
  WarningHandler handler;
  {
    std::lock_guard<std::mutex> lock(handler_mutex);
    handler = current_handler;
  }
  if (handler) {
    handler(message);
  } else {
    std::cerr << "[s2fgl warning] " << message << "\n";
  }
}

}  // namespace s2fgl
