#pragma once

#include <functional>
#include <string>

namespace s2fgl {

using WarningHandler = std::function<void(const std::string&)>;

// Replaces the process-wide warning sink; an empty handler restores the
// default (stderr). Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace s2fgl
