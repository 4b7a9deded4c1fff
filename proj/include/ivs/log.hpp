#pragma once

#include <functional>
#include <string>

namespace ivs {

using WarningHandler = std::function<void(const std::string&)>;

// Process-wide warning sink; defaults to stderr. Warnings are advisory
// (truncated horizons and the like), never control flow.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace ivs
