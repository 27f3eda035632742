#pragma once

#include <string>

namespace engage {

// Verbosity is read once from the ENGAGE_LOG environment variable
// (one of: error, info, debug). Default is error.
enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level();

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace engage
