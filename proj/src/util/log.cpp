#include "util/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace engage {

LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("ENGAGE_LOG");
        if (!env) return LogLevel::error;
        std::string v(env);
        if (v == "debug") return LogLevel::debug;
        if (v == "info") return LogLevel::info;
        return LogLevel::error;
    }();
    return level;
}

namespace {
std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

void emit(const char* tag, const std::string& msg) {
    std::lock_guard<std::mutex> lock(log_mutex());
    std::cerr << tag << msg << '\n';
}
}  // namespace

void log_error(const std::string& msg) {
    emit("[engage:error] ", msg);
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) emit("[engage:info] ", msg);
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) emit("[engage:debug] ", msg);
}

}  // namespace engage
