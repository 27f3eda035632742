#pragma once

#include <stdexcept>
#include <string>

namespace engage {

// Stable error categories; the C API and CLI map these to status/exit codes.
enum class ErrorCode {
    usage = 1,     // bad arguments / misuse of an API contract
    data = 2,      // malformed or invariant-violating input data
    model = 3,     // model/feature mismatch (wrong dims, unknown ids, missing models)
    io = 4,        // filesystem failure
    internal = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string msg)
        : std::runtime_error(std::move(msg)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail_usage(const std::string& msg) { throw Error(ErrorCode::usage, msg); }
[[noreturn]] inline void fail_data(const std::string& msg) { throw Error(ErrorCode::data, msg); }
[[noreturn]] inline void fail_model(const std::string& msg) { throw Error(ErrorCode::model, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(ErrorCode::io, msg); }

inline void require(bool cond, ErrorCode code, const std::string& msg) {
    if (!cond) throw Error(code, msg);
}

}  // namespace engage
