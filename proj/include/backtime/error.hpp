#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace backtime {

/// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind {
    config = 2,      // invalid configuration / parameter values
    parse = 3,       // file parsing failures
    boundary = 4,    // index or range violations
    shape = 5,       // matrix shape mismatches
    degenerate = 6,  // degenerate data (constant variable, empty mask, ...)
    divergence = 7,  // non-finite values during optimization
    search = 8,      // search found no candidate
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

namespace log {

/// Minimal stderr notice channel; silenced in tests via set_quiet(true).
inline bool& quiet_flag() {
    static bool quiet = false;
    return quiet;
}

inline void set_quiet(bool quiet) { quiet_flag() = quiet; }

inline void notice(const std::string& message) {
    if (!quiet_flag()) std::fprintf(stderr, "[backtime] %s\n", message.c_str());
}

}  // namespace log
}  // namespace backtime
