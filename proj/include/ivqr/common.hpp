#pragma once

#include <stdexcept>
#include <string>

namespace ivqr {

// Error categories map 1:1 onto CLI exit codes and the machine-readable
// prefix printed on stderr.
enum class ErrorCategory {
    Usage,        // bad flags, bad config keys, bad argument combinations
    Schema,       // malformed input files (CSV/model text)
    Numeric,      // singular systems, degenerate densities, invalid sizes
    Io,           // missing/unreadable/unwritable files
    Unsupported,  // operation requires an oracle or feature that is absent
};

const char* category_name(ErrorCategory cat) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}

    ErrorCategory category() const noexcept { return cat_; }

private:
    ErrorCategory cat_;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
    throw Error(cat, msg);
}

}  // namespace ivqr
