#pragma once

#include <stdexcept>
#include <string>

namespace oodkit {

/// Failure category. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
    Validation = 1,
    Io = 2,
    Numeric = 3,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& what) { throw Error(ErrorKind::Validation, what); }
[[noreturn]] inline void fail_io(const std::string& what) { throw Error(ErrorKind::Io, what); }
[[noreturn]] inline void fail_numeric(const std::string& what) { throw Error(ErrorKind::Numeric, what); }

}  // namespace oodkit
