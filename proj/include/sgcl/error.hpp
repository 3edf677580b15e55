#pragma once

#include <stdexcept>
#include <string>

namespace sgcl {

// Error categories map onto CLI exit codes: usage=2, data=3, numeric=4.
enum class ErrorKind { usage, data, numeric, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string msg)
        : std::runtime_error(std::move(msg)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::usage:   return 2;
            case ErrorKind::data:    return 3;
            case ErrorKind::numeric: return 4;
            case ErrorKind::internal: break;
        }
        return 1;
    }

    const char* kind_name() const noexcept {
        switch (kind_) {
            case ErrorKind::usage:   return "usage";
            case ErrorKind::data:    return "data";
            case ErrorKind::numeric: return "numeric";
            case ErrorKind::internal: break;
        }
        return "internal";
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_usage(const std::string& msg)    { throw Error(ErrorKind::usage, msg); }
[[noreturn]] inline void fail_data(const std::string& msg)     { throw Error(ErrorKind::data, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg)  { throw Error(ErrorKind::numeric, msg); }
[[noreturn]] inline void fail_internal(const std::string& msg) { throw Error(ErrorKind::internal, msg); }

}  // namespace sgcl
