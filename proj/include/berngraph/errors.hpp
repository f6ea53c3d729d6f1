#pragma once

#include <stdexcept>
#include <string>

namespace berngraph {

// Mirrors the bg_status codes of the C API.
enum class ErrorCode {
    io = 1,
    parse = 2,
    invalid = 3,
    state = 4,
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

} // namespace berngraph
