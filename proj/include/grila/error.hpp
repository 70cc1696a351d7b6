#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grila {

// One code per failure case the modules can report. The HTTP layer maps
// these 1:1 onto the "error" field of its JSON error bodies.
enum class ErrorCode {
    // persistence
    ConnectionError,
    SelectionError,
    StorageError,
    ConstraintError,
    // auth
    DuplicateIdentity,
    WeakInput,
    AuthFailed,
    InvalidTicket,
    Unauthenticated,
    Forbidden,
    // test engine
    UnknownTest,
    InvalidTest,
    SessionAlreadyActive,
    UnknownSession,
    SessionFinished,
    ForwardOnly,
    UnknownOption,
    IncompleteSession,
    UnknownResult,
    // admin
    ValidationFailed,
    UnknownEntity,
    // transport / tooling
    BadRequest,
    NotFound,
    RateLimited,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace grila
