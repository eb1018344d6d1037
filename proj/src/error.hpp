#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace airbraille {

// Numeric values are shared with the C API status codes.
enum class ErrorCode : int {
    InvalidArgument = 1,
    UnknownCharacter = 2,
    EmptyPattern = 3,
    UnknownMethod = 4,
    InvalidCell = 5,
    OutOfRange = 6,
    TooManyPoints = 7,
    PeakNotFound = 8,
    UndecodableResponse = 9,
    EmptyInput = 10,
    DegenerateInput = 11,
    OutOfRangeItem = 12,
    InvalidConfig = 13,
    UnknownSession = 14,
    UnknownTrial = 15,
    DuplicateResponse = 16,
    TrialNotPending = 17,
    SessionIncomplete = 18,
    TruthWithheld = 19,
    Io = 20,
    Internal = 21,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Validation errors are caused by bad caller input; everything else is a
// runtime failure.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace airbraille
