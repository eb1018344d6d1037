#include "error.hpp"

namespace airbraille {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::UnknownCharacter: return "UnknownCharacter";
        case ErrorCode::EmptyPattern: return "EmptyPattern";
        case ErrorCode::UnknownMethod: return "UnknownMethod";
        case ErrorCode::InvalidCell: return "InvalidCell";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::TooManyPoints: return "TooManyPoints";
        case ErrorCode::PeakNotFound: return "PeakNotFound";
        case ErrorCode::UndecodableResponse: return "UndecodableResponse";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::OutOfRangeItem: return "OutOfRangeItem";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::UnknownTrial: return "UnknownTrial";
        case ErrorCode::DuplicateResponse: return "DuplicateResponse";
        case ErrorCode::TrialNotPending: return "TrialNotPending";
        case ErrorCode::SessionIncomplete: return "SessionIncomplete";
        case ErrorCode::TruthWithheld: return "TruthWithheld";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::PeakNotFound:
        case ErrorCode::Io:
        case ErrorCode::Internal:
            return false;
        default:
            return true;
    }
}

}  // namespace airbraille
