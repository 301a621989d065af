#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ahsabr {

enum class ErrorCode {
    InvalidArgument,
    PriceOutOfBounds,
    SingularPivot,
    ForwardTooCloseToBoundary,
    NonpositiveShiftedStrike,
    DegenerateStraddle,
    DegenerateButterfly,
    NegativeNuSquared,
    RhoOutOfRange,
    UnstableDifferences,
    MalformedRow,
    MissingStrike,
    SchemaMismatch,
    NonFiniteValue,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PriceOutOfBounds: return "PriceOutOfBounds";
    case ErrorCode::SingularPivot: return "SingularPivot";
    case ErrorCode::ForwardTooCloseToBoundary: return "ForwardTooCloseToBoundary";
    case ErrorCode::NonpositiveShiftedStrike: return "NonpositiveShiftedStrike";
    case ErrorCode::DegenerateStraddle: return "DegenerateStraddle";
    case ErrorCode::DegenerateButterfly: return "DegenerateButterfly";
    case ErrorCode::NegativeNuSquared: return "NegativeNuSquared";
    case ErrorCode::RhoOutOfRange: return "RhoOutOfRange";
    case ErrorCode::UnstableDifferences: return "UnstableDifferences";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::MissingStrike: return "MissingStrike";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// True for failures that come from the numbers themselves (degenerate
/// quotes, inconsistent smiles) rather than from malformed input.
constexpr bool is_numerical(ErrorCode code) {
    switch (code) {
    case ErrorCode::PriceOutOfBounds:
    case ErrorCode::SingularPivot:
    case ErrorCode::DegenerateStraddle:
    case ErrorCode::DegenerateButterfly:
    case ErrorCode::NegativeNuSquared:
    case ErrorCode::RhoOutOfRange:
    case ErrorCode::UnstableDifferences:
        return true;
    default:
        return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ahsabr
