#ifndef AMERLEVY_ERROR_HPP
#define AMERLEVY_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace amerlevy {

/// Failure categories raised by the library.
enum class ErrorCode {
    InvalidArgument,
    NonIntegrableJump,
    InvalidDomain,
    TieBreak,
    KinkTooClose,
    BetaTooSmall,
    QuadratureTailTooHeavy,
    LinearSolveFailure,
    PenaltyNonMonotone,
    NewtonStall,
    DegenerateRegression,
    GridCoverageTooSmall,
    ModelRejected,
    OutOfDomain,
    ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NonIntegrableJump: return "NonIntegrableJump";
        case ErrorCode::InvalidDomain: return "InvalidDomain";
        case ErrorCode::TieBreak: return "TieBreak";
        case ErrorCode::KinkTooClose: return "KinkTooClose";
        case ErrorCode::BetaTooSmall: return "BetaTooSmall";
        case ErrorCode::QuadratureTailTooHeavy: return "QuadratureTailTooHeavy";
        case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
        case ErrorCode::PenaltyNonMonotone: return "PenaltyNonMonotone";
        case ErrorCode::NewtonStall: return "NewtonStall";
        case ErrorCode::DegenerateRegression: return "DegenerateRegression";
        case ErrorCode::GridCoverageTooSmall: return "GridCoverageTooSmall";
        case ErrorCode::ModelRejected: return "ModelRejected";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace amerlevy

#endif  // AMERLEVY_ERROR_HPP
