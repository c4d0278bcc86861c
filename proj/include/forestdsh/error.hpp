#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forestdsh {

enum class ErrorCode {
    InvalidArgument,
    NotADistribution,
    EmptyAlphabet,
    LengthMismatch,
    SymbolOutOfAlphabet,
    EmptyTrainingSet,
    NoFeasiblePoint,
    DegenerateRatio,
    NodeBudgetExceeded,
    EmptyBucketSet,
    NoCandidate,
    UndefinedRatio,
    TuningFailed,
    NoFeasibleRadius,
    PerturbationInfeasible,
    InvalidRank,
    AllBuildsFailed,
    CrossValidationFailed,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI, the python module) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace forestdsh
