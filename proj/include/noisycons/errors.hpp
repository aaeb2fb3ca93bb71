#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace noisycons {

enum class ErrorCode {
    InvalidParam,
    GenerationFailed,
    DisconnectedGraph,
    NotIrreducible,
    NotAperiodic,
    NotReversible,
    NotSymmetric,
    SingularSystem,
    RandomTargetViolation,
    EigSolverFailure,
    NoConvergence,
    NotPositiveSemidefinite,
    DimensionMismatch,
    StepSizeViolation,
    AsymmetricWeights,
    InconsistentFormation,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::NotAperiodic: return "NotAperiodic";
    case ErrorCode::NotReversible: return "NotReversible";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::RandomTargetViolation: return "RandomTargetViolation";
    case ErrorCode::EigSolverFailure: return "EigSolverFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::StepSizeViolation: return "StepSizeViolation";
    case ErrorCode::AsymmetricWeights: return "AsymmetricWeights";
    case ErrorCode::InconsistentFormation: return "InconsistentFormation";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Errors configuration-side (bad input) vs numerical-side; the CLI maps
/// these onto distinct exit codes.
constexpr bool is_config_error(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidParam:
    case ErrorCode::DisconnectedGraph:
    case ErrorCode::NotIrreducible:
    case ErrorCode::NotAperiodic:
    case ErrorCode::NotReversible:
    case ErrorCode::NotSymmetric:
    case ErrorCode::NotPositiveSemidefinite:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::StepSizeViolation:
    case ErrorCode::AsymmetricWeights:
    case ErrorCode::InconsistentFormation:
    case ErrorCode::IoError:
        return true;
    default:
        return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message)
        , code_(code)
    {
    }

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace noisycons
