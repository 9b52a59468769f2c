#pragma once

#include <stdexcept>
#include <string>

namespace tvtree {

enum class ErrorCode {
    NonTree,
    BadNumbering,
    BadLabels,
    LengthMismatch,
    InvalidActiveSet,
    InfeasibleDecomposition,
    InvalidDecomposition,
    UnsupportedConfiguration,
    RankDeficient,
    SingularBlock,
    SingularUpdate,
    Infeasible,
    Unbounded,
    IndexInActiveSet,
    OffsetOutOfRange,
    BadGamma,
    TooLarge,
    InfeasibleConstraint,
    OddInteriorGap,
    WitnessConditions,
    NotLargeEnough,
    NotConverged,
    NonFinite,
    BadParams,
    EmptyS,
    GapConditionViolated,
    EmptyComplement,
    BadConfig,
};

inline const char* error_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::NonTree: return "NonTree";
        case ErrorCode::BadNumbering: return "BadNumbering";
        case ErrorCode::BadLabels: return "BadLabels";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::InvalidActiveSet: return "InvalidActiveSet";
        case ErrorCode::InfeasibleDecomposition: return "InfeasibleDecomposition";
        case ErrorCode::InvalidDecomposition: return "InvalidDecomposition";
        case ErrorCode::UnsupportedConfiguration: return "UnsupportedConfiguration";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::SingularBlock: return "SingularBlock";
        case ErrorCode::SingularUpdate: return "SingularUpdate";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::Unbounded: return "Unbounded";
        case ErrorCode::IndexInActiveSet: return "IndexInActiveSet";
        case ErrorCode::OffsetOutOfRange: return "OffsetOutOfRange";
        case ErrorCode::BadGamma: return "BadGamma";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::InfeasibleConstraint: return "InfeasibleConstraint";
        case ErrorCode::OddInteriorGap: return "OddInteriorGap";
        case ErrorCode::WitnessConditions: return "WitnessConditions";
        case ErrorCode::NotLargeEnough: return "NotLargeEnough";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::EmptyS: return "EmptyS";
        case ErrorCode::GapConditionViolated: return "GapConditionViolated";
        case ErrorCode::EmptyComplement: return "EmptyComplement";
        case ErrorCode::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tvtree
