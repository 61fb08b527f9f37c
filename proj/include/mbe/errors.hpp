#pragma once

#include <stdexcept>
#include <string>

namespace mbe {

/// Error categories, one per failure mode of the library.  The CLI maps
/// each category onto a process exit code.
enum class ErrorKind {
    BallViolation,
    NotDensityMatrix,
    HorizonTooShort,
    ResonanceMismatch,
    PumpResonantWithMolecule,
    StepSizeUnderflow,
    DriftBudgetExceeded,
    BranchEmpty,
    OutOfRange,
    NotResonant,
    NoConvergence,
    NormViolation,
    InvalidParameter,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::BallViolation: return "BallViolation";
        case ErrorKind::NotDensityMatrix: return "NotDensityMatrix";
        case ErrorKind::HorizonTooShort: return "HorizonTooShort";
        case ErrorKind::ResonanceMismatch: return "ResonanceMismatch";
        case ErrorKind::PumpResonantWithMolecule: return "PumpResonantWithMolecule";
        case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
        case ErrorKind::DriftBudgetExceeded: return "DriftBudgetExceeded";
        case ErrorKind::BranchEmpty: return "BranchEmpty";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::NotResonant: return "NotResonant";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::NormViolation: return "NormViolation";
        case ErrorKind::InvalidParameter: return "InvalidParameter";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Integration failure carrying the time at which it happened.
class IntegrationError : public Error {
public:
    IntegrationError(ErrorKind kind, double t, const std::string& what)
        : Error(kind, what + " (t = " + std::to_string(t) + ")"), t_(t) {}

    double time() const noexcept { return t_; }

private:
    double t_;
};

}  // namespace mbe
