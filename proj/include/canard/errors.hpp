#pragma once

#include <stdexcept>
#include <string>

namespace canard {

enum class ErrorKind {
    InvalidInput,
    DimensionMismatch,
    DegenerateInput,
    OutsideValidity,
    Resonance,
    NoBracket,
    NotANode,
    StepBudget,
    StepUnderflow,
    NewtonDivergence,
    SingularMatrix,
    QuadratureFailure,
    Unclassified,
    NoFoldedNodeSection,
    ContinuationTerminated,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    // Usage-class errors map to CLI exit code 2, the rest to 1.
    bool is_usage() const noexcept {
        return kind_ == ErrorKind::InvalidInput || kind_ == ErrorKind::DimensionMismatch;
    }

private:
    ErrorKind kind_;
};

}  // namespace canard
