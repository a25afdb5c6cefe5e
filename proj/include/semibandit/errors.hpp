#pragma once

#include <stdexcept>
#include <string>

namespace semibandit {

// Typed failure reasons surfaced by the library. The CLI maps these to
// process exit codes (config -> 2, budget -> 3, everything else -> 1).
enum class ErrorKind {
    ContainedArm,
    EmptyFamily,
    BadM,
    NotBeta,
    NotFixedSize,
    DegenerateFamily,
    DegeneratePrior,
    DegenerateConstants,
    BootstrapUnderfilled,
    BudgetExceeded,
    NonDiscretePrior,
    NotEncodable,
    ZeroQpun,
    RejectionBudgetExceeded,
    ConfigError,
    InternalError,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::ContainedArm: return "ContainedArm";
        case ErrorKind::EmptyFamily: return "EmptyFamily";
        case ErrorKind::BadM: return "BadM";
        case ErrorKind::NotBeta: return "NotBeta";
        case ErrorKind::NotFixedSize: return "NotFixedSize";
        case ErrorKind::DegenerateFamily: return "DegenerateFamily";
        case ErrorKind::DegeneratePrior: return "DegeneratePrior";
        case ErrorKind::DegenerateConstants: return "DegenerateConstants";
        case ErrorKind::BootstrapUnderfilled: return "BootstrapUnderfilled";
        case ErrorKind::BudgetExceeded: return "BudgetExceeded";
        case ErrorKind::NonDiscretePrior: return "NonDiscretePrior";
        case ErrorKind::NotEncodable: return "NotEncodable";
        case ErrorKind::ZeroQpun: return "ZeroQpun";
        case ErrorKind::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::InternalError: return "InternalError";
    }
    return "Unknown";
}

class SbError : public std::runtime_error {
  public:
    SbError(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw SbError(kind, what);
}

}  // namespace semibandit
