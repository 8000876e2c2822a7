#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dbvp {

enum class ErrorKind {
    NotSymmetric,
    CutoffOnEigenvalue,
    OffGrid,
    PartitionMismatch,
    SigmaNotInRangeP,
    NotChiral,
    NotContraction,
    MaxIterations,
    Degenerate,
    SingularSymbol,
    PerturbationTooLarge,
    KNotOffBlock,
    GridTooCoarse,
    InvalidArgument,
    ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NotSymmetric: return "NotSymmetric";
        case ErrorKind::CutoffOnEigenvalue: return "CutoffOnEigenvalue";
        case ErrorKind::OffGrid: return "OffGrid";
        case ErrorKind::PartitionMismatch: return "PartitionMismatch";
        case ErrorKind::SigmaNotInRangeP: return "SigmaNotInRangeP";
        case ErrorKind::NotChiral: return "NotChiral";
        case ErrorKind::NotContraction: return "NotContraction";
        case ErrorKind::MaxIterations: return "MaxIterations";
        case ErrorKind::Degenerate: return "Degenerate";
        case ErrorKind::SingularSymbol: return "SingularSymbol";
        case ErrorKind::PerturbationTooLarge: return "PerturbationTooLarge";
        case ErrorKind::KNotOffBlock: return "KNotOffBlock";
        case ErrorKind::GridTooCoarse: return "GridTooCoarse";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

} // namespace dbvp
