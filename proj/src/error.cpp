#include "cfo/error.hpp"

namespace cfo {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::InsufficientSamples: return "InsufficientSamples";
        case ErrorKind::ZeroPowerSignal: return "ZeroPowerSignal";
        case ErrorKind::ZeroInput: return "ZeroInput";
        case ErrorKind::ZeroCorrelation: return "ZeroCorrelation";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::MissingPilots: return "MissingPilots";
        case ErrorKind::StageDisabled: return "StageDisabled";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
    }
    return "Unknown";
}

}  // namespace cfo
