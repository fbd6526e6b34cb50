#include "byzsgd/error.hpp"

namespace byzsgd {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::TooManyNonFinite: return "TooManyNonFinite";
    case Errc::QuorumViolation: return "QuorumViolation";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::EnumerationBudget: return "EnumerationBudget";
    case Errc::NoVarianceFormula: return "NoVarianceFormula";
    case Errc::QuorumUnderflow: return "QuorumUnderflow";
    case Errc::DuplicateSender: return "DuplicateSender";
    case Errc::NoLivePrimary: return "NoLivePrimary";
    case Errc::NegativeDelay: return "NegativeDelay";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ParseError: return "ParseError";
    case Errc::DivergenceGuard: return "DivergenceGuard";
    case Errc::LivelockGuard: return "LivelockGuard";
    }
    return "Unknown";
}

} // namespace byzsgd
