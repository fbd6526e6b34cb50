#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace byzsgd {

enum class Errc {
    DimensionMismatch,
    EmptyInput,
    TooManyNonFinite,
    QuorumViolation,
    InvalidArgument,
    EnumerationBudget,
    NoVarianceFormula,
    QuorumUnderflow,
    DuplicateSender,
    NoLivePrimary,
    NegativeDelay,
    InvalidConfig,
    ParseError,
    DivergenceGuard,
    LivelockGuard,
};

/// Stable machine-readable name, e.g. "TooManyNonFinite".
std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace byzsgd
