#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "byzsgd/param_vector.hpp"

namespace byzsgd {

/// Gradient aggregation rules. Each maps q input vectors to one vector and
/// tolerates up to f arbitrary inputs, subject to a rule-specific bound on q.
enum class GarRule { Average, Median, MultiKrum, MDA, Bulyan };

std::string_view to_string(GarRule rule) noexcept;
/// Accepts "average", "median", "multi_krum" (or "multikrum", "krum"),
/// "mda" and "bulyan".
std::optional<GarRule> parse_gar_rule(std::string_view name) noexcept;

struct GarSpec {
    GarRule rule = GarRule::Average;
    std::size_t q = 1;
    std::size_t f = 0;
    /// Multi-Krum selection size; ignored by the other rules.
    std::size_t m = 1;

    /// Throws QuorumViolation / InvalidArgument when (q, f, m) are not
    /// admissible for the rule.
    void validate() const;
};

/// Smallest admissible q for the rule at the given f.
std::size_t min_quorum(GarRule rule, std::size_t f) noexcept;

struct SanitizeResult {
    std::vector<ParamVector> kept;
    /// Original position of each kept vector.
    std::vector<std::size_t> kept_indices;
    std::vector<std::size_t> excluded;
};

/// Drops every vector holding a NaN or infinity. Dropped vectors count
/// against f: more than f of them is an error (TooManyNonFinite).
SanitizeResult sanitize(std::span<const ParamVector> inputs, std::size_t f);

struct AggregationOutcome {
    ParamVector result;
    /// Inputs averaged into the result (Average, Multi-Krum, MDA); empty for
    /// the coordinate-wise rules. Ascending.
    std::vector<std::size_t> selected_indices;
    std::vector<std::size_t> excluded_nonfinite;
};

inline constexpr std::uint64_t kDefaultMdaBudget = 1'000'000;

// The rule functions below expect finite inputs of a common dimension; they
// validate dimensions and the quorum bound. Use aggregate() for untrusted
// inputs.

ParamVector average(std::span<const ParamVector> inputs);

/// Coordinate-wise median; for an even count the two middle order statistics
/// are averaged.
ParamVector median(std::span<const ParamVector> inputs, std::size_t f);

/// Scores each input by the summed squared distance to its q - f - 2 nearest
/// neighbours and averages the m lowest-scoring inputs (ties: lower index).
AggregationOutcome multi_krum(std::span<const ParamVector> inputs, std::size_t f, std::size_t m);

/// Averages the (q - f)-subset of minimum diameter. Ties go to the
/// lexicographically smallest index set. Fails with EnumerationBudget when
/// C(q, f) exceeds `budget`.
AggregationOutcome mda(std::span<const ParamVector> inputs, std::size_t f,
                       std::uint64_t budget = kDefaultMdaBudget);

/// Bulyan over Krum: q - 2f rounds of Krum with removal select k vectors,
/// then each coordinate averages the k - 2f selected values closest to that
/// coordinate's median.
ParamVector bulyan(std::span<const ParamVector> inputs, std::size_t f);

/// Sanitizes, validates `spec` against the actual input count, and applies
/// the rule. Excluded non-finite inputs reduce the effective f.
AggregationOutcome aggregate(const GarSpec& spec, std::span<const ParamVector> inputs,
                             std::uint64_t mda_budget = kDefaultMdaBudget);

/// Ascending order of three values using comparison results as integers
/// only; no data-dependent branch.
std::array<double, 3> median3_reorder(const std::array<double, 3>& v) noexcept;

/// Number of k-subsets of an n-set, saturating at UINT64_MAX.
std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k) noexcept;

} // namespace byzsgd
