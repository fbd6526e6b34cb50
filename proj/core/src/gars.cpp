#include "byzsgd/gars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "byzsgd/error.hpp"

namespace byzsgd {

namespace {

void check_common_dim(std::span<const ParamVector> inputs) {
    if (inputs.empty())
        throw Error(Errc::EmptyInput, "aggregation requires at least one input vector");
    const std::size_t dim = inputs.front().dim();
    if (dim == 0)
        throw Error(Errc::DimensionMismatch, "input vectors must have dimension >= 1");
    for (const auto& v : inputs)
        if (v.dim() != dim)
            throw Error(Errc::DimensionMismatch, "input vectors have differing dimensions");
}

[[noreturn]] void quorum_error(std::string_view rule, std::size_t q, std::size_t f, std::string_view bound) {
    throw Error(Errc::QuorumViolation, std::string(rule) + " requires " + std::string(bound) + ", got q=" +
                                           std::to_string(q) + ", f=" + std::to_string(f));
}

/// Mean of the listed inputs, accumulated in the listed order.
ParamVector average_of(std::span<const ParamVector> inputs, std::span<const std::size_t> which) {
    ParamVector out(inputs.front().dim(), 0.0);
    for (std::size_t idx : which)
        for (std::size_t j = 0; j < out.dim(); ++j)
            out[j] += inputs[idx][j];
    const double count = static_cast<double>(which.size());
    for (double& x : out)
        x /= count;
    return out;
}

/// Median of a scratch buffer (reordered in place).
double median_in_place(std::span<double> values) {
    const std::size_t n = values.size();
    if (n == 3) {
        return median3_reorder({values[0], values[1], values[2]})[1];
    }
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1)
        return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return (lower + upper) / 2;
}

std::vector<double> squared_distance_matrix(std::span<const ParamVector> inputs) {
    const std::size_t q = inputs.size();
    std::vector<double> dist(q * q, 0.0);
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = i + 1; j < q; ++j)
            dist[i * q + j] = dist[j * q + i] = squared_distance(inputs[i], inputs[j]);
    return dist;
}

/// Krum scores restricted to `pool` (indices into a q x q distance matrix).
std::vector<double> krum_scores(std::span<const double> dist, std::size_t q, std::span<const std::size_t> pool,
                                std::size_t neighbours) {
    std::vector<double> scores(pool.size(), 0.0);
    std::vector<double> row;
    row.reserve(pool.size());
    for (std::size_t a = 0; a < pool.size(); ++a) {
        row.clear();
        for (std::size_t b = 0; b < pool.size(); ++b)
            if (a != b)
                row.push_back(dist[pool[a] * q + pool[b]]);
        const std::size_t take = std::min(neighbours, row.size());
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(take), row.end());
        double score = 0.0;
        for (std::size_t t = 0; t < take; ++t)
            score += row[t];
        scores[a] = score;
    }
    return scores;
}

/// Positions into `scores` ordered by (score, position).
std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return order;
}

} // namespace

std::string_view to_string(GarRule rule) noexcept {
    switch (rule) {
    case GarRule::Average: return "average";
    case GarRule::Median: return "median";
    case GarRule::MultiKrum: return "multi_krum";
    case GarRule::MDA: return "mda";
    case GarRule::Bulyan: return "bulyan";
    }
    return "unknown";
}

std::optional<GarRule> parse_gar_rule(std::string_view name) noexcept {
    if (name == "average")
        return GarRule::Average;
    if (name == "median")
        return GarRule::Median;
    if (name == "multi_krum" || name == "multikrum" || name == "krum")
        return GarRule::MultiKrum;
    if (name == "mda")
        return GarRule::MDA;
    if (name == "bulyan")
        return GarRule::Bulyan;
    return std::nullopt;
}

std::size_t min_quorum(GarRule rule, std::size_t f) noexcept {
    switch (rule) {
    case GarRule::Average: return 1;
    case GarRule::Median:
    case GarRule::MDA: return 2 * f + 1;
    case GarRule::MultiKrum: return 2 * f + 3;
    case GarRule::Bulyan: return 4 * f + 3;
    }
    return 1;
}

void GarSpec::validate() const {
    const std::string name(to_string(rule));
    if (q == 0)
        throw Error(Errc::QuorumViolation, name + " requires q >= 1");
    switch (rule) {
    case GarRule::Average:
        if (f != 0)
            throw Error(Errc::InvalidArgument, "average tolerates no Byzantine input (f must be 0)");
        break;
    case GarRule::Median:
    case GarRule::MDA:
        if (q < 2 * f + 1)
            quorum_error(name, q, f, "q >= 2f + 1");
        break;
    case GarRule::MultiKrum:
        if (q < 2 * f + 3)
            quorum_error(name, q, f, "q >= 2f + 3");
        if (m < 1 || m > q - f - 2)
            throw Error(Errc::InvalidArgument, "multi_krum requires 1 <= m <= q - f - 2, got m=" + std::to_string(m) +
                                                   " with q=" + std::to_string(q) + ", f=" + std::to_string(f));
        break;
    case GarRule::Bulyan:
        if (q < 4 * f + 3)
            quorum_error(name, q, f, "q >= 4f + 3");
        break;
    }
}

SanitizeResult sanitize(std::span<const ParamVector> inputs, std::size_t f) {
    if (!inputs.empty()) {
        const std::size_t dim = inputs.front().dim();
        for (const auto& v : inputs)
            if (v.dim() != dim)
                throw Error(Errc::DimensionMismatch, "input vectors have differing dimensions");
    }
    SanitizeResult out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].all_finite()) {
            out.kept.push_back(inputs[i]);
            out.kept_indices.push_back(i);
        } else {
            out.excluded.push_back(i);
        }
    }
    if (out.excluded.size() > f)
        throw Error(Errc::TooManyNonFinite, std::to_string(out.excluded.size()) +
                                                " non-finite inputs exceed the tolerated f=" + std::to_string(f));
    return out;
}

ParamVector average(std::span<const ParamVector> inputs) {
    check_common_dim(inputs);
    std::vector<std::size_t> all(inputs.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return average_of(inputs, all);
}

ParamVector median(std::span<const ParamVector> inputs, std::size_t f) {
    check_common_dim(inputs);
    const std::size_t q = inputs.size();
    if (q < 2 * f + 1)
        quorum_error("median", q, f, "q >= 2f + 1");
    const std::size_t dim = inputs.front().dim();
    ParamVector out(dim);
    std::vector<double> column(q);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t i = 0; i < q; ++i)
            column[i] = inputs[i][j];
        out[j] = median_in_place(column);
    }
    return out;
}

AggregationOutcome multi_krum(std::span<const ParamVector> inputs, std::size_t f, std::size_t m) {
    check_common_dim(inputs);
    GarSpec{GarRule::MultiKrum, inputs.size(), f, m}.validate();
    const std::size_t q = inputs.size();
    const auto dist = squared_distance_matrix(inputs);
    std::vector<std::size_t> pool(q);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    const auto scores = krum_scores(dist, q, pool, q - f - 2);
    const auto order = rank_by_score(scores);

    AggregationOutcome out;
    out.selected_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(out.selected_indices.begin(), out.selected_indices.end());
    out.result = average_of(inputs, out.selected_indices);
    return out;
}

std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k) noexcept {
    if (k > n)
        return 0;
    k = std::min(k, n - k);
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // result * (n - k + i) / i stays integral at every step
        const std::uint64_t factor = n - k + i;
        const std::uint64_t g = std::gcd(result, i);
        const std::uint64_t reduced = result / g;
        const std::uint64_t divisor = i / g;
        const std::uint64_t f2 = factor / divisor;
        if (f2 != 0 && reduced > kMax / f2)
            return kMax;
        result = reduced * f2;
    }
    return result;
}

AggregationOutcome mda(std::span<const ParamVector> inputs, std::size_t f, std::uint64_t budget) {
    check_common_dim(inputs);
    const std::size_t q = inputs.size();
    if (q < 2 * f + 1)
        quorum_error("mda", q, f, "q >= 2f + 1");
    const std::uint64_t subsets = binomial_saturating(q, f);
    if (subsets > budget)
        throw Error(Errc::EnumerationBudget, "mda would enumerate C(" + std::to_string(q) + ", " + std::to_string(f) +
                                                 ") = " + std::to_string(subsets) +
                                                 " subsets, over the budget of " + std::to_string(budget));

    auto dist = squared_distance_matrix(inputs);
    for (double& x : dist)
        x = std::sqrt(x);

    const std::size_t size = q - f;
    std::vector<std::size_t> current;
    current.reserve(size);
    std::vector<std::size_t> best;
    double best_diameter = std::numeric_limits<double>::infinity();

    // Depth-first in lexicographic order; a branch is cut as soon as it can
    // no longer beat the best diameter strictly, so ties keep the earliest set.
    auto search = [&](auto&& self, std::size_t start, double diameter) -> void {
        if (current.size() == size) {
            best_diameter = diameter;
            best = current;
            return;
        }
        const std::size_t remaining = size - current.size();
        for (std::size_t i = start; i + remaining <= q; ++i) {
            double widened = diameter;
            for (std::size_t j : current)
                widened = std::max(widened, dist[j * q + i]);
            if (widened >= best_diameter)
                continue;
            current.push_back(i);
            self(self, i + 1, widened);
            current.pop_back();
        }
    };
    search(search, 0, 0.0);
    if (best.empty()) {
        // Only reachable when every diameter is infinite or NaN.
        best.resize(size);
        std::iota(best.begin(), best.end(), std::size_t{0});
    }

    AggregationOutcome out;
    out.selected_indices = best;
    out.result = average_of(inputs, best);
    return out;
}

ParamVector bulyan(std::span<const ParamVector> inputs, std::size_t f) {
    check_common_dim(inputs);
    const std::size_t q = inputs.size();
    if (q < 4 * f + 3)
        quorum_error("bulyan", q, f, "q >= 4f + 3");
    const std::size_t rounds = q - 2 * f;
    const std::size_t kept_per_coord = rounds - 2 * f;
    const auto dist = squared_distance_matrix(inputs);

    std::vector<std::size_t> pool(q);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::size_t> selection;
    selection.reserve(rounds);
    for (std::size_t r = 0; r < rounds; ++r) {
        const std::size_t p = pool.size();
        const std::size_t neighbours = p >= f + 2 ? p - f - 2 : 0;
        const auto scores = krum_scores(dist, q, pool, neighbours);
        const std::size_t winner = rank_by_score(scores).front();
        selection.push_back(pool[winner]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(winner));
    }

    const std::size_t dim = inputs.front().dim();
    ParamVector out(dim);
    std::vector<double> column(rounds);
    std::vector<std::size_t> order(rounds);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t s = 0; s < rounds; ++s)
            column[s] = inputs[selection[s]][j];
        std::vector<double> scratch = column;
        const double centre = median_in_place(scratch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double da = std::abs(column[a] - centre);
            const double db = std::abs(column[b] - centre);
            if (da != db)
                return da < db;
            return selection[a] < selection[b];
        });
        // Accumulate the kept values in ascending input index.
        std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kept_per_coord));
        std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) { return selection[a] < selection[b]; });
        double acc = 0.0;
        for (std::size_t s : kept)
            acc += column[s];
        out[j] = acc / static_cast<double>(kept_per_coord);
    }
    return out;
}

AggregationOutcome aggregate(const GarSpec& spec, std::span<const ParamVector> inputs, std::uint64_t mda_budget) {
    spec.validate();
    if (inputs.size() != spec.q)
        throw Error(Errc::QuorumViolation, std::string(to_string(spec.rule)) + " configured for q=" +
                                               std::to_string(spec.q) + " but received " +
                                               std::to_string(inputs.size()) + " inputs");
    check_common_dim(inputs);
    auto clean = sanitize(inputs, spec.f);
    const std::size_t f = spec.f - clean.excluded.size();
    std::span<const ParamVector> kept(clean.kept);

    AggregationOutcome out;
    switch (spec.rule) {
    case GarRule::Average:
        out.result = average(kept);
        out.selected_indices.resize(kept.size());
        std::iota(out.selected_indices.begin(), out.selected_indices.end(), std::size_t{0});
        break;
    case GarRule::Median:
        out.result = median(kept, f);
        break;
    case GarRule::MultiKrum:
        out = multi_krum(kept, f, spec.m);
        break;
    case GarRule::MDA:
        out = mda(kept, f, mda_budget);
        break;
    case GarRule::Bulyan:
        out.result = bulyan(kept, f);
        break;
    }
    for (auto& idx : out.selected_indices)
        idx = clean.kept_indices[idx];
    out.excluded_nonfinite = std::move(clean.excluded);
    return out;
}

std::array<double, 3> median3_reorder(const std::array<double, 3>& v) noexcept {
    const int c0 = static_cast<int>(v[0] > v[1]);
    const int c1 = static_cast<int>(v[0] > v[2]);
    const int c2 = static_cast<int>(v[1] > v[2]);
    const int i0 = (1 + c0 + 2 * c1 + c2 - (c1 ^ c2)) / 2;
    const int i1 = (4 - c0 - 2 * c1 - c2 + (c0 ^ c1)) / 2;
    return {v[static_cast<std::size_t>(i0)], v[static_cast<std::size_t>(3 - i0 - i1)], v[static_cast<std::size_t>(i1)]};
}

} // namespace byzsgd
