#include "byzsgd/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "byzsgd/error.hpp"

namespace byzsgd {

double max_pairwise_distance(std::span<const ParamVector> models) {
    if (models.size() < 2)
        throw Error(Errc::InvalidArgument, "max_pairwise_distance needs at least two vectors");
    double best = 0.0;
    for (std::size_t i = 0; i < models.size(); ++i)
        for (std::size_t j = i + 1; j < models.size(); ++j)
            best = std::max(best, distance(models[i], models[j]));
    return best;
}

std::vector<AlignmentStat> alignment_stats(std::span<const ParamVector> models, std::size_t k) {
    if (models.size() < 3)
        throw Error(Errc::InvalidArgument, "alignment_stats needs at least three models");
    if (k < 2)
        throw Error(Errc::InvalidArgument, "alignment_stats needs k >= 2");

    struct Diff {
        ParamVector vec;
        double len;
    };
    std::vector<Diff> diffs;
    for (std::size_t i = 0; i < models.size(); ++i)
        for (std::size_t j = i + 1; j < models.size(); ++j) {
            ParamVector d = models[j] - models[i];
            const double len = norm(d);
            if (len > 0.0)
                diffs.push_back({std::move(d), len});
        }
    std::stable_sort(diffs.begin(), diffs.end(), [](const Diff& a, const Diff& b) { return a.len > b.len; });
    if (diffs.size() > k)
        diffs.resize(k);

    std::vector<AlignmentStat> out;
    for (std::size_t t = 1; t < diffs.size(); ++t) {
        const double c = dot(diffs[0].vec, diffs[t].vec) / (diffs[0].len * diffs[t].len);
        out.push_back({std::min(1.0, std::abs(c)), diffs[0].len, diffs[t].len});
    }
    return out;
}

} // namespace byzsgd
