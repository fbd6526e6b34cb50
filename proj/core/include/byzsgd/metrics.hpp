#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "byzsgd/param_vector.hpp"

namespace byzsgd {

/// Alignment of the two largest pairwise differences between models.
struct AlignmentStat {
    /// Cosine of the angle between the two difference vectors, in [0, 1].
    double cos_phi = 0.0;
    double max_diff1 = 0.0;
    double max_diff2 = 0.0;
};

struct MetricsRecord {
    std::size_t step = 0;
    double sim_time = 0.0;
    /// Full training loss at the mean of the correct servers' models.
    double train_loss = 0.0;
    /// Held-out accuracy; NaN for regression.
    double test_accuracy = 0.0;
    /// Largest distance between two correct servers' models.
    double max_pairwise_dist = 0.0;
    std::optional<std::vector<AlignmentStat>> alignment;
};

inline constexpr std::size_t kAlignmentEvery = 20;

/// Largest Euclidean distance over all pairs; needs at least two vectors.
double max_pairwise_distance(std::span<const ParamVector> models);

/// Forms every pairwise difference vector, keeps the k longest and reports,
/// for each of the others, its cosine with the longest one together with
/// both norms. A difference vector has no preferred orientation, so the
/// cosine is taken up to sign. Zero-length differences are skipped.
/// Needs at least three models and k >= 2.
std::vector<AlignmentStat> alignment_stats(std::span<const ParamVector> models, std::size_t k = 2);

} // namespace byzsgd
