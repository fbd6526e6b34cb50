#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "byzsgd/gars.hpp"
#include "byzsgd/learn.hpp"

namespace byzsgd {

/// Robustness factor Delta of a rule for n inputs with f Byzantine ones:
///   MDA        2f / (n - f)
///   Multi-Krum sqrt(2 (n - f + (f (n - f - 2) + f^2 (n - f - 1)) / (n - 2f - 2)))
///   Median     sqrt(n - f)
/// A rule is usable when kappa * Delta * sigma <= |true gradient| for some
/// kappa > 1, sigma being the standard deviation of a correct gradient.
/// Throws NoVarianceFormula for Average and Bulyan.
double delta_factor(GarRule rule, std::size_t n, std::size_t f);

struct VarianceSample {
    std::size_t step = 0;
    GarRule rule = GarRule::Median;
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
};

struct VarianceReport {
    std::size_t steps_checked = 0;
    double kappa = 0.0;
    /// Fraction of checked steps where the condition held, per rule.
    std::map<GarRule, double> satisfaction;
    std::vector<VarianceSample> per_step;
};

struct VarianceSetup {
    std::size_t n = 9;
    std::size_t f = 2;
    std::vector<GarRule> rules{GarRule::Median, GarRule::MultiKrum, GarRule::MDA};
    double kappa = 1.1;
    std::size_t steps = 100;
    std::size_t worker_batch = kDefaultBatchSize;
    /// 0 selects 100 x worker_batch; capped at the training-set size.
    std::size_t oracle_batch = 0;
    LrSchedule schedule{};
    std::uint64_t seed = 1;
};

/// Runs `steps` plain SGD steps driven by the n - f correct workers and, at
/// every visited iterate, compares kappa * Delta * sqrt(v) with the norm of a
/// large-batch gradient, v being the mean squared deviation of the correct
/// workers' gradients from their mean.
VarianceReport check_variance_condition(const TrainingTask& task, const VarianceSetup& setup);

/// Single-rule form taking (n, f) from `spec` (spec.q is n).
VarianceReport check_variance_condition(const TrainingTask& task, const GarSpec& spec, double kappa,
                                        std::size_t steps, std::size_t oracle_batch, std::uint64_t seed);

} // namespace byzsgd
