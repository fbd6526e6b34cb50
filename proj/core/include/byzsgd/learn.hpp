#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "byzsgd/param_vector.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd {

enum class TaskKind { LinearRegression, LogisticRegression, MLP1Hidden };

std::string_view to_string(TaskKind kind) noexcept;
std::optional<TaskKind> parse_task_kind(std::string_view name) noexcept;

struct Sample {
    std::vector<double> features;
    /// Real target (linear), 0/1 (logistic) or class index (MLP).
    double label = 0.0;
};

/// A differentiable desk-scale learning problem.
///
/// Linear regression uses the loss 0.5 * (w.x - y)^2, logistic regression
/// the binary cross-entropy of sigmoid(w.x), and the MLP one tanh hidden
/// layer followed by softmax cross-entropy. The MLP parameter vector is laid
/// out as W1 (hidden x dim, row-major), b1, W2 (classes x hidden), b2.
struct TrainingTask {
    TaskKind kind = TaskKind::LinearRegression;
    std::size_t dim = 1;
    std::size_t hidden_width = 16;
    std::size_t num_classes = 3;
    std::vector<Sample> train;
    /// Held-out split; empty for regression.
    std::vector<Sample> test;
    /// Parameters of the generating model (same layout as the trained one).
    ParamVector ground_truth;

    std::size_t parameter_count() const noexcept;
    void validate() const;
};

enum class ScheduleKind { Constant, InverseDecay };

/// Learning rate gamma_k; InverseDecay is gamma0 / (1 + k / decay_T).
struct LrSchedule {
    ScheduleKind kind = ScheduleKind::InverseDecay;
    double gamma0 = 0.1;
    double decay_T = 50.0;

    double rate(std::size_t step) const noexcept;
    void validate() const;
};

struct Minibatch {
    std::vector<std::size_t> indices;
    std::size_t size() const noexcept { return indices.size(); }
};

inline constexpr std::size_t kDefaultBatchSize = 32;

/// Per-sample loss gradient.
ParamVector sample_gradient(const TrainingTask& task, const ParamVector& params, const Sample& sample);

/// Mean of the per-sample gradients over `batch` (indices into task.train).
ParamVector compute_gradient(const TrainingTask& task, const ParamVector& params, const Minibatch& batch);

/// Gradient over the whole training set.
ParamVector full_gradient(const TrainingTask& task, const ParamVector& params);

double sample_loss(const TrainingTask& task, const ParamVector& params, const Sample& sample);
/// Mean training loss over the whole training set.
double full_loss(const TrainingTask& task, const ParamVector& params);
/// Fraction of correctly labelled held-out samples; NaN for regression.
double test_accuracy(const TrainingTask& task, const ParamVector& params);

/// params - gamma_k * grad.
ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, const LrSchedule& schedule, std::size_t step);

/// Synthetic i.i.d. data from a seeded ground-truth model with standard normal
/// features. Classification tasks hold out 20% of the samples for testing.
TrainingTask generate_dataset(TaskKind kind, std::size_t dim, std::size_t n_samples, double noise_sigma,
                              std::uint64_t seed, std::size_t hidden_width = 16, std::size_t num_classes = 3);

/// Initial model shared by every correct server: zeros for the linear models,
/// a seeded scaled-normal draw for the MLP.
ParamVector initial_params(const TrainingTask& task, std::uint64_t seed);

/// Random permutation of the training indices split into near-equal shards;
/// the first (n mod n_workers) shards get one extra sample.
std::vector<std::vector<std::size_t>> partition_iid(const TrainingTask& task, std::size_t n_workers,
                                                    std::uint64_t seed);

/// `size` distinct indices drawn from `pool` (the whole pool, in order, when
/// it is not larger than `size`).
Minibatch sample_minibatch(std::span<const std::size_t> pool, std::size_t size, Rng& rng);

} // namespace byzsgd
