#include "byzsgd/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "byzsgd/error.hpp"

namespace byzsgd {

namespace {

double sigmoid(double z) {
    if (z >= 0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double linear_score(const ParamVector& w, const std::vector<double>& x) {
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        z += w[i] * x[i];
    return z;
}

/// Views into an MLP parameter vector.
struct MlpShape {
    std::size_t dim, hidden, classes;
    std::size_t w1() const { return 0; }
    std::size_t b1() const { return hidden * dim; }
    std::size_t w2() const { return b1() + hidden; }
    std::size_t b2() const { return w2() + classes * hidden; }
    std::size_t total() const { return b2() + classes; }
};

MlpShape mlp_shape(const TrainingTask& task) { return {task.dim, task.hidden_width, task.num_classes}; }

struct MlpForward {
    std::vector<double> hidden;
    std::vector<double> probs;
    double loss = 0.0;
};

MlpForward mlp_forward(const MlpShape& s, const ParamVector& p, const Sample& sample) {
    MlpForward out;
    out.hidden.resize(s.hidden);
    for (std::size_t h = 0; h < s.hidden; ++h) {
        double a = p[s.b1() + h];
        for (std::size_t i = 0; i < s.dim; ++i)
            a += p[s.w1() + h * s.dim + i] * sample.features[i];
        out.hidden[h] = std::tanh(a);
    }
    std::vector<double> logits(s.classes);
    for (std::size_t c = 0; c < s.classes; ++c) {
        double z = p[s.b2() + c];
        for (std::size_t h = 0; h < s.hidden; ++h)
            z += p[s.w2() + c * s.hidden + h] * out.hidden[h];
        logits[c] = z;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    out.probs.resize(s.classes);
    for (std::size_t c = 0; c < s.classes; ++c) {
        out.probs[c] = std::exp(logits[c] - top);
        total += out.probs[c];
    }
    for (double& pc : out.probs)
        pc /= total;
    const auto label = static_cast<std::size_t>(sample.label);
    out.loss = -(logits[label] - top - std::log(total));
    return out;
}

void check_params(const TrainingTask& task, const ParamVector& params) {
    if (params.dim() != task.parameter_count())
        throw Error(Errc::DimensionMismatch, "parameter vector has dimension " + std::to_string(params.dim()) +
                                                 ", task expects " + std::to_string(task.parameter_count()));
}

std::size_t predict_class(const TrainingTask& task, const ParamVector& params, const Sample& sample) {
    if (task.kind == TaskKind::LogisticRegression)
        return linear_score(params, sample.features) > 0.0 ? 1 : 0;
    const auto fwd = mlp_forward(mlp_shape(task), params, sample);
    return static_cast<std::size_t>(std::max_element(fwd.probs.begin(), fwd.probs.end()) - fwd.probs.begin());
}

} // namespace

std::string_view to_string(TaskKind kind) noexcept {
    switch (kind) {
    case TaskKind::LinearRegression: return "linear_regression";
    case TaskKind::LogisticRegression: return "logistic_regression";
    case TaskKind::MLP1Hidden: return "mlp";
    }
    return "unknown";
}

std::optional<TaskKind> parse_task_kind(std::string_view name) noexcept {
    if (name == "linear_regression")
        return TaskKind::LinearRegression;
    if (name == "logistic_regression")
        return TaskKind::LogisticRegression;
    if (name == "mlp")
        return TaskKind::MLP1Hidden;
    return std::nullopt;
}

std::size_t TrainingTask::parameter_count() const noexcept {
    if (kind == TaskKind::MLP1Hidden)
        return MlpShape{dim, hidden_width, num_classes}.total();
    return dim;
}

void TrainingTask::validate() const {
    if (dim == 0)
        throw Error(Errc::InvalidArgument, "task dimension must be >= 1");
    if (kind == TaskKind::MLP1Hidden && (hidden_width == 0 || num_classes < 2))
        throw Error(Errc::InvalidArgument, "mlp requires hidden_width >= 1 and num_classes >= 2");
    auto check = [&](const std::vector<Sample>& set) {
        for (const auto& s : set) {
            if (s.features.size() != dim)
                throw Error(Errc::DimensionMismatch, "sample feature count differs from task dimension");
            switch (kind) {
            case TaskKind::LinearRegression:
                if (!std::isfinite(s.label))
                    throw Error(Errc::InvalidArgument, "regression label must be finite");
                break;
            case TaskKind::LogisticRegression:
                if (s.label != 0.0 && s.label != 1.0)
                    throw Error(Errc::InvalidArgument, "logistic label must be 0 or 1");
                break;
            case TaskKind::MLP1Hidden:
                if (s.label < 0 || s.label != std::floor(s.label) ||
                    s.label >= static_cast<double>(num_classes))
                    throw Error(Errc::InvalidArgument, "mlp label must be a class index");
                break;
            }
        }
    };
    check(train);
    check(test);
}

double LrSchedule::rate(std::size_t step) const noexcept {
    if (kind == ScheduleKind::Constant)
        return gamma0;
    return gamma0 / (1.0 + static_cast<double>(step) / decay_T);
}

void LrSchedule::validate() const {
    if (!(gamma0 > 0.0) || !std::isfinite(gamma0))
        throw Error(Errc::InvalidArgument, "learning rate gamma0 must be positive and finite");
    if (kind == ScheduleKind::InverseDecay && (!(decay_T > 0.0) || !std::isfinite(decay_T)))
        throw Error(Errc::InvalidArgument, "inverse decay requires decay_T > 0");
}

ParamVector sample_gradient(const TrainingTask& task, const ParamVector& params, const Sample& sample) {
    check_params(task, params);
    ParamVector grad(params.dim(), 0.0);
    switch (task.kind) {
    case TaskKind::LinearRegression: {
        const double residual = linear_score(params, sample.features) - sample.label;
        for (std::size_t i = 0; i < task.dim; ++i)
            grad[i] = residual * sample.features[i];
        break;
    }
    case TaskKind::LogisticRegression: {
        const double err = sigmoid(linear_score(params, sample.features)) - sample.label;
        for (std::size_t i = 0; i < task.dim; ++i)
            grad[i] = err * sample.features[i];
        break;
    }
    case TaskKind::MLP1Hidden: {
        const auto s = mlp_shape(task);
        const auto fwd = mlp_forward(s, params, sample);
        std::vector<double> dlogits = fwd.probs;
        dlogits[static_cast<std::size_t>(sample.label)] -= 1.0;
        std::vector<double> dhidden(s.hidden, 0.0);
        for (std::size_t c = 0; c < s.classes; ++c) {
            grad[s.b2() + c] = dlogits[c];
            for (std::size_t h = 0; h < s.hidden; ++h) {
                grad[s.w2() + c * s.hidden + h] = dlogits[c] * fwd.hidden[h];
                dhidden[h] += params[s.w2() + c * s.hidden + h] * dlogits[c];
            }
        }
        for (std::size_t h = 0; h < s.hidden; ++h) {
            const double da = dhidden[h] * (1.0 - fwd.hidden[h] * fwd.hidden[h]);
            grad[s.b1() + h] = da;
            for (std::size_t i = 0; i < s.dim; ++i)
                grad[s.w1() + h * s.dim + i] = da * sample.features[i];
        }
        break;
    }
    }
    return grad;
}

ParamVector compute_gradient(const TrainingTask& task, const ParamVector& params, const Minibatch& batch) {
    check_params(task, params);
    if (batch.indices.empty())
        throw Error(Errc::EmptyInput, "minibatch must not be empty");
    ParamVector acc(params.dim(), 0.0);
    for (std::size_t idx : batch.indices) {
        if (idx >= task.train.size())
            throw Error(Errc::InvalidArgument, "minibatch index out of range");
        acc += sample_gradient(task, params, task.train[idx]);
    }
    acc *= 1.0 / static_cast<double>(batch.size());
    return acc;
}

ParamVector full_gradient(const TrainingTask& task, const ParamVector& params) {
    Minibatch all;
    all.indices.resize(task.train.size());
    std::iota(all.indices.begin(), all.indices.end(), std::size_t{0});
    return compute_gradient(task, params, all);
}

double sample_loss(const TrainingTask& task, const ParamVector& params, const Sample& sample) {
    check_params(task, params);
    switch (task.kind) {
    case TaskKind::LinearRegression: {
        const double r = linear_score(params, sample.features) - sample.label;
        return 0.5 * r * r;
    }
    case TaskKind::LogisticRegression: {
        const double z = linear_score(params, sample.features);
        return softplus(z) - sample.label * z;
    }
    case TaskKind::MLP1Hidden:
        return mlp_forward(mlp_shape(task), params, sample).loss;
    }
    return 0.0;
}

double full_loss(const TrainingTask& task, const ParamVector& params) {
    if (task.train.empty())
        throw Error(Errc::EmptyInput, "task has no training samples");
    double acc = 0.0;
    for (const auto& s : task.train)
        acc += sample_loss(task, params, s);
    return acc / static_cast<double>(task.train.size());
}

double test_accuracy(const TrainingTask& task, const ParamVector& params) {
    if (task.kind == TaskKind::LinearRegression || task.test.empty())
        return std::numeric_limits<double>::quiet_NaN();
    check_params(task, params);
    std::size_t hits = 0;
    for (const auto& s : task.test)
        if (predict_class(task, params, s) == static_cast<std::size_t>(s.label))
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(task.test.size());
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, const LrSchedule& schedule,
                     std::size_t step) {
    require_same_dim(params, grad);
    const double gamma = schedule.rate(step);
    ParamVector out = params;
    for (std::size_t i = 0; i < out.dim(); ++i)
        out[i] -= gamma * grad[i];
    return out;
}

TrainingTask generate_dataset(TaskKind kind, std::size_t dim, std::size_t n_samples, double noise_sigma,
                              std::uint64_t seed, std::size_t hidden_width, std::size_t num_classes) {
    if (n_samples == 0)
        throw Error(Errc::InvalidArgument, "dataset needs at least one sample");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw Error(Errc::InvalidArgument, "noise_sigma must be finite and non-negative");
    TrainingTask task;
    task.kind = kind;
    task.dim = dim;
    task.hidden_width = hidden_width;
    task.num_classes = kind == TaskKind::LogisticRegression ? 2 : num_classes;
    if (dim == 0)
        throw Error(Errc::InvalidArgument, "task dimension must be >= 1");
    if (kind == TaskKind::MLP1Hidden && (hidden_width == 0 || num_classes < 2))
        throw Error(Errc::InvalidArgument, "mlp requires hidden_width >= 1 and num_classes >= 2");

    Rng rng(derive_seed(seed, 0xda7a));
    task.ground_truth = ParamVector(task.parameter_count());
    if (kind == TaskKind::MLP1Hidden) {
        const auto s = mlp_shape(task);
        const double in_scale = 1.0 / std::sqrt(static_cast<double>(dim));
        const double out_scale = 2.0 / std::sqrt(static_cast<double>(hidden_width));
        for (std::size_t i = 0; i < s.total(); ++i) {
            const bool first_layer = i < s.w2();
            task.ground_truth[i] = rng.normal() * (first_layer ? 2.0 * in_scale : out_scale);
        }
    } else {
        for (double& w : task.ground_truth)
            w = rng.normal();
    }

    std::vector<Sample> samples(n_samples);
    for (auto& sample : samples) {
        sample.features.resize(dim);
        for (double& x : sample.features)
            x = rng.normal();
        switch (kind) {
        case TaskKind::LinearRegression:
            sample.label = linear_score(task.ground_truth, sample.features) + noise_sigma * rng.normal();
            break;
        case TaskKind::LogisticRegression:
            sample.label = linear_score(task.ground_truth, sample.features) + noise_sigma * rng.normal() > 0.0 ? 1.0 : 0.0;
            break;
        case TaskKind::MLP1Hidden: {
            Sample probe{sample.features, 0.0};
            const auto fwd = mlp_forward(mlp_shape(task), task.ground_truth, probe);
            std::size_t best = 0;
            double best_score = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < task.num_classes; ++c) {
                const double score = std::log(fwd.probs[c]) + noise_sigma * rng.normal();
                if (score > best_score) {
                    best_score = score;
                    best = c;
                }
            }
            sample.label = static_cast<double>(best);
            break;
        }
        }
    }

    if (kind == TaskKind::LinearRegression) {
        task.train = std::move(samples);
    } else {
        const std::size_t held_out = n_samples / 5;
        task.test.assign(samples.end() - static_cast<std::ptrdiff_t>(held_out), samples.end());
        samples.resize(n_samples - held_out);
        task.train = std::move(samples);
    }
    return task;
}

ParamVector initial_params(const TrainingTask& task, std::uint64_t seed) {
    ParamVector params(task.parameter_count(), 0.0);
    if (task.kind != TaskKind::MLP1Hidden)
        return params;
    const auto s = mlp_shape(task);
    Rng rng(derive_seed(seed, 0x1417));
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(s.dim));
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(s.hidden));
    for (std::size_t i = s.w1(); i < s.b1(); ++i)
        params[i] = rng.normal() * in_scale;
    for (std::size_t i = s.w2(); i < s.b2(); ++i)
        params[i] = rng.normal() * out_scale;
    return params;
}

std::vector<std::vector<std::size_t>> partition_iid(const TrainingTask& task, std::size_t n_workers,
                                                    std::uint64_t seed) {
    if (n_workers == 0)
        throw Error(Errc::InvalidArgument, "partition requires at least one worker");
    std::vector<std::size_t> perm(task.train.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x5a4d));
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);

    std::vector<std::vector<std::size_t>> shards(n_workers);
    const std::size_t base = perm.size() / n_workers;
    const std::size_t extra = perm.size() % n_workers;
    std::size_t cursor = 0;
    for (std::size_t w = 0; w < n_workers; ++w) {
        const std::size_t len = base + (w < extra ? 1 : 0);
        shards[w].assign(perm.begin() + static_cast<std::ptrdiff_t>(cursor),
                         perm.begin() + static_cast<std::ptrdiff_t>(cursor + len));
        cursor += len;
    }
    return shards;
}

Minibatch sample_minibatch(std::span<const std::size_t> pool, std::size_t size, Rng& rng) {
    Minibatch batch;
    if (size >= pool.size()) {
        batch.indices.assign(pool.begin(), pool.end());
        return batch;
    }
    std::vector<std::size_t> scratch(pool.begin(), pool.end());
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t j = i + rng.below(scratch.size() - i);
        std::swap(scratch[i], scratch[j]);
    }
    batch.indices.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(size));
    return batch;
}

} // namespace byzsgd
