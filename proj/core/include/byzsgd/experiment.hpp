#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "byzsgd/attacks.hpp"
#include "byzsgd/error.hpp"
#include "byzsgd/learn.hpp"
#include "byzsgd/metrics.hpp"
#include "byzsgd/protocol.hpp"
#include "byzsgd/simnet.hpp"

namespace byzsgd {

struct TaskConfig {
    TaskKind kind = TaskKind::LinearRegression;
    std::size_t dim = 10;
    std::size_t samples = 2000;
    double noise_sigma = 0.1;
    std::size_t hidden_width = 16;
    std::size_t num_classes = 3;
    std::size_t batch_size = kDefaultBatchSize;
};

/// Server `server` stops right after applying its gradient update for step
/// `after_step`, before sending anything.
struct CrashEvent {
    std::size_t server = 0;
    std::size_t after_step = 0;
};

struct ExperimentConfig {
    ClusterConfig cluster;
    TaskConfig task;
    AttackSpec attack;
    LrSchedule schedule;
    DelayModel delays;
    std::vector<CrashEvent> crashes;
    std::uint64_t seed = 1;
    std::size_t max_steps = 500;
    std::size_t metrics_every = 10;
    std::size_t alignment_every = kAlignmentEvery;
    std::size_t alignment_k = 2;
    /// Worker-side primary timeout; 0 selects 10 x the mean link delay.
    SimTime crash_timeout = 0.0;
    /// Livelock guard; 0 selects 1000 x (mean delay + compute time), at least 1000.
    SimTime livelock_horizon = 0.0;
    double divergence_threshold = 1e12;
    /// Keep every correct server's model after every step.
    bool capture_models = false;
    bool record_trace = false;

    SimTime resolved_crash_timeout() const noexcept;
    SimTime resolved_livelock_horizon() const noexcept;
    void validate() const;
};

struct PrimaryChange {
    SimTime time = 0.0;
    std::size_t old_primary = 0;
    std::size_t new_primary = 0;
};

struct ExperimentResult {
    std::vector<MetricsRecord> records;
    /// model_history[k] holds each correct server's model after k steps
    /// (server index order); filled when capture_models is set.
    std::vector<std::vector<ParamVector>> model_history;
    /// Correct servers' models after max_steps.
    std::vector<ParamVector> final_models;
    /// Step counter of every correct node when the run stopped.
    std::vector<std::pair<NodeId, std::size_t>> node_steps;
    std::vector<PrimaryChange> primary_changes;
    std::uint64_t trace_hash = 0;
    std::vector<TraceRecord> trace;
    std::size_t events = 0;
};

/// Raised when a run trips the divergence or livelock guard; carries the
/// metrics gathered until then.
class ExperimentAborted : public Error {
public:
    ExperimentAborted(Errc code, const std::string& what, std::vector<MetricsRecord> records)
        : Error(code, what), records_(std::move(records)) {}
    const std::vector<MetricsRecord>& records() const noexcept { return records_; }

private:
    std::vector<MetricsRecord> records_;
};

/// Builds the synthetic task described by config.task from config.seed.
TrainingTask make_task(const ExperimentConfig& config);

/// Runs the configured cluster over the simulated network until every
/// correct node has completed max_steps steps. Deterministic per seed.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const TrainingTask& task);

} // namespace byzsgd
