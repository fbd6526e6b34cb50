#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "byzsgd/gars.hpp"
#include "byzsgd/learn.hpp"
#include "byzsgd/messages.hpp"

namespace byzsgd {

/// Garfield: replicated servers, robust gradient aggregation and a median
/// model-exchange round. CrashTolerant: replicas average every worker's
/// gradient and workers follow a single primary. Vanilla: one trusted
/// averaging server.
enum class Mode { Garfield, CrashTolerant, Vanilla };

std::string_view to_string(Mode mode) noexcept;
std::optional<Mode> parse_mode(std::string_view name) noexcept;

/// min(2 f_ps + 3, n_ps - f_ps).
std::size_t default_server_quorum(std::size_t n_ps, std::size_t f_ps) noexcept;

struct ClusterConfig {
    Mode mode = Mode::Garfield;
    std::size_t n_w = 11;
    std::size_t f_w = 1;
    std::size_t n_ps = 4;
    std::size_t f_ps = 1;
    /// 0 selects the mode default (Garfield: n_w - f_w; baselines: n_w).
    std::size_t q_w = 0;
    /// 0 selects the mode default (Garfield: min(2 f_ps + 3, n_ps - f_ps)).
    std::size_t q_ps = 0;
    /// Unset selects Median for Garfield and Average for the baselines.
    std::optional<GarRule> gar;
    /// Multi-Krum selection size; 0 selects q_w - f_w - 2.
    std::size_t krum_m = 0;
    /// Drops the n - f upper bound on quorums. Only safe when every node is
    /// guaranteed to answer.
    bool synchronous = false;
    /// Subset budget for MDA aggregation on servers.
    std::uint64_t mda_budget = kDefaultMdaBudget;

    std::size_t worker_quorum() const noexcept;
    std::size_t server_quorum() const noexcept;
    GarRule worker_rule() const noexcept;
    /// Aggregation applied by servers to the q_w gathered gradients.
    GarSpec worker_gar() const noexcept;
    /// Number and tolerance of the models a worker aggregates.
    std::size_t model_quorum() const noexcept;
    std::size_t model_faults() const noexcept;

    /// Throws InvalidConfig naming the violated constraint.
    void validate() const;
};

enum class NodeStatus { Correct, Byzantine, Crashed };
enum class ServerPhase { AwaitGradients, AwaitExchange };

struct Received {
    NodeId sender;
    ParamVector payload;
};

/// Per-(step, kind) inboxes. A sender is accepted at most once per slot.
class QuorumBuffer {
public:
    /// False (and nothing stored) when `sender` already filled this slot.
    bool offer(std::size_t step, MessageKind kind, NodeId sender, ParamVector payload);
    std::span<const Received> get(std::size_t step, MessageKind kind) const;
    std::size_t count(std::size_t step, MessageKind kind) const;
    /// Forgets every slot for steps strictly below `step`.
    void discard_before(std::size_t step);
    bool empty() const noexcept { return slots_.empty(); }

private:
    std::map<std::pair<std::size_t, MessageKind>, std::vector<Received>> slots_;
};

struct NodeState {
    NodeId id{};
    /// Next step this node will process.
    std::size_t step = 0;
    /// Servers: current model. Workers: the last aggregated model.
    ParamVector model;
    std::uint64_t rng_seed = 0;
    NodeStatus status = NodeStatus::Correct;
    ServerPhase phase = ServerPhase::AwaitGradients;
    QuorumBuffer pending;
};

struct Outgoing {
    NodeId receiver;
    ProtocolMessage msg;
};

struct WorkerEnv {
    const ClusterConfig& cluster;
    const TrainingTask& task;
    std::span<const std::size_t> shard;
    std::size_t batch_size = kDefaultBatchSize;
    /// Servers receiving the gradient.
    std::span<const NodeId> servers;
};

struct ServerEnv {
    const ClusterConfig& cluster;
    const LrSchedule& schedule;
    /// Every other server.
    std::span<const NodeId> peers;
    std::span<const NodeId> workers;
    /// Baselines: whether this server publishes the model to the workers.
    bool is_primary = true;
};

/// Aggregates the first model_quorum() models (arrival order) with Median,
/// computes a minibatch gradient there and addresses it to every server.
/// The minibatch is drawn from a generator seeded by (rng_seed, step).
/// Throws QuorumUnderflow / DuplicateSender on a malformed quorum.
std::vector<Outgoing> worker_step(NodeState& state, std::span<const Received> received_models, const WorkerEnv& env);

/// Aggregates the first q_w gradients and applies one SGD step. Garfield
/// servers then send the new model to their peers and wait for the exchange;
/// baseline servers advance directly and, when primary, publish the model.
std::vector<Outgoing> server_step(NodeState& state, std::span<const Received> received_grads, const ServerEnv& env);

/// Garfield exchange round: coordinate-wise Median over the server's own
/// model and the first q_ps - 1 peer models; advances the step and publishes
/// the model to the workers.
std::vector<Outgoing> server_contract(NodeState& state, std::span<const Received> received_models,
                                      const ServerEnv& env);

struct Failover {
    std::size_t new_primary = 0;
    ProtocolMessage announce;
};

/// Next non-crashed server after `current_primary` in id order (wrapping).
/// The announcement carries that server's current step and model. Throws
/// NoLivePrimary when every server has crashed.
Failover crash_failover(std::span<const NodeState> servers, std::size_t current_primary);

} // namespace byzsgd
