#include "byzsgd/protocol.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "byzsgd/error.hpp"

namespace byzsgd {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidConfig, what); }

std::string num(std::size_t x) { return std::to_string(x); }

void require_quorum(std::span<const Received> received, std::size_t needed, std::string_view what) {
    if (received.size() < needed)
        throw Error(Errc::QuorumUnderflow, std::string(what) + " needs " + num(needed) + " distinct senders, got " +
                                               num(received.size()));
    std::set<NodeId> seen;
    for (const auto& r : received)
        if (!seen.insert(r.sender).second)
            throw Error(Errc::DuplicateSender, std::string(what) + " received two messages from " + to_string(r.sender));
}

std::vector<ParamVector> first_payloads(std::span<const Received> received, std::size_t count) {
    std::vector<ParamVector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(received[i].payload);
    return out;
}

std::vector<Outgoing> broadcast(const NodeState& state, MessageKind kind, std::span<const NodeId> to) {
    std::vector<Outgoing> out;
    out.reserve(to.size());
    for (NodeId r : to)
        out.push_back({r, ProtocolMessage{kind, state.step, state.id, state.model}});
    return out;
}

} // namespace

std::string_view to_string(Mode mode) noexcept {
    switch (mode) {
    case Mode::Garfield: return "garfield";
    case Mode::CrashTolerant: return "crash_tolerant";
    case Mode::Vanilla: return "vanilla";
    }
    return "unknown";
}

std::optional<Mode> parse_mode(std::string_view name) noexcept {
    for (auto m : {Mode::Garfield, Mode::CrashTolerant, Mode::Vanilla})
        if (to_string(m) == name)
            return m;
    return std::nullopt;
}

std::size_t default_server_quorum(std::size_t n_ps, std::size_t f_ps) noexcept {
    const std::size_t cap = n_ps > f_ps ? n_ps - f_ps : 0;
    return std::min(2 * f_ps + 3, cap);
}

std::size_t ClusterConfig::worker_quorum() const noexcept {
    if (q_w != 0)
        return q_w;
    if (mode == Mode::Garfield)
        return n_w > f_w ? n_w - f_w : 0;
    return n_w;
}

std::size_t ClusterConfig::server_quorum() const noexcept {
    if (mode != Mode::Garfield)
        return 1;
    return q_ps != 0 ? q_ps : default_server_quorum(n_ps, f_ps);
}

GarRule ClusterConfig::worker_rule() const noexcept {
    if (gar)
        return *gar;
    return mode == Mode::Garfield ? GarRule::Median : GarRule::Average;
}

GarSpec ClusterConfig::worker_gar() const noexcept {
    const GarRule rule = worker_rule();
    const std::size_t q = worker_quorum();
    const std::size_t f = rule == GarRule::Average ? 0 : f_w;
    std::size_t m = krum_m;
    if (m == 0)
        m = q >= f + 3 ? q - f - 2 : 1;
    return GarSpec{rule, q, f, m};
}

std::size_t ClusterConfig::model_quorum() const noexcept { return mode == Mode::Garfield ? server_quorum() : 1; }

std::size_t ClusterConfig::model_faults() const noexcept { return mode == Mode::Garfield ? f_ps : 0; }

void ClusterConfig::validate() const {
    if (n_w == 0)
        invalid("cluster needs at least one worker (n_w >= 1)");
    if (n_ps == 0)
        invalid("cluster needs at least one server (n_ps >= 1)");
    if (f_w >= n_w)
        invalid("f_w must be smaller than n_w");
    const std::size_t qw = worker_quorum();
    switch (mode) {
    case Mode::Garfield: {
        if (n_ps < 3 * f_ps + 1)
            invalid("garfield requires n_ps >= 3 f_ps + 1 (n_ps=" + num(n_ps) + ", f_ps=" + num(f_ps) + ")");
        const std::size_t qps = server_quorum();
        const std::size_t qps_cap = synchronous ? n_ps : n_ps - f_ps;
        if (qps < 2 * f_ps + 1 || qps > qps_cap)
            invalid("garfield requires 2 f_ps + 1 <= q_ps <= " + std::string(synchronous ? "n_ps" : "n_ps - f_ps") +
                    " (q_ps=" + num(qps) + ", n_ps=" + num(n_ps) + ", f_ps=" + num(f_ps) + ")");
        const std::size_t qw_cap = synchronous ? n_w : n_w - f_w;
        if (qw < 2 * f_w + 1 || qw > qw_cap)
            invalid("garfield requires 2 f_w + 1 <= q_w <= " + std::string(synchronous ? "n_w" : "n_w - f_w") +
                    " (q_w=" + num(qw) + ", n_w=" + num(n_w) + ", f_w=" + num(f_w) + ")");
        if (worker_rule() == GarRule::Average && f_w != 0)
            invalid("garfield with the average rule tolerates no Byzantine worker (f_w must be 0)");
        break;
    }
    case Mode::CrashTolerant:
        if (n_ps < f_ps + 1)
            invalid("crash_tolerant requires n_ps >= f_ps + 1");
        if (worker_rule() != GarRule::Average)
            invalid("crash_tolerant servers aggregate with average");
        if (qw < 1 || qw > n_w)
            invalid("crash_tolerant requires 1 <= q_w <= n_w");
        break;
    case Mode::Vanilla:
        if (n_ps != 1 || f_ps != 0)
            invalid("vanilla requires a single trusted server (n_ps = 1, f_ps = 0)");
        if (worker_rule() != GarRule::Average)
            invalid("vanilla server aggregates with average");
        if (qw < 1 || qw > n_w)
            invalid("vanilla requires 1 <= q_w <= n_w");
        break;
    }
    try {
        worker_gar().validate();
    } catch (const Error& e) {
        invalid(std::string("worker aggregation rule is not admissible: ") + e.what());
    }
}

bool QuorumBuffer::offer(std::size_t step, MessageKind kind, NodeId sender, ParamVector payload) {
    auto& slot = slots_[{step, kind}];
    for (const auto& r : slot)
        if (r.sender == sender)
            return false;
    slot.push_back({sender, std::move(payload)});
    return true;
}

std::span<const Received> QuorumBuffer::get(std::size_t step, MessageKind kind) const {
    const auto it = slots_.find({step, kind});
    if (it == slots_.end())
        return {};
    return it->second;
}

std::size_t QuorumBuffer::count(std::size_t step, MessageKind kind) const { return get(step, kind).size(); }

void QuorumBuffer::discard_before(std::size_t step) {
    slots_.erase(slots_.begin(), slots_.lower_bound({step, MessageKind{}}));
}

std::vector<Outgoing> worker_step(NodeState& state, std::span<const Received> received_models, const WorkerEnv& env) {
    const std::size_t q = env.cluster.model_quorum();
    require_quorum(received_models, q, "worker model quorum");
    const auto models = first_payloads(received_models, q);
    state.model = aggregate(GarSpec{GarRule::Median, q, env.cluster.model_faults(), 1}, models).result;

    Rng rng(derive_seed(state.rng_seed, state.step));
    const Minibatch batch = sample_minibatch(env.shard, env.batch_size, rng);
    ProtocolMessage msg{MessageKind::GradientSubmit, state.step, state.id,
                        compute_gradient(env.task, state.model, batch)};
    std::vector<Outgoing> out;
    out.reserve(env.servers.size());
    for (NodeId s : env.servers)
        out.push_back({s, msg});
    ++state.step;
    return out;
}

std::vector<Outgoing> server_step(NodeState& state, std::span<const Received> received_grads, const ServerEnv& env) {
    if (state.phase != ServerPhase::AwaitGradients)
        throw Error(Errc::InvalidArgument, "server_step called while awaiting the model exchange");
    const GarSpec spec = env.cluster.worker_gar();
    require_quorum(received_grads, spec.q, "server gradient quorum");
    const auto grads = first_payloads(received_grads, spec.q);
    const ParamVector effective = aggregate(spec, grads, env.cluster.mda_budget).result;
    state.model = sgd_step(state.model, effective, env.schedule, state.step);

    if (env.cluster.mode == Mode::Garfield) {
        state.phase = ServerPhase::AwaitExchange;
        return broadcast(state, MessageKind::ModelExchange, env.peers);
    }
    ++state.step;
    if (!env.is_primary)
        return {};
    return broadcast(state, MessageKind::ModelBroadcast, env.workers);
}

std::vector<Outgoing> server_contract(NodeState& state, std::span<const Received> received_models,
                                      const ServerEnv& env) {
    if (state.phase != ServerPhase::AwaitExchange)
        throw Error(Errc::InvalidArgument, "server_contract called before the gradient step");
    const std::size_t q = env.cluster.server_quorum();
    const std::size_t needed = q - 1;
    require_quorum(received_models, needed, "server exchange quorum");
    std::vector<ParamVector> models;
    models.reserve(q);
    models.push_back(state.model);
    for (std::size_t i = 0; i < needed; ++i) {
        if (received_models[i].sender == state.id)
            throw Error(Errc::DuplicateSender, "exchange quorum must not contain the server's own model");
        models.push_back(received_models[i].payload);
    }
    state.model = aggregate(GarSpec{GarRule::Median, q, env.cluster.f_ps, 1}, models).result;
    ++state.step;
    state.phase = ServerPhase::AwaitGradients;
    return broadcast(state, MessageKind::ModelBroadcast, env.workers);
}

Failover crash_failover(std::span<const NodeState> servers, std::size_t current_primary) {
    const std::size_t n = servers.size();
    for (std::size_t hop = 1; hop <= n; ++hop) {
        const std::size_t candidate = (current_primary + hop) % n;
        if (servers[candidate].status == NodeStatus::Crashed)
            continue;
        const auto& s = servers[candidate];
        return Failover{candidate, ProtocolMessage{MessageKind::PrimaryAnnounce, s.step, s.id, s.model}};
    }
    throw Error(Errc::NoLivePrimary, "every server has crashed; no primary can take over");
}

} // namespace byzsgd
