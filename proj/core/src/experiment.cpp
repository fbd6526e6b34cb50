#include "byzsgd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace byzsgd {

namespace {

constexpr std::uint64_t kStreamDataset = 1;
constexpr std::uint64_t kStreamPartition = 2;
constexpr std::uint64_t kStreamInitModel = 3;
constexpr std::uint64_t kStreamNetwork = 4;

std::uint64_t node_seed(std::uint64_t seed, NodeId id) {
    return derive_seed(seed, 1000 + (id.role == Role::Server ? 1'000'000u : 0u) + id.index);
}

bool carries_model(MessageKind kind) {
    return kind == MessageKind::ModelBroadcast || kind == MessageKind::ModelExchange ||
           kind == MessageKind::PrimaryAnnounce;
}

/// Drives every node of one run over a Simulator.
class ClusterRun {
public:
    ClusterRun(const ExperimentConfig& cfg, const TrainingTask& task)
        : cfg_(cfg), cc_(cfg.cluster), task_(task), sim_(cfg.delays, derive_seed(cfg.seed, kStreamNetwork)) {
        sim_.record_trace(cfg.record_trace);
        const ParamVector init = initial_params(task_, derive_seed(cfg.seed, kStreamInitModel));
        for (std::size_t s = 0; s < cc_.n_ps; ++s) {
            NodeState st;
            st.id = NodeId::server(static_cast<std::uint32_t>(s));
            st.model = init;
            st.rng_seed = node_seed(cfg.seed, st.id);
            st.status = cfg.attack.targets_server(s) ? NodeStatus::Byzantine : NodeStatus::Correct;
            server_ids_.push_back(st.id);
            servers_.push_back(std::move(st));
        }
        for (std::size_t w = 0; w < cc_.n_w; ++w) {
            NodeState st;
            st.id = NodeId::worker(static_cast<std::uint32_t>(w));
            st.rng_seed = node_seed(cfg.seed, st.id);
            st.status = cfg.attack.targets_worker(w) ? NodeStatus::Byzantine : NodeStatus::Correct;
            worker_ids_.push_back(st.id);
            workers_.push_back(std::move(st));
        }
        shards_ = partition_iid(task_, cc_.n_w, derive_seed(cfg.seed, kStreamPartition));
        for (const auto& c : cfg.crashes)
            crash_after_[c.server] = c.after_step;
        timer_primary_.assign(cc_.n_w, 0);
        timer_deadline_.assign(cc_.n_w, 0.0);
        for (std::size_t s = 0; s < cc_.n_ps; ++s) {
            std::vector<NodeId> peers;
            for (std::size_t o = 0; o < cc_.n_ps; ++o)
                if (o != s)
                    peers.push_back(server_ids_[o]);
            peers_.push_back(std::move(peers));
        }
    }

    ExperimentResult run() {
        for (std::size_t s = 0; s < servers_.size(); ++s)
            step_completed(s);
        if (cc_.mode == Mode::Garfield) {
            for (std::size_t s = 0; s < servers_.size(); ++s)
                emit(servers_[s], broadcast_models(servers_[s]));
        } else {
            emit(servers_[primary_], broadcast_models(servers_[primary_]));
        }

        try {
            sim_.run_until([this] { return finished(); }, [this](const SimEvent& ev) { handle(ev); },
                           [this] { return progress(); }, cfg_.resolved_livelock_horizon());
        } catch (const ExperimentAborted&) {
            throw;
        } catch (const Error& e) {
            if (e.code() == Errc::LivelockGuard || e.code() == Errc::NoLivePrimary)
                throw ExperimentAborted(e.code(), e.what(), std::move(result_.records));
            throw;
        }

        for (std::size_t s = 0; s < servers_.size(); ++s)
            if (is_correct(servers_[s]))
                result_.final_models.push_back(final_model_.at(s));
        for (const auto* group : {&servers_, &workers_})
            for (const auto& n : *group)
                if (is_correct(n))
                    result_.node_steps.emplace_back(n.id, n.step);
        result_.trace_hash = sim_.trace_hash();
        result_.trace = sim_.trace();
        result_.events = sim_.dispatched();
        return std::move(result_);
    }

private:
    static bool is_correct(const NodeState& n) { return n.status == NodeStatus::Correct; }

    bool finished() const {
        for (const auto* group : {&servers_, &workers_})
            for (const auto& n : *group)
                if (is_correct(n) && n.step < cfg_.max_steps)
                    return false;
        return true;
    }

    std::uint64_t progress() const {
        std::uint64_t p = 0;
        for (const auto& s : servers_)
            if (is_correct(s))
                p += 2 * s.step + (s.phase == ServerPhase::AwaitExchange ? 1 : 0);
        for (const auto& w : workers_)
            if (is_correct(w))
                p += w.step;
        return p;
    }

    std::vector<Outgoing> broadcast_models(const NodeState& server) const {
        std::vector<Outgoing> out;
        for (NodeId w : worker_ids_)
            out.push_back({w, ProtocolMessage{MessageKind::ModelBroadcast, server.step, server.id, server.model}});
        return out;
    }

    /// Sends on behalf of `from`, applying the attack when `from` is Byzantine.
    void emit(const NodeState& from, std::vector<Outgoing> msgs, SimTime lead = 0.0) {
        if (from.status == NodeStatus::Crashed)
            return;
        const AttackSpec& attack = cfg_.attack;
        SimTime extra = 0.0;
        if (from.status == NodeStatus::Byzantine) {
            if (attack.kind == AttackKind::Omission)
                return;
            if (attack.kind == AttackKind::Delay)
                extra = attack.delay;
        }
        for (auto& out : msgs) {
            if (out.msg.step >= cfg_.max_steps && out.msg.kind != MessageKind::GradientSubmit &&
                out.msg.kind != MessageKind::ModelExchange)
                continue;
            if (from.status == NodeStatus::Byzantine) {
                const bool hit = out.msg.kind == MessageKind::GradientSubmit ? attack.hits_gradients()
                                                                              : carries_model(out.msg.kind) &&
                                                                                    attack.hits_models();
                if (hit) {
                    // Same corrupted payload for every recipient of this (step, kind).
                    Rng rng(derive_seed(derive_seed(from.rng_seed, out.msg.step),
                                        100 + static_cast<std::uint64_t>(out.msg.kind)));
                    out.msg.payload = corrupt(out.msg.payload, attack, rng);
                }
            }
            sim_.send(std::move(out.msg), out.receiver, lead, extra);
        }
    }

    void handle(const SimEvent& ev) {
        const ProtocolMessage& msg = ev.msg;
        if (ev.receiver.role == Role::Worker) {
            NodeState& w = workers_[ev.receiver.index];
            switch (msg.kind) {
            case MessageKind::ModelBroadcast:
                if (cc_.mode != Mode::Garfield && msg.sender.index != primary_)
                    return;
                if (msg.step < w.step)
                    return;
                w.pending.offer(msg.step, MessageKind::ModelBroadcast, msg.sender, msg.payload);
                break;
            case MessageKind::PrimaryAnnounce:
                if (msg.sender.index != primary_ || msg.step < w.step)
                    return;
                if (msg.step > w.step) {
                    w.step = msg.step;
                    w.pending.discard_before(w.step);
                }
                w.pending.offer(msg.step, MessageKind::ModelBroadcast, msg.sender, msg.payload);
                break;
            case MessageKind::Timeout:
                on_timeout(ev.receiver.index, msg.step);
                return;
            default:
                return;
            }
            advance_worker(ev.receiver.index);
            return;
        }

        NodeState& s = servers_[ev.receiver.index];
        switch (msg.kind) {
        case MessageKind::GradientSubmit:
            if (msg.step < s.step || (msg.step == s.step && s.phase != ServerPhase::AwaitGradients))
                return;
            s.pending.offer(msg.step, MessageKind::GradientSubmit, msg.sender, msg.payload);
            break;
        case MessageKind::ModelExchange:
            if (msg.step < s.step)
                return;
            s.pending.offer(msg.step, MessageKind::ModelExchange, msg.sender, msg.payload);
            break;
        default:
            return;
        }
        advance_server(ev.receiver.index);
    }

    void advance_worker(std::size_t index) {
        NodeState& w = workers_[index];
        const std::size_t q = cc_.model_quorum();
        while (w.step < cfg_.max_steps && w.pending.count(w.step, MessageKind::ModelBroadcast) >= q) {
            const auto models = w.pending.get(w.step, MessageKind::ModelBroadcast);
            const std::vector<Received> quorum(models.begin(), models.end());
            WorkerEnv env{cc_, task_, shards_[index], cfg_.task.batch_size, server_ids_};
            auto out = worker_step(w, quorum, env);
            w.pending.discard_before(w.step);
            emit(w, std::move(out), sim_.delays().compute_time);
            if (cc_.mode == Mode::CrashTolerant && w.step < cfg_.max_steps)
                arm_timer(index);
        }
    }

    void arm_timer(std::size_t index) {
        const NodeState& w = workers_[index];
        timer_primary_[index] = primary_;
        timer_deadline_[index] = sim_.now() + sim_.delays().compute_time + cfg_.resolved_crash_timeout();
        sim_.set_timer(w.id, timer_deadline_[index],
                       ProtocolMessage{MessageKind::Timeout, w.step, w.id, {}});
    }

    void on_timeout(std::size_t index, std::size_t awaited_step) {
        const NodeState& w = workers_[index];
        // Only the most recently armed timer counts.
        if (sim_.now() < timer_deadline_[index])
            return;
        if (w.step != awaited_step || timer_primary_[index] != primary_ || w.step >= cfg_.max_steps)
            return;
        const std::size_t old = primary_;
        const Failover fo = crash_failover(servers_, primary_);
        primary_ = fo.new_primary;
        result_.primary_changes.push_back({sim_.now(), old, primary_});
        std::vector<Outgoing> announce;
        for (NodeId wid : worker_ids_)
            announce.push_back({wid, fo.announce});
        emit(servers_[primary_], std::move(announce));
        for (std::size_t i = 0; i < workers_.size(); ++i)
            if (workers_[i].step < cfg_.max_steps)
                arm_timer(i);
    }

    void advance_server(std::size_t index) {
        NodeState& s = servers_[index];
        while (s.step < cfg_.max_steps && s.status != NodeStatus::Crashed) {
            ServerEnv env{cc_, cfg_.schedule, peers_[index], worker_ids_, index == primary_};
            if (s.phase == ServerPhase::AwaitGradients &&
                s.pending.count(s.step, MessageKind::GradientSubmit) >= cc_.worker_quorum()) {
                const std::size_t step = s.step;
                const auto grads = s.pending.get(step, MessageKind::GradientSubmit);
                const std::vector<Received> quorum(grads.begin(), grads.end());
                auto out = server_step(s, quorum, env);
                check_divergence(s);
                if (const auto it = crash_after_.find(index); it != crash_after_.end() && it->second == step) {
                    s.status = NodeStatus::Crashed;
                    sim_.crash(s.id);
                    flush_metrics();
                    return;
                }
                if (cc_.mode != Mode::Garfield) {
                    s.pending.discard_before(s.step);
                    step_completed(index);
                }
                emit(s, std::move(out));
                continue;
            }
            if (s.phase == ServerPhase::AwaitExchange &&
                s.pending.count(s.step, MessageKind::ModelExchange) >= cc_.server_quorum() - 1) {
                const auto models = s.pending.get(s.step, MessageKind::ModelExchange);
                const std::vector<Received> quorum(models.begin(), models.end());
                auto out = server_contract(s, quorum, env);
                check_divergence(s);
                s.pending.discard_before(s.step);
                step_completed(index);
                emit(s, std::move(out));
                continue;
            }
            break;
        }
    }

    void check_divergence(const NodeState& s) {
        if (!is_correct(s))
            return;
        const double n = norm(s.model);
        if (!std::isfinite(n) || n > cfg_.divergence_threshold)
            throw ExperimentAborted(Errc::DivergenceGuard,
                                    "model norm of " + to_string(s.id) + " reached " + std::to_string(n) +
                                        " at step " + std::to_string(s.step),
                                    std::move(result_.records));
    }

    void step_completed(std::size_t index) {
        const NodeState& s = servers_[index];
        if (s.step == cfg_.max_steps)
            final_model_[index] = s.model;
        if (!is_correct(s))
            return;
        snapshots_[s.step][index] = s.model;
        flush_metrics();
    }

    /// Emits records for every step that all correct servers have completed.
    void flush_metrics() {
        while (!snapshots_.empty()) {
            auto& [step, models] = *snapshots_.begin();
            std::vector<ParamVector> correct;
            for (std::size_t s = 0; s < servers_.size(); ++s) {
                if (!is_correct(servers_[s]))
                    continue;
                const auto it = models.find(s);
                if (it == models.end())
                    return;
                correct.push_back(it->second);
            }
            if (correct.empty())
                return;
            if (cfg_.capture_models)
                result_.model_history.push_back(correct);
            if (step % cfg_.metrics_every == 0 || step == cfg_.max_steps)
                result_.records.push_back(measure(step, correct));
            snapshots_.erase(snapshots_.begin());
        }
    }

    MetricsRecord measure(std::size_t step, const std::vector<ParamVector>& models) const {
        MetricsRecord r;
        r.step = step;
        r.sim_time = sim_.now();
        const ParamVector mean = average(models);
        r.train_loss = full_loss(task_, mean);
        r.test_accuracy = test_accuracy(task_, mean);
        r.max_pairwise_dist = models.size() >= 2 ? max_pairwise_distance(models) : 0.0;
        if (models.size() >= 3 && cfg_.alignment_every > 0 && step % cfg_.alignment_every == 0)
            r.alignment = alignment_stats(models, cfg_.alignment_k);
        return r;
    }

    const ExperimentConfig& cfg_;
    const ClusterConfig& cc_;
    const TrainingTask& task_;
    Simulator sim_;
    std::vector<NodeState> servers_;
    std::vector<NodeState> workers_;
    std::vector<NodeId> server_ids_;
    std::vector<NodeId> worker_ids_;
    std::vector<std::vector<NodeId>> peers_;
    std::vector<std::vector<std::size_t>> shards_;
    std::map<std::size_t, std::size_t> crash_after_;
    std::vector<std::size_t> timer_primary_;
    std::vector<SimTime> timer_deadline_;
    std::size_t primary_ = 0;
    std::map<std::size_t, std::map<std::size_t, ParamVector>> snapshots_;
    std::map<std::size_t, ParamVector> final_model_;
    ExperimentResult result_;
};

} // namespace

SimTime ExperimentConfig::resolved_crash_timeout() const noexcept {
    if (crash_timeout > 0.0)
        return crash_timeout;
    const SimTime mean = delays.mean_delay();
    return mean > 0.0 ? 10.0 * mean : 1.0;
}

SimTime ExperimentConfig::resolved_livelock_horizon() const noexcept {
    if (livelock_horizon > 0.0)
        return livelock_horizon;
    SimTime worst_extra = attack.kind == AttackKind::Delay ? attack.delay : 0.0;
    for (const auto& [link, extra] : delays.adversarial_extra)
        worst_extra = std::max(worst_extra, extra);
    return std::max(1000.0, 1000.0 * (delays.mean_delay() + delays.compute_time) + 10.0 * worst_extra);
}

void ExperimentConfig::validate() const {
    cluster.validate();
    attack.validate(cluster.n_w, cluster.f_w, cluster.n_ps, cluster.f_ps);
    schedule.validate();
    delays.validate();
    if (max_steps == 0)
        throw Error(Errc::InvalidConfig, "max_steps must be >= 1");
    if (metrics_every == 0)
        throw Error(Errc::InvalidConfig, "metrics_every must be >= 1");
    if (alignment_k < 2)
        throw Error(Errc::InvalidConfig, "alignment_k must be >= 2");
    if (task.batch_size == 0)
        throw Error(Errc::InvalidConfig, "batch_size must be >= 1");
    if (task.samples < cluster.n_w)
        throw Error(Errc::InvalidConfig, "need at least one training sample per worker");
    if (!(divergence_threshold > 0.0))
        throw Error(Errc::InvalidConfig, "divergence_threshold must be positive");
    if (!(crash_timeout >= 0.0) || !(livelock_horizon >= 0.0))
        throw Error(Errc::InvalidConfig, "timeouts must be non-negative");
    std::vector<std::size_t> crashed;
    for (const auto& c : crashes) {
        if (c.server >= cluster.n_ps)
            throw Error(Errc::InvalidConfig, "crash refers to server " + std::to_string(c.server) + " out of range");
        if (attack.targets_server(c.server))
            throw Error(Errc::InvalidConfig, "a Byzantine server cannot also be scheduled to crash");
        crashed.push_back(c.server);
    }
    std::sort(crashed.begin(), crashed.end());
    if (std::adjacent_find(crashed.begin(), crashed.end()) != crashed.end())
        throw Error(Errc::InvalidConfig, "a server is scheduled to crash twice");
    if (crashed.size() + attack.server_targets.size() > cluster.f_ps)
        throw Error(Errc::InvalidConfig, "crashed plus Byzantine servers exceed f_ps=" + std::to_string(cluster.f_ps));
}

TrainingTask make_task(const ExperimentConfig& config) {
    const auto& t = config.task;
    return generate_dataset(t.kind, t.dim, t.samples, t.noise_sigma, derive_seed(config.seed, kStreamDataset),
                            t.hidden_width, t.num_classes);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const TrainingTask task = make_task(config);
    return run_experiment(config, task);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const TrainingTask& task) {
    config.validate();
    task.validate();
    ClusterRun run(config, task);
    return run.run();
}

} // namespace byzsgd
