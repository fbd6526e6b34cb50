#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string_view>
#include <vector>

#include "byzsgd/messages.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd {

/// Abstract simulated seconds.
using SimTime = double;

enum class DelayKind { Constant, UniformJitter, AdversarialSchedule };

std::string_view to_string(DelayKind kind) noexcept;
std::optional<DelayKind> parse_delay_kind(std::string_view name) noexcept;

struct LinkStep {
    NodeId sender;
    NodeId receiver;
    std::size_t step = 0;
    friend auto operator<=>(const LinkStep&, const LinkStep&) = default;
};

/// Per-message delivery delay: base, plus a uniform draw in [0, jitter) for
/// UniformJitter / AdversarialSchedule, plus any adversarial extra registered
/// for (sender, receiver, step). Every delay is finite, so the network is
/// asynchronous but never drops a message on its own.
struct DelayModel {
    DelayKind kind = DelayKind::Constant;
    SimTime base = 1.0;
    SimTime jitter = 0.0;
    std::map<LinkStep, SimTime> adversarial_extra;
    /// Time a worker spends computing a gradient.
    SimTime compute_time = 0.0;

    SimTime mean_delay() const noexcept;
    void validate() const;
};

struct SimEvent {
    SimTime deliver_at = 0.0;
    std::uint64_t seq = 0;
    NodeId receiver{};
    ProtocolMessage msg;
};

struct TraceRecord {
    SimTime time = 0.0;
    NodeId sender{};
    NodeId receiver{};
    MessageKind kind = MessageKind::ModelBroadcast;
    std::size_t step = 0;
};

struct EventStamp {
    SimTime deliver_at = 0.0;
    std::uint64_t seq = 0;
};

/// Events ordered by (deliver_at, seq); seq is a global send counter.
class EventQueue {
public:
    /// Enqueues `msg` for `receiver` at now + delay. Throws NegativeDelay if
    /// the computed delay is negative or not finite.
    EventStamp schedule(ProtocolMessage msg, NodeId receiver, SimTime now, const DelayModel& delays, Rng& rng,
                             SimTime extra = 0.0);
    /// Enqueues at an absolute time (timers).
    EventStamp push_at(SimTime at, NodeId receiver, ProtocolMessage msg);

    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }
    const SimEvent& top() const { return heap_.top(); }
    SimEvent pop();

private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const noexcept {
            if (a.deliver_at != b.deliver_at)
                return a.deliver_at > b.deliver_at;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

/// Single-threaded discrete-event loop. Node logic lives in the handler; the
/// simulator owns time, delivery order, crash filtering and the trace.
class Simulator {
public:
    using Handler = std::function<void(const SimEvent&)>;

    Simulator(DelayModel delays, std::uint64_t seed);

    SimTime now() const noexcept { return now_; }
    const DelayModel& delays() const noexcept { return delays_; }

    /// Sends at now() + `lead` (e.g. compute time) + network delay + `extra`.
    void send(ProtocolMessage msg, NodeId receiver, SimTime lead = 0.0, SimTime extra = 0.0);
    void set_timer(NodeId owner, SimTime at, ProtocolMessage msg);

    /// Events addressed to a crashed node are dropped without dispatch.
    void crash(NodeId node);
    bool is_crashed(NodeId node) const;

    /// Dispatches events until `stop()` holds. Throws LivelockGuard when the
    /// queue drains first, or when simulated time runs more than `horizon`
    /// past the last observed change of `progress()`.
    void run_until(const std::function<bool()>& stop, const Handler& handler,
                   const std::function<std::uint64_t()>& progress, SimTime horizon);

    void record_trace(bool enabled) noexcept { record_trace_ = enabled; }
    const std::vector<TraceRecord>& trace() const noexcept { return trace_; }
    /// FNV-1a over every dispatched (time, sender, receiver, kind, step).
    std::uint64_t trace_hash() const noexcept { return trace_hash_; }
    std::size_t dispatched() const noexcept { return dispatched_; }

private:
    DelayModel delays_;
    Rng rng_;
    EventQueue queue_;
    SimTime now_ = 0.0;
    std::set<NodeId> crashed_;
    bool record_trace_ = false;
    std::vector<TraceRecord> trace_;
    std::uint64_t trace_hash_ = 0xcbf29ce484222325ULL;
    std::size_t dispatched_ = 0;
};

} // namespace byzsgd
