#include "byzsgd/simnet.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "byzsgd/error.hpp"

namespace byzsgd {

namespace {

void fnv_mix(std::uint64_t& h, std::uint64_t value) noexcept {
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xFF;
        h *= 0x100000001b3ULL;
    }
}

std::uint64_t node_code(NodeId id) noexcept {
    return (static_cast<std::uint64_t>(id.role) << 32) | id.index;
}

} // namespace

std::string_view to_string(DelayKind kind) noexcept {
    switch (kind) {
    case DelayKind::Constant: return "constant";
    case DelayKind::UniformJitter: return "uniform_jitter";
    case DelayKind::AdversarialSchedule: return "adversarial_schedule";
    }
    return "unknown";
}

std::optional<DelayKind> parse_delay_kind(std::string_view name) noexcept {
    for (auto k : {DelayKind::Constant, DelayKind::UniformJitter, DelayKind::AdversarialSchedule})
        if (to_string(k) == name)
            return k;
    return std::nullopt;
}

SimTime DelayModel::mean_delay() const noexcept {
    return kind == DelayKind::Constant ? base : base + jitter / 2;
}

void DelayModel::validate() const {
    auto ok = [](double x) { return std::isfinite(x) && x >= 0.0; };
    if (!ok(base) || !ok(jitter) || !ok(compute_time))
        throw Error(Errc::NegativeDelay, "delays must be finite and non-negative");
    for (const auto& [link, extra] : adversarial_extra)
        if (!ok(extra))
            throw Error(Errc::NegativeDelay, "adversarial delay for " + to_string(link.sender) + "->" +
                                                 to_string(link.receiver) + " must be finite and non-negative");
}

EventStamp EventQueue::schedule(ProtocolMessage msg, NodeId receiver, SimTime now, const DelayModel& delays,
                                     Rng& rng, SimTime extra) {
    if (!std::isfinite(now))
        throw Error(Errc::InvalidArgument, "scheduling time must be finite");
    SimTime delay = delays.base + extra;
    if (delays.kind != DelayKind::Constant && delays.jitter > 0.0)
        delay += delays.jitter * rng.uniform();
    if (!delays.adversarial_extra.empty()) {
        const auto it = delays.adversarial_extra.find(LinkStep{msg.sender, receiver, msg.step});
        if (it != delays.adversarial_extra.end())
            delay += it->second;
    }
    if (!(delay >= 0.0) || !std::isfinite(delay))
        throw Error(Errc::NegativeDelay, "computed delivery delay is negative or not finite");
    return push_at(now + delay, receiver, std::move(msg));
}

EventStamp EventQueue::push_at(SimTime at, NodeId receiver, ProtocolMessage msg) {
    const EventStamp stamp{at, next_seq_++};
    heap_.push(SimEvent{stamp.deliver_at, stamp.seq, receiver, std::move(msg)});
    return stamp;
}

SimEvent EventQueue::pop() {
    // priority_queue::top is const; the copy is the price of std containers
    SimEvent ev = heap_.top();
    heap_.pop();
    return ev;
}

Simulator::Simulator(DelayModel delays, std::uint64_t seed) : delays_(std::move(delays)), rng_(derive_seed(seed, 0xde1a)) {
    delays_.validate();
}

void Simulator::send(ProtocolMessage msg, NodeId receiver, SimTime lead, SimTime extra) {
    queue_.schedule(std::move(msg), receiver, now_ + lead, delays_, rng_, extra);
}

void Simulator::set_timer(NodeId owner, SimTime at, ProtocolMessage msg) { queue_.push_at(at, owner, std::move(msg)); }

void Simulator::crash(NodeId node) { crashed_.insert(node); }

bool Simulator::is_crashed(NodeId node) const { return crashed_.contains(node); }

void Simulator::run_until(const std::function<bool()>& stop, const Handler& handler,
                          const std::function<std::uint64_t()>& progress, SimTime horizon) {
    std::uint64_t last_progress = progress();
    SimTime last_progress_time = now_;
    while (!stop()) {
        if (queue_.empty())
            throw Error(Errc::LivelockGuard, "event queue drained at t=" + std::to_string(now_) +
                                                 " before the stop condition was reached");
        SimEvent ev = queue_.pop();
        if (ev.deliver_at - last_progress_time > horizon)
            throw Error(Errc::LivelockGuard, "no progress for more than " + std::to_string(horizon) +
                                                 " simulated seconds (t=" + std::to_string(ev.deliver_at) + ")");
        now_ = ev.deliver_at;
        if (crashed_.contains(ev.receiver))
            continue;
        ++dispatched_;
        fnv_mix(trace_hash_, std::bit_cast<std::uint64_t>(ev.deliver_at));
        fnv_mix(trace_hash_, node_code(ev.msg.sender));
        fnv_mix(trace_hash_, node_code(ev.receiver));
        fnv_mix(trace_hash_, static_cast<std::uint64_t>(ev.msg.kind));
        fnv_mix(trace_hash_, ev.msg.step);
        if (record_trace_)
            trace_.push_back(TraceRecord{ev.deliver_at, ev.msg.sender, ev.receiver, ev.msg.kind, ev.msg.step});
        handler(ev);
        const std::uint64_t p = progress();
        if (p != last_progress) {
            last_progress = p;
            last_progress_time = now_;
        }
    }
}

} // namespace byzsgd
