#include <byzsgd/error.hpp>
#include <byzsgd/simnet.hpp>

#include <gtest/gtest.h>

using namespace byzsgd;

namespace {

ProtocolMessage msg(std::size_t step, NodeId sender, MessageKind kind = MessageKind::ModelBroadcast) {
    return ProtocolMessage{kind, step, sender, ParamVector{1.0}};
}

} // namespace

TEST(EventQueue, ConstantDelay) {
    EventQueue q;
    DelayModel d;
    d.base = 1.0;
    Rng rng(1);
    const auto stamp = q.schedule(msg(0, NodeId::server(0)), NodeId::worker(0), 5.0, d, rng);
    EXPECT_DOUBLE_EQ(stamp.deliver_at, 6.0);
    EXPECT_DOUBLE_EQ(q.pop().deliver_at, 6.0);
}

TEST(EventQueue, EqualTimesOrderedBySeq) {
    EventQueue q;
    DelayModel d;
    Rng rng(1);
    for (std::uint32_t i = 0; i < 5; ++i)
        q.schedule(msg(i, NodeId::server(i)), NodeId::worker(0), 0.0, d, rng);
    for (std::uint32_t i = 0; i < 5; ++i) {
        const auto ev = q.pop();
        EXPECT_EQ(ev.msg.step, i);
        EXPECT_EQ(ev.seq, i);
    }
}

TEST(EventQueue, AdversarialExtraDelaysOneLink) {
    EventQueue q;
    DelayModel d;
    d.kind = DelayKind::AdversarialSchedule;
    d.jitter = 0.5;
    d.adversarial_extra[LinkStep{NodeId::server(1), NodeId::worker(1), 3}] = 50.0;
    Rng rng(2);
    for (std::uint32_t s = 0; s < 4; ++s)
        for (std::uint32_t w = 0; w < 3; ++w)
            q.schedule(msg(3, NodeId::server(s)), NodeId::worker(w), 0.0, d, rng);
    SimEvent last;
    while (!q.empty())
        last = q.pop();
    EXPECT_EQ(last.msg.sender, NodeId::server(1));
    EXPECT_EQ(last.receiver, NodeId::worker(1));
    EXPECT_GE(last.deliver_at, 51.0);
}

TEST(EventQueue, NegativeDelayRejected) {
    EventQueue q;
    DelayModel d;
    Rng rng(1);
    try {
        q.schedule(msg(0, NodeId::server(0)), NodeId::worker(0), 0.0, d, rng, -5.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NegativeDelay);
    }
    d.base = -1;
    EXPECT_THROW(d.validate(), Error);
}

TEST(DelayModel, JitterWithinBounds) {
    EventQueue q;
    DelayModel d;
    d.kind = DelayKind::UniformJitter;
    d.base = 2.0;
    d.jitter = 1.0;
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const auto s = q.schedule(msg(0, NodeId::server(0)), NodeId::worker(0), 0.0, d, rng);
        EXPECT_GE(s.deliver_at, 2.0);
        EXPECT_LT(s.deliver_at, 3.0);
    }
    EXPECT_DOUBLE_EQ(d.mean_delay(), 2.5);
}

namespace {

/// Ping-pong between two nodes for `rounds` exchanges.
std::pair<std::uint64_t, std::size_t> ping_pong(std::uint64_t seed, std::size_t rounds) {
    DelayModel d;
    d.kind = DelayKind::UniformJitter;
    d.jitter = 0.7;
    Simulator sim(d, seed);
    std::size_t count = 0;
    sim.send(msg(0, NodeId::worker(0)), NodeId::server(0));
    sim.run_until([&] { return count >= rounds; },
                  [&](const SimEvent& ev) {
                      ++count;
                      sim.send(msg(ev.msg.step + 1, ev.receiver), ev.msg.sender);
                  },
                  [&] { return count; }, 100.0);
    return {sim.trace_hash(), sim.dispatched()};
}

} // namespace

TEST(Simulator, DeterministicTraceHash) {
    EXPECT_EQ(ping_pong(5, 200), ping_pong(5, 200));
    EXPECT_NE(ping_pong(5, 200).first, ping_pong(6, 200).first);
}

TEST(Simulator, CrashedNodeEventsDropped) {
    Simulator sim(DelayModel{}, 1);
    sim.crash(NodeId::server(1));
    EXPECT_TRUE(sim.is_crashed(NodeId::server(1)));
    sim.send(msg(0, NodeId::worker(0)), NodeId::server(1));
    sim.send(msg(0, NodeId::worker(0)), NodeId::server(2));
    std::vector<NodeId> seen;
    bool done = false;
    sim.record_trace(true);
    sim.run_until([&] { return done; },
                  [&](const SimEvent& ev) {
                      seen.push_back(ev.receiver);
                      done = true;
                  },
                  [] { return 0; }, 10.0);
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0], NodeId::server(2));
    EXPECT_EQ(sim.dispatched(), 1u);
    ASSERT_EQ(sim.trace().size(), 1u);
    EXPECT_EQ(sim.trace()[0].receiver, NodeId::server(2));
}

TEST(Simulator, LivelockWhenQueueDrains) {
    Simulator sim(DelayModel{}, 1);
    sim.send(msg(0, NodeId::worker(0)), NodeId::server(0));
    try {
        sim.run_until([] { return false; }, [](const SimEvent&) {}, [] { return 0; }, 1000.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::LivelockGuard);
    }
}

TEST(Simulator, LivelockWhenNoProgress) {
    Simulator sim(DelayModel{}, 1);
    sim.send(msg(0, NodeId::worker(0)), NodeId::server(0));
    EXPECT_THROW(sim.run_until([] { return false; },
                               [&](const SimEvent& ev) { sim.send(ev.msg, ev.receiver); }, [] { return 0; }, 25.0),
                 Error);
    EXPECT_LE(sim.now(), 26.0);
}

TEST(Simulator, TimersFireAtAbsoluteTime) {
    Simulator sim(DelayModel{}, 1);
    sim.set_timer(NodeId::worker(2), 7.5, ProtocolMessage{MessageKind::Timeout, 3, NodeId::worker(2), {}});
    SimTime fired = -1;
    sim.run_until([&] { return fired >= 0; }, [&](const SimEvent&) { fired = sim.now(); }, [] { return 0; }, 100.0);
    EXPECT_DOUBLE_EQ(fired, 7.5);
}

TEST(DelayKindNames, RoundTrip) {
    for (auto k : {DelayKind::Constant, DelayKind::UniformJitter, DelayKind::AdversarialSchedule})
        EXPECT_EQ(parse_delay_kind(to_string(k)), k);
}

TEST(NodeIdNames, RoundTrip) {
    EXPECT_EQ(to_string(NodeId::worker(3)), "w3");
    EXPECT_EQ(parse_node_id("s12"), NodeId::server(12));
    EXPECT_FALSE(parse_node_id("x1").has_value());
    EXPECT_FALSE(parse_node_id("w").has_value());
}
