#include <byzsgd/error.hpp>
#include <byzsgd/protocol.hpp>

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace byzsgd;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no byzsgd::Error thrown";
    return Errc::ParseError;
}

std::vector<NodeId> servers(std::size_t n) {
    std::vector<NodeId> out;
    for (std::uint32_t i = 0; i < n; ++i)
        out.push_back(NodeId::server(i));
    return out;
}

std::vector<NodeId> workers(std::size_t n) {
    std::vector<NodeId> out;
    for (std::uint32_t i = 0; i < n; ++i)
        out.push_back(NodeId::worker(i));
    return out;
}

ClusterConfig garfield(std::size_t n_w, std::size_t f_w, std::size_t n_ps, std::size_t f_ps) {
    ClusterConfig c;
    c.mode = Mode::Garfield;
    c.n_w = n_w;
    c.f_w = f_w;
    c.n_ps = n_ps;
    c.f_ps = f_ps;
    return c;
}

} // namespace

TEST(ClusterConfig, GarfieldBounds) {
    EXPECT_NO_THROW(garfield(11, 1, 4, 1).validate());
    auto bad = garfield(11, 1, 3, 1);
    try {
        bad.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidConfig);
        EXPECT_NE(std::string(e.what()).find("n_ps >= 3 f_ps + 1"), std::string::npos);
    }
    auto qps = garfield(11, 1, 4, 1);
    qps.q_ps = 4;
    EXPECT_EQ(code_of([&] { qps.validate(); }), Errc::InvalidConfig);
    qps.synchronous = true;
    EXPECT_NO_THROW(qps.validate());
    auto qw = garfield(11, 3, 4, 1);
    qw.q_w = 6;
    EXPECT_EQ(code_of([&] { qw.validate(); }), Errc::InvalidConfig);
}

TEST(ClusterConfig, Defaults) {
    const auto c = garfield(11, 1, 10, 3);
    EXPECT_EQ(c.worker_quorum(), 10u);
    EXPECT_EQ(c.server_quorum(), 7u);
    EXPECT_EQ(default_server_quorum(4, 1), 3u);
    EXPECT_EQ(default_server_quorum(20, 2), 7u);
    EXPECT_EQ(c.worker_rule(), GarRule::Median);
    ClusterConfig v;
    v.mode = Mode::Vanilla;
    v.n_ps = 1;
    v.f_ps = 0;
    v.f_w = 0;
    EXPECT_NO_THROW(v.validate());
    EXPECT_EQ(v.worker_rule(), GarRule::Average);
    EXPECT_EQ(v.worker_quorum(), 11u);
    v.n_ps = 2;
    EXPECT_EQ(code_of([&] { v.validate(); }), Errc::InvalidConfig);
    ClusterConfig ct;
    ct.mode = Mode::CrashTolerant;
    ct.n_ps = 1;
    ct.f_ps = 1;
    EXPECT_EQ(code_of([&] { ct.validate(); }), Errc::InvalidConfig);
    ct.n_ps = 2;
    EXPECT_NO_THROW(ct.validate());
    ct.gar = GarRule::Median;
    EXPECT_EQ(code_of([&] { ct.validate(); }), Errc::InvalidConfig);
}

TEST(ClusterConfig, ModeNames) {
    for (auto m : {Mode::Garfield, Mode::CrashTolerant, Mode::Vanilla})
        EXPECT_EQ(parse_mode(to_string(m)), m);
}

TEST(QuorumBuffer, RejectsDuplicateSender) {
    QuorumBuffer b;
    EXPECT_TRUE(b.offer(3, MessageKind::GradientSubmit, NodeId::worker(1), ParamVector{1}));
    EXPECT_FALSE(b.offer(3, MessageKind::GradientSubmit, NodeId::worker(1), ParamVector{2}));
    EXPECT_TRUE(b.offer(3, MessageKind::ModelExchange, NodeId::worker(1), ParamVector{2}));
    EXPECT_TRUE(b.offer(4, MessageKind::GradientSubmit, NodeId::worker(1), ParamVector{2}));
    EXPECT_EQ(b.count(3, MessageKind::GradientSubmit), 1u);
    EXPECT_EQ(b.get(3, MessageKind::GradientSubmit)[0].payload, (ParamVector{1}));
    b.discard_before(4);
    EXPECT_EQ(b.count(3, MessageKind::GradientSubmit), 0u);
    EXPECT_EQ(b.count(4, MessageKind::GradientSubmit), 1u);
}

struct WorkerFixture : ::testing::Test {
    TrainingTask task = generate_dataset(TaskKind::LinearRegression, 3, 120, 0.1, 4);
    std::vector<std::size_t> shard = [] {
        std::vector<std::size_t> s(40);
        for (std::size_t i = 0; i < 40; ++i)
            s[i] = i;
        return s;
    }();
    std::vector<NodeId> srv = servers(7);

    NodeState fresh() const {
        NodeState st;
        st.id = NodeId::worker(0);
        st.rng_seed = 99;
        return st;
    }
};

TEST_F(WorkerFixture, IdenticalModelsGiveLocalGradient) {
    const auto cc = garfield(5, 1, 7, 2);
    WorkerEnv env{cc, task, shard, 8, srv};
    const ParamVector model{0.2, -0.4, 1.0};
    std::vector<Received> rx;
    for (std::uint32_t s = 0; s < 7; ++s)
        rx.push_back({NodeId::server(s), model});
    auto st = fresh();
    const auto out = worker_step(st, rx, env);
    EXPECT_EQ(st.model, model);
    EXPECT_EQ(st.step, 1u);
    ASSERT_EQ(out.size(), 7u);
    Rng rng(derive_seed(99, 0));
    const auto expected = compute_gradient(task, model, sample_minibatch(shard, 8, rng));
    for (const auto& o : out) {
        EXPECT_EQ(o.msg.kind, MessageKind::GradientSubmit);
        EXPECT_EQ(o.msg.step, 0u);
        EXPECT_EQ(o.msg.payload, expected);
    }
}

TEST_F(WorkerFixture, ByzantineModelConfinedToCorrectRange) {
    const auto cc = garfield(5, 1, 7, 2);
    ASSERT_EQ(cc.model_quorum(), 5u);
    WorkerEnv env{cc, task, shard, 8, srv};
    std::mt19937_64 gen(1);
    std::vector<Received> rx;
    auto models = oracle::random_vectors(gen, 5, 3);
    models[2] = models[0] * -100.0;
    for (std::uint32_t s = 0; s < 5; ++s)
        rx.push_back({NodeId::server(s), models[s]});
    auto st = fresh();
    worker_step(st, rx, env);
    for (std::size_t j = 0; j < 3; ++j) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t s = 0; s < 5; ++s)
            if (s != 2) {
                lo = std::min(lo, models[s][j]);
                hi = std::max(hi, models[s][j]);
            }
        EXPECT_GE(st.model[j], lo);
        EXPECT_LE(st.model[j], hi);
    }
}

TEST_F(WorkerFixture, StragglersIgnored) {
    const auto cc = garfield(5, 1, 7, 2);
    WorkerEnv env{cc, task, shard, 8, srv};
    std::mt19937_64 gen(2);
    const auto models = oracle::random_vectors(gen, 7, 3);
    std::vector<Received> first, all;
    for (std::uint32_t s = 0; s < 7; ++s) {
        all.push_back({NodeId::server(s), models[s]});
        if (s < 5)
            first.push_back(all.back());
    }
    auto a = fresh(), b = fresh();
    const auto out_a = worker_step(a, first, env);
    const auto out_b = worker_step(b, all, env);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(out_a[0].msg.payload, out_b[0].msg.payload);
}

TEST_F(WorkerFixture, QuorumErrors) {
    const auto cc = garfield(5, 1, 7, 2);
    WorkerEnv env{cc, task, shard, 8, srv};
    std::vector<Received> few{{NodeId::server(0), ParamVector(3)}, {NodeId::server(1), ParamVector(3)}};
    auto st = fresh();
    EXPECT_EQ(code_of([&] { worker_step(st, few, env); }), Errc::QuorumUnderflow);
    std::vector<Received> dup(5, Received{NodeId::server(0), ParamVector(3)});
    EXPECT_EQ(code_of([&] { worker_step(st, dup, env); }), Errc::DuplicateSender);
    EXPECT_EQ(st.step, 0u);
}

TEST(ServerStep, VanillaAverageThenStep) {
    ClusterConfig cc;
    cc.mode = Mode::Vanilla;
    cc.n_w = 2;
    cc.f_w = 0;
    cc.n_ps = 1;
    cc.f_ps = 0;
    LrSchedule sched{ScheduleKind::Constant, 0.1, 1};
    const auto ws = workers(2);
    ServerEnv env{cc, sched, {}, ws, true};
    NodeState s;
    s.id = NodeId::server(0);
    s.model = ParamVector{0, 0};
    std::vector<Received> rx{{NodeId::worker(0), ParamVector{1, 1}}, {NodeId::worker(1), ParamVector{3, 3}}};
    const auto out = server_step(s, rx, env);
    EXPECT_NEAR(s.model[0], -0.2, 1e-15);
    EXPECT_NEAR(s.model[1], -0.2, 1e-15);
    EXPECT_EQ(s.step, 1u);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].msg.kind, MessageKind::ModelBroadcast);
    EXPECT_EQ(out[0].msg.step, 1u);
}

TEST(ServerStep, GarfieldMdaEffectiveGradientBounded) {
    auto cc = garfield(4, 1, 4, 1);
    cc.gar = GarRule::MDA;
    cc.q_w = 3;
    ASSERT_NO_THROW(cc.validate());
    LrSchedule sched{ScheduleKind::Constant, 1.0, 1};
    const auto peers = servers(4);
    const auto ws = workers(4);
    ServerEnv env{cc, sched, std::span(peers).subspan(1), ws, true};
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 50; ++trial) {
        auto grads = oracle::random_vectors(gen, 3, 4);
        grads[1] = grads[0] * -100.0;
        NodeState s;
        s.id = NodeId::server(0);
        s.model = ParamVector(4);
        std::vector<Received> rx;
        for (std::uint32_t w = 0; w < 3; ++w)
            rx.push_back({NodeId::worker(w), grads[w]});
        const auto out = server_step(s, rx, env);
        EXPECT_EQ(s.phase, ServerPhase::AwaitExchange);
        EXPECT_EQ(out.size(), 3u);
        const ParamVector effective = s.model * -1.0;
        const double bound = distance(grads[0], grads[2]);
        EXPECT_LE(distance(effective, grads[0]), bound + 1e-12);
        EXPECT_LE(distance(effective, grads[2]), bound + 1e-12);
    }
}

TEST(ServerStep, DeterministicReplay) {
    const auto cc = garfield(5, 1, 4, 1);
    LrSchedule sched;
    const auto peers = servers(4);
    const auto ws = workers(5);
    ServerEnv env{cc, sched, std::span(peers).subspan(1), ws, true};
    std::mt19937_64 gen(3);
    const auto grads = oracle::random_vectors(gen, 4, 3);
    std::vector<Received> rx;
    for (std::uint32_t w = 0; w < 4; ++w)
        rx.push_back({NodeId::worker(w), grads[w]});
    NodeState a, b;
    a.model = b.model = ParamVector{1, 2, 3};
    const auto oa = server_step(a, rx, env);
    const auto ob = server_step(b, rx, env);
    ASSERT_EQ(oa.size(), ob.size());
    for (std::size_t i = 0; i < oa.size(); ++i)
        EXPECT_EQ(oa[i].msg.payload, ob[i].msg.payload);
    EXPECT_EQ(code_of([&] { server_step(a, rx, env); }), Errc::InvalidArgument);
}

TEST(ServerContract, IdenticalModelsUnchanged) {
    const auto cc = garfield(5, 1, 4, 1);
    LrSchedule sched;
    const auto peers = servers(4);
    const auto ws = workers(5);
    ServerEnv env{cc, sched, std::span(peers).subspan(1), ws, true};
    NodeState s;
    s.id = NodeId::server(0);
    s.model = ParamVector{1, -1};
    s.phase = ServerPhase::AwaitExchange;
    std::vector<Received> rx{{NodeId::server(1), s.model}, {NodeId::server(2), s.model}};
    const auto out = server_contract(s, rx, env);
    EXPECT_EQ(s.model, (ParamVector{1, -1}));
    EXPECT_EQ(s.step, 1u);
    EXPECT_EQ(s.phase, ServerPhase::AwaitGradients);
    EXPECT_EQ(out.size(), 5u);
}

TEST(ServerContract, HugeModelConfined) {
    const auto cc = garfield(5, 1, 4, 1);
    LrSchedule sched;
    const auto peers = servers(4);
    const auto ws = workers(5);
    ServerEnv env{cc, sched, std::span(peers).subspan(1), ws, true};
    NodeState s;
    s.id = NodeId::server(0);
    s.model = ParamVector{0.1, 0.2};
    s.phase = ServerPhase::AwaitExchange;
    std::vector<Received> rx{{NodeId::server(1), ParamVector{1e6, 1e6}}, {NodeId::server(2), ParamVector{0.3, -0.1}}};
    server_contract(s, rx, env);
    EXPECT_EQ(s.model, (ParamVector{0.3, 0.2}));
}

TEST(ServerContract, NeverExpandsDistance) {
    auto cc = garfield(5, 1, 7, 2);
    LrSchedule sched;
    const auto peers = servers(7);
    const auto ws = workers(5);
    std::mt19937_64 gen(4);
    auto models = oracle::random_vectors(gen, 7, 3);
    double prev = oracle::max_pairwise(oracle::to_vecs(models));
    for (int round = 0; round < 20; ++round) {
        std::vector<ParamVector> next;
        for (std::uint32_t i = 0; i < 7; ++i) {
            std::vector<NodeId> others;
            for (auto p : peers)
                if (p.index != i)
                    others.push_back(p);
            ServerEnv env{cc, sched, others, ws, true};
            NodeState s;
            s.id = NodeId::server(i);
            s.model = models[i];
            s.phase = ServerPhase::AwaitExchange;
            std::vector<Received> rx;
            for (std::uint32_t k = 1; k < 7; ++k) {
                const std::uint32_t j = (i + k * (round + 1)) % 7;
                if (j != i && rx.size() < cc.server_quorum() - 1)
                    rx.push_back({NodeId::server(j), models[j]});
            }
            if (rx.size() < cc.server_quorum() - 1)
                for (std::uint32_t j = 0; j < 7 && rx.size() < cc.server_quorum() - 1; ++j)
                    if (j != i && std::none_of(rx.begin(), rx.end(), [&](const Received& r) { return r.sender.index == j; }))
                        rx.push_back({NodeId::server(j), models[j]});
            server_contract(s, rx, env);
            next.push_back(s.model);
        }
        models = next;
        const double now = oracle::max_pairwise(oracle::to_vecs(models));
        EXPECT_LE(now, prev + 1e-15);
        prev = now;
    }
}

TEST(ServerContract, RejectsOwnModelAndUnderflow) {
    const auto cc = garfield(5, 1, 4, 1);
    LrSchedule sched;
    const auto peers = servers(4);
    const auto ws = workers(5);
    ServerEnv env{cc, sched, std::span(peers).subspan(1), ws, true};
    NodeState s;
    s.id = NodeId::server(0);
    s.model = ParamVector{1};
    s.phase = ServerPhase::AwaitExchange;
    std::vector<Received> one{{NodeId::server(1), ParamVector{1}}};
    EXPECT_EQ(code_of([&] { server_contract(s, one, env); }), Errc::QuorumUnderflow);
    std::vector<Received> own{{NodeId::server(0), ParamVector{1}}, {NodeId::server(1), ParamVector{1}}};
    EXPECT_EQ(code_of([&] { server_contract(s, own, env); }), Errc::DuplicateSender);
}

TEST(CrashFailover, OrderedSuccession) {
    std::vector<NodeState> s(3);
    for (std::uint32_t i = 0; i < 3; ++i) {
        s[i].id = NodeId::server(i);
        s[i].step = 10 + i;
        s[i].model = ParamVector{double(i)};
    }
    s[0].status = NodeStatus::Crashed;
    const auto fo = crash_failover(s, 0);
    EXPECT_EQ(fo.new_primary, 1u);
    EXPECT_EQ(fo.announce.kind, MessageKind::PrimaryAnnounce);
    EXPECT_EQ(fo.announce.sender, NodeId::server(1));
    EXPECT_EQ(fo.announce.step, 11u);
    EXPECT_EQ(fo.announce.payload, (ParamVector{1}));
    s[1].status = NodeStatus::Crashed;
    EXPECT_EQ(crash_failover(s, 1).new_primary, 2u);
    s[2].status = NodeStatus::Crashed;
    EXPECT_EQ(code_of([&] { crash_failover(s, 2); }), Errc::NoLivePrimary);
}
