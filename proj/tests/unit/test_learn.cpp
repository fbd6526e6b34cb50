#include <byzsgd/error.hpp>
#include <byzsgd/learn.hpp>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace byzsgd;

namespace {

Minibatch full_batch(const TrainingTask& t) {
    Minibatch b;
    b.indices.resize(t.train.size());
    std::iota(b.indices.begin(), b.indices.end(), std::size_t{0});
    return b;
}

double max_fd_error(const TrainingTask& task, const ParamVector& params, const Minibatch& batch) {
    const ParamVector g = compute_gradient(task, params, batch);
    const double eps = 1e-5;
    double worst = 0.0;
    auto batch_loss = [&](const ParamVector& p) {
        double s = 0;
        for (std::size_t i : batch.indices)
            s += sample_loss(task, p, task.train[i]);
        return s / static_cast<double>(batch.size());
    };
    for (std::size_t k = 0; k < params.dim(); ++k) {
        ParamVector plus = params, minus = params;
        plus[k] += eps;
        minus[k] -= eps;
        const double fd = (batch_loss(plus) - batch_loss(minus)) / (2 * eps);
        worst = std::max(worst, std::abs(fd - g[k]));
    }
    return worst;
}

} // namespace

TEST(Gradient, LinearSingleSample) {
    TrainingTask t;
    t.kind = TaskKind::LinearRegression;
    t.dim = 1;
    t.train = {Sample{{1.0}, 0.0}};
    EXPECT_EQ(compute_gradient(t, ParamVector{1.0}, full_batch(t)), (ParamVector{1.0}));
}

TEST(Gradient, ZeroAtLeastSquaresOptimum) {
    const auto t = generate_dataset(TaskKind::LinearRegression, 5, 300, 0.3, 4);
    Eigen::MatrixXd X(t.train.size(), 5);
    Eigen::VectorXd y(t.train.size());
    for (std::size_t i = 0; i < t.train.size(); ++i) {
        for (std::size_t j = 0; j < 5; ++j)
            X(static_cast<long>(i), static_cast<long>(j)) = t.train[i].features[j];
        y(static_cast<long>(i)) = t.train[i].label;
    }
    const Eigen::VectorXd w = X.colPivHouseholderQr().solve(y);
    const ParamVector opt(std::vector<double>(w.data(), w.data() + w.size()));
    const auto g = full_gradient(t, opt);
    for (double c : g)
        EXPECT_LE(std::abs(c), 1e-9);
}

TEST(Gradient, FiniteDifferencesAllKinds) {
    for (auto kind : {TaskKind::LinearRegression, TaskKind::LogisticRegression, TaskKind::MLP1Hidden}) {
        const auto t = generate_dataset(kind, 4, 60, 0.2, 9, 5, 3);
        Rng rng(3);
        ParamVector p(t.parameter_count());
        for (auto& x : p)
            x = 0.5 * rng.normal();
        Minibatch b;
        for (std::size_t i = 0; i < 8; ++i)
            b.indices.push_back(i * 3);
        EXPECT_LE(max_fd_error(t, p, b), 1e-4) << to_string(kind);
    }
}

TEST(Gradient, Errors) {
    const auto t = generate_dataset(TaskKind::LinearRegression, 3, 10, 0.0, 1);
    EXPECT_THROW(compute_gradient(t, ParamVector(2), full_batch(t)), Error);
    EXPECT_THROW(compute_gradient(t, ParamVector(3), Minibatch{}), Error);
}

TEST(Gradient, UnbiasedOverSingletons) {
    const auto t = generate_dataset(TaskKind::LogisticRegression, 3, 50, 0.1, 2);
    const ParamVector p{0.3, -0.2, 0.1};
    ParamVector acc(3);
    for (std::size_t i = 0; i < t.train.size(); ++i)
        acc += compute_gradient(t, p, Minibatch{{i}});
    acc *= 1.0 / static_cast<double>(t.train.size());
    const auto full = full_gradient(t, p);
    for (std::size_t k = 0; k < 3; ++k)
        EXPECT_NEAR(acc[k], full[k], 1e-15);
}

TEST(SgdStep, Arithmetic) {
    LrSchedule s{ScheduleKind::Constant, 0.5, 1.0};
    EXPECT_EQ(sgd_step(ParamVector{1, 1}, ParamVector{1, -1}, s, 0), (ParamVector{0.5, 1.5}));
    EXPECT_EQ(sgd_step(ParamVector{1, 2}, ParamVector{0, 0}, s, 7), (ParamVector{1, 2}));
}

TEST(SgdStep, QuadraticBowlGeometricDecay) {
    LrSchedule s{ScheduleKind::Constant, 0.1, 1.0};
    ParamVector x(4, 1.0);
    const double start = norm(x);
    for (std::size_t k = 0; k < 100; ++k)
        x = sgd_step(x, x, s, k);
    EXPECT_NEAR(norm(x), std::pow(0.9, 100) * start, 1e-15);
}

TEST(SgdStep, ExactUpdateFormula) {
    LrSchedule s;
    Rng rng(5);
    for (std::size_t k = 0; k < 50; ++k) {
        ParamVector p(3), g(3);
        for (std::size_t i = 0; i < 3; ++i) {
            p[i] = rng.normal();
            g[i] = rng.normal();
        }
        const auto r = sgd_step(p, g, s, k);
        for (std::size_t i = 0; i < 3; ++i)
            EXPECT_NEAR(r[i] + s.rate(k) * g[i], p[i], 4e-16 * std::max(1.0, std::abs(p[i])));
    }
}

TEST(SgdStep, DimensionMismatch) {
    EXPECT_THROW(sgd_step(ParamVector{1}, ParamVector{1, 2}, LrSchedule{}, 0), Error);
}

TEST(Schedule, InverseDecayStrictlyDecreasing) {
    LrSchedule s;
    EXPECT_DOUBLE_EQ(s.rate(0), 0.1);
    EXPECT_DOUBLE_EQ(s.rate(50), 0.05);
    for (std::size_t k = 0; k < 1000; ++k) {
        EXPECT_GT(s.rate(k), s.rate(k + 1));
        EXPECT_GT(s.rate(k + 1), 0.0);
    }
    EXPECT_THROW((LrSchedule{ScheduleKind::Constant, 0.0, 1.0}.validate()), Error);
    EXPECT_THROW((LrSchedule{ScheduleKind::InverseDecay, 0.1, 0.0}.validate()), Error);
}

TEST(Dataset, NoiselessGroundTruthIsStationary) {
    const auto t = generate_dataset(TaskKind::LinearRegression, 6, 400, 0.0, 12);
    for (double c : full_gradient(t, t.ground_truth))
        EXPECT_LE(std::abs(c), 1e-9);
}

TEST(Dataset, Deterministic) {
    for (auto kind : {TaskKind::LinearRegression, TaskKind::LogisticRegression, TaskKind::MLP1Hidden}) {
        const auto a = generate_dataset(kind, 4, 100, 0.1, 77);
        const auto b = generate_dataset(kind, 4, 100, 0.1, 77);
        ASSERT_EQ(a.train.size(), b.train.size());
        for (std::size_t i = 0; i < a.train.size(); ++i) {
            EXPECT_EQ(a.train[i].features, b.train[i].features);
            EXPECT_EQ(a.train[i].label, b.train[i].label);
        }
        EXPECT_EQ(a.ground_truth, b.ground_truth);
    }
}

TEST(Dataset, LeastSquaresRecoversGroundTruth) {
    const double sigma = 0.5;
    const std::size_t n = 2000, d = 10;
    const auto t = generate_dataset(TaskKind::LinearRegression, d, n, sigma, 2024);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j)
            X(static_cast<long>(i), static_cast<long>(j)) = t.train[i].features[j];
        y(static_cast<long>(i)) = t.train[i].label;
    }
    const Eigen::VectorXd w = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    for (std::size_t j = 0; j < d; ++j)
        EXPECT_LE(std::abs(w(static_cast<long>(j)) - t.ground_truth[j]), 3 * sigma / std::sqrt(double(n))) << j;
}

TEST(Dataset, ClassificationLabelsAndSplit) {
    const auto logi = generate_dataset(TaskKind::LogisticRegression, 3, 500, 0.1, 3);
    EXPECT_EQ(logi.test.size(), 100u);
    for (const auto& s : logi.train)
        EXPECT_TRUE(s.label == 0.0 || s.label == 1.0);
    const auto mlp = generate_dataset(TaskKind::MLP1Hidden, 3, 500, 0.1, 3, 8, 4);
    for (const auto& s : mlp.train) {
        EXPECT_GE(s.label, 0.0);
        EXPECT_LT(s.label, 4.0);
        EXPECT_EQ(s.label, std::floor(s.label));
    }
    EXPECT_TRUE(std::isnan(test_accuracy(generate_dataset(TaskKind::LinearRegression, 2, 10, 0, 1), ParamVector(2))));
}

TEST(Partition, EvenSplit) {
    const auto t = generate_dataset(TaskKind::LinearRegression, 2, 10, 0.0, 1);
    const auto shards = partition_iid(t, 2, 5);
    EXPECT_EQ(shards[0].size(), 5u);
    EXPECT_EQ(shards[1].size(), 5u);
}

TEST(Partition, RemainderSpread) {
    const auto t = generate_dataset(TaskKind::LinearRegression, 2, 10, 0.0, 1);
    const auto shards = partition_iid(t, 3, 5);
    EXPECT_EQ(shards[0].size(), 4u);
    EXPECT_EQ(shards[1].size(), 3u);
    EXPECT_EQ(shards[2].size(), 3u);
}

TEST(Partition, DisjointCover) {
    const auto t = generate_dataset(TaskKind::LinearRegression, 2, 97, 0.0, 1);
    const auto shards = partition_iid(t, 7, 5);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& s : shards) {
        total += s.size();
        seen.insert(s.begin(), s.end());
    }
    EXPECT_EQ(total, 97u);
    EXPECT_EQ(seen.size(), 97u);
    EXPECT_EQ(*seen.rbegin(), 96u);
    EXPECT_EQ(partition_iid(t, 7, 5), shards);
}

TEST(Minibatch, DistinctIndicesFromPool) {
    std::vector<std::size_t> pool{3, 5, 7, 9, 11, 13};
    Rng rng(4);
    const auto b = sample_minibatch(pool, 4, rng);
    std::set<std::size_t> uniq(b.indices.begin(), b.indices.end());
    EXPECT_EQ(uniq.size(), 4u);
    for (auto i : b.indices)
        EXPECT_NE(std::find(pool.begin(), pool.end(), i), pool.end());
}

TEST(TaskNames, RoundTrip) {
    for (auto k : {TaskKind::LinearRegression, TaskKind::LogisticRegression, TaskKind::MLP1Hidden})
        EXPECT_EQ(parse_task_kind(to_string(k)), k);
}
