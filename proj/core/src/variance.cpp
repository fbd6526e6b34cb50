#include "byzsgd/variance.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "byzsgd/error.hpp"

namespace byzsgd {

double delta_factor(GarRule rule, std::size_t n, std::size_t f) {
    if (rule == GarRule::Average || rule == GarRule::Bulyan)
        throw Error(Errc::NoVarianceFormula, "no variance factor is defined for " + std::string(to_string(rule)));
    GarSpec{rule, n, f, 1}.validate();
    const double nd = static_cast<double>(n);
    const double fd = static_cast<double>(f);
    switch (rule) {
    case GarRule::MDA:
        return 2.0 * fd / (nd - fd);
    case GarRule::MultiKrum:
        return std::sqrt(2.0 * (nd - fd + (fd * (nd - fd - 2.0) + fd * fd * (nd - fd - 1.0)) / (nd - 2.0 * fd - 2.0)));
    case GarRule::Median:
        return std::sqrt(nd - fd);
    case GarRule::Average:
    case GarRule::Bulyan:
        break;
    }
    return 0.0;
}

VarianceReport check_variance_condition(const TrainingTask& task, const VarianceSetup& setup) {
    if (setup.steps == 0)
        throw Error(Errc::InvalidArgument, "variance check needs steps >= 1");
    if (!(setup.kappa > 1.0) || !std::isfinite(setup.kappa))
        throw Error(Errc::InvalidArgument, "kappa must be a finite value > 1");
    if (setup.rules.empty())
        throw Error(Errc::InvalidArgument, "variance check needs at least one rule");
    if (setup.worker_batch == 0)
        throw Error(Errc::InvalidArgument, "worker batch must be >= 1");
    task.validate();
    setup.schedule.validate();

    std::vector<double> deltas;
    for (GarRule rule : setup.rules)
        deltas.push_back(delta_factor(rule, setup.n, setup.f));

    const std::size_t correct = setup.n - setup.f;
    const std::size_t oracle_size =
        std::min(setup.oracle_batch == 0 ? 100 * setup.worker_batch : setup.oracle_batch, task.train.size());
    std::vector<std::size_t> everything(task.train.size());
    std::iota(everything.begin(), everything.end(), std::size_t{0});

    std::vector<Rng> worker_rngs;
    for (std::size_t w = 0; w < correct; ++w)
        worker_rngs.emplace_back(derive_seed(setup.seed, 0x7700 + w));
    Rng oracle_rng(derive_seed(setup.seed, 0x0a11));

    VarianceReport report;
    report.kappa = setup.kappa;
    report.steps_checked = setup.steps;
    std::vector<std::size_t> hits(setup.rules.size(), 0);

    ParamVector params = initial_params(task, setup.seed);
    std::vector<ParamVector> grads(correct);
    for (std::size_t step = 0; step < setup.steps; ++step) {
        for (std::size_t w = 0; w < correct; ++w)
            grads[w] = compute_gradient(task, params, sample_minibatch(everything, setup.worker_batch, worker_rngs[w]));
        const ParamVector mean = average(grads);
        double spread = 0.0;
        for (const auto& g : grads)
            spread += squared_distance(g, mean);
        spread /= static_cast<double>(correct);
        const double oracle_norm =
            norm(compute_gradient(task, params, sample_minibatch(everything, oracle_size, oracle_rng)));

        for (std::size_t r = 0; r < setup.rules.size(); ++r) {
            VarianceSample s;
            s.step = step;
            s.rule = setup.rules[r];
            s.lhs = setup.kappa * deltas[r] * std::sqrt(spread);
            s.rhs = oracle_norm;
            s.satisfied = s.lhs <= s.rhs;
            hits[r] += s.satisfied ? 1 : 0;
            report.per_step.push_back(s);
        }
        params = sgd_step(params, mean, setup.schedule, step);
    }
    for (std::size_t r = 0; r < setup.rules.size(); ++r)
        report.satisfaction[setup.rules[r]] = static_cast<double>(hits[r]) / static_cast<double>(setup.steps);
    return report;
}

VarianceReport check_variance_condition(const TrainingTask& task, const GarSpec& spec, double kappa,
                                        std::size_t steps, std::size_t oracle_batch, std::uint64_t seed) {
    VarianceSetup setup;
    setup.n = spec.q;
    setup.f = spec.f;
    setup.rules = {spec.rule};
    setup.kappa = kappa;
    setup.steps = steps;
    setup.oracle_batch = oracle_batch;
    setup.seed = seed;
    return check_variance_condition(task, setup);
}

} // namespace byzsgd
