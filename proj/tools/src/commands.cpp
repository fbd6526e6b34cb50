#include "byzsgd_cli/commands.hpp"

#include "byzsgd_cli/config.hpp"
#include "byzsgd_cli/csv.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace byzsgd::cli {

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c == '\n' ? ' ' : c;
    }
    return out;
}

void report(std::ostream& err, std::string_view code, std::string_view message) {
    err << "error: code=" << code << " message=\"" << escape(message) << "\"\n";
}

/// Runs `body` and converts exceptions to an exit code plus an error line.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const Error& e) {
        report(err, to_string(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const IoError& e) {
        report(err, "IoError", e.what());
        return kExitFailure;
    } catch (const std::exception& e) {
        report(err, "Failure", e.what());
        return kExitFailure;
    }
}

bool is_stdout(const std::string& path) { return path.empty() || path == "-"; }

void write_output(const std::string& path, const std::string& text, std::ostream& out_stream) {
    if (is_stdout(path)) {
        out_stream << text;
        out_stream.flush();
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file)
        throw IoError("cannot open '" + path + "' for writing");
    file << text;
    if (!file.flush())
        throw IoError("failed writing '" + path + "'");
}

ExperimentFile load(const std::string& path) {
    try {
        return load_experiment_file(path);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
}

struct RunOutcome {
    std::string csv;
    int code = kExitOk;
    std::string error_code;
    std::string error_message;
};

RunOutcome run_one(ExperimentConfig config) {
    RunOutcome outcome;
    std::ostringstream csv;
    try {
        const auto result = run_experiment(config);
        write_run_csv(csv, result.records);
    } catch (const ExperimentAborted& e) {
        write_run_csv(csv, e.records());
        outcome.code = exit_code_for(e.code());
        outcome.error_code = std::string(to_string(e.code()));
        outcome.error_message = e.what();
    } catch (const Error& e) {
        outcome.code = exit_code_for(e.code());
        outcome.error_code = std::string(to_string(e.code()));
        outcome.error_message = e.what();
    }
    outcome.csv = csv.str();
    return outcome;
}

std::string seeded_path(const std::string& out, std::uint64_t seed) {
    std::filesystem::path p(out);
    const std::string ext = p.has_extension() ? p.extension().string() : std::string(".csv");
    p.replace_extension();
    return p.string() + ".seed" + std::to_string(seed) + ext;
}

} // namespace

int exit_code_for(Errc code) noexcept {
    switch (code) {
    case Errc::DivergenceGuard: return kExitDivergence;
    case Errc::LivelockGuard:
    case Errc::NoLivePrimary: return kExitLivelock;
    case Errc::DimensionMismatch:
    case Errc::EmptyInput:
    case Errc::TooManyNonFinite:
    case Errc::QuorumViolation:
    case Errc::InvalidArgument:
    case Errc::EnumerationBudget:
    case Errc::NoVarianceFormula:
    case Errc::NegativeDelay:
    case Errc::InvalidConfig:
    case Errc::ParseError: return kExitConfig;
    case Errc::QuorumUnderflow:
    case Errc::DuplicateSender: return kExitFailure;
    }
    return kExitFailure;
}

std::uint64_t mda_budget_from_env() {
    const char* raw = std::getenv("BYZSGD_MDA_BUDGET");
    if (raw == nullptr || *raw == '\0')
        return kDefaultMdaBudget;
    std::uint64_t value = 0;
    const std::string_view text(raw);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw Error(Errc::InvalidConfig, "BYZSGD_MDA_BUDGET must be a non-negative integer, got '" +
                                             std::string(text) + "'");
    return value;
}

int cmd_run(const RunOptions& opts, std::ostream& out_stream, std::ostream& err) {
    return guarded(err, [&] {
        ExperimentFile file = load(opts.config);
        ExperimentConfig base = file.experiment;
        if (opts.seed)
            base.seed = *opts.seed;
        base.cluster.mda_budget = mda_budget_from_env();
        if (opts.repeat == 0)
            throw Error(Errc::InvalidConfig, "--repeat must be >= 1");

        if (opts.repeat == 1) {
            const RunOutcome r = run_one(base);
            write_output(opts.out, r.csv, out_stream);
            if (r.code != kExitOk)
                report(err, r.error_code, r.error_message);
            return r.code;
        }

        if (is_stdout(opts.out))
            throw Error(Errc::InvalidConfig, "--repeat needs --out naming a file");
        std::vector<RunOutcome> outcomes(opts.repeat);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < opts.repeat; i = next++) {
                ExperimentConfig cfg = base;
                cfg.seed = base.seed + i;
                outcomes[i] = run_one(cfg);
            }
        };
        const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, opts.repeat));
        std::vector<std::thread> pool;
        for (std::size_t j = 1; j < jobs; ++j)
            pool.emplace_back(worker);
        worker();
        for (auto& t : pool)
            t.join();

        int code = kExitOk;
        for (std::size_t i = 0; i < opts.repeat; ++i) {
            const std::uint64_t seed = base.seed + i;
            write_output(seeded_path(opts.out, seed), outcomes[i].csv, out_stream);
            if (outcomes[i].code != kExitOk) {
                report(err, outcomes[i].error_code, "seed " + std::to_string(seed) + ": " + outcomes[i].error_message);
                if (code == kExitOk)
                    code = outcomes[i].code;
            }
        }
        return code;
    });
}

int cmd_gar(const GarOptions& opts, std::ostream& out_stream, std::ostream& err) {
    return guarded(err, [&] {
        const auto rule = parse_gar_rule(opts.rule);
        if (!rule)
            throw Error(Errc::InvalidConfig, "unknown rule '" + opts.rule + "'");
        std::vector<ParamVector> inputs;
        if (is_stdout(opts.input)) {
            inputs = read_vectors_csv(std::cin);
        } else {
            std::ifstream in(opts.input, std::ios::binary);
            if (!in)
                throw IoError("cannot open '" + opts.input + "'");
            inputs = read_vectors_csv(in);
        }
        if (inputs.empty())
            throw Error(Errc::EmptyInput, "input holds no vectors");

        GarSpec spec{*rule, inputs.size(), opts.f, 1};
        if (*rule == GarRule::MultiKrum)
            spec.m = opts.m ? *opts.m : (spec.q >= spec.f + 2 ? spec.q - spec.f - 2 : 0);
        const AggregationOutcome outcome = aggregate(spec, inputs, mda_budget_from_env());

        std::ostringstream row;
        write_vector_row(row, outcome.result);
        write_output(opts.out, row.str(), out_stream);
        if (*rule == GarRule::MultiKrum || *rule == GarRule::MDA) {
            out_stream << "selected=";
            for (std::size_t i = 0; i < outcome.selected_indices.size(); ++i)
                out_stream << (i ? "," : "") << outcome.selected_indices[i];
            out_stream << '\n';
        }
        if (!outcome.excluded_nonfinite.empty()) {
            out_stream << "excluded_nonfinite=";
            for (std::size_t i = 0; i < outcome.excluded_nonfinite.size(); ++i)
                out_stream << (i ? "," : "") << outcome.excluded_nonfinite[i];
            out_stream << '\n';
        }
        return kExitOk;
    });
}

int cmd_variance_check(const VarianceOptions& opts, std::ostream& out_stream, std::ostream& err) {
    return guarded(err, [&] {
        ExperimentFile file = load(opts.config);
        VarianceSetup setup = file.variance;
        if (opts.kappa)
            setup.kappa = *opts.kappa;
        if (opts.steps)
            setup.steps = *opts.steps;
        const TrainingTask task = make_task(file.experiment);
        const VarianceReport report = check_variance_condition(task, setup);
        std::ostringstream csv;
        write_variance_csv(csv, report);
        write_output(opts.out, csv.str(), out_stream);
        return kExitOk;
    });
}

int run_cli(int argc, char** argv, std::ostream& out_stream, std::ostream& err) {
    CLI::App app{"Byzantine-resilient distributed SGD simulator", "byzsgd"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Simulate one experiment and write metrics CSV");
    run_cmd->add_option("--config", run.config, "Experiment file (JSON)")->required();
    run_cmd->add_option("--seed", run.seed, "Override the file's seed");
    run_cmd->add_option("--out", run.out, "Output CSV, '-' for stdout")->default_val("-");
    run_cmd->add_option("--repeat", run.repeat, "Run seeds seed..seed+N-1, one CSV each")->default_val(1);
    run_cmd->add_option("--jobs", run.jobs, "Parallel runs for --repeat")->default_val(1);

    GarOptions gar;
    auto* gar_cmd = app.add_subcommand("gar", "Aggregate CSV vectors with one rule");
    gar_cmd->add_option("--rule", gar.rule, "average|median|multi_krum|mda|bulyan")->required();
    gar_cmd->add_option("--f", gar.f, "Tolerated Byzantine inputs")->default_val(0);
    gar_cmd->add_option("--m", gar.m, "Multi-Krum selection size");
    gar_cmd->add_option("--input", gar.input, "Input CSV, one vector per row, '-' for stdin")->required();
    gar_cmd->add_option("--out", gar.out, "Output CSV, '-' for stdout")->default_val("-");

    VarianceOptions var;
    auto* var_cmd = app.add_subcommand("variance-check", "Check the variance condition along a training run");
    var_cmd->add_option("--config", var.config, "Experiment file (JSON)")->required();
    var_cmd->add_option("--kappa", var.kappa, "Override variance.kappa");
    var_cmd->add_option("--steps", var.steps, "Override variance.steps");
    var_cmd->add_option("--out", var.out, "Output CSV, '-' for stdout")->default_val("-");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e, out_stream, err);
        report(err, "UsageError", e.what());
        return kExitConfig;
    }

    if (run_cmd->parsed())
        return cmd_run(run, out_stream, err);
    if (gar_cmd->parsed())
        return cmd_gar(gar, out_stream, err);
    return cmd_variance_check(var, out_stream, err);
}

} // namespace byzsgd::cli
