#pragma once

#include <byzsgd/error.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace byzsgd::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitDivergence = 3,
    kExitLivelock = 4,
};

int exit_code_for(Errc code) noexcept;

struct RunOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t repeat = 1;
    std::size_t jobs = 1;
};

struct GarOptions {
    std::string rule;
    std::size_t f = 0;
    std::optional<std::size_t> m;
    std::string input;
    std::string out;
};

struct VarianceOptions {
    std::string config;
    std::optional<double> kappa;
    std::optional<std::size_t> steps;
    std::string out;
};

/// Each command returns an exit code. Failures print one line
/// `error: code=<Code> message="<text>"` to `err`. An `out` of "-" or ""
/// writes to `out_stream`.
int cmd_run(const RunOptions& opts, std::ostream& out_stream, std::ostream& err);
int cmd_gar(const GarOptions& opts, std::ostream& out_stream, std::ostream& err);
int cmd_variance_check(const VarianceOptions& opts, std::ostream& out_stream, std::ostream& err);

/// Full command-line entry point.
int run_cli(int argc, char** argv, std::ostream& out_stream, std::ostream& err);

/// Enumeration budget for MDA: BYZSGD_MDA_BUDGET if set, else the library default.
std::uint64_t mda_budget_from_env();

} // namespace byzsgd::cli
