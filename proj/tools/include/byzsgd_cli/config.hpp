#pragma once

#include <byzsgd/experiment.hpp>
#include <byzsgd/variance.hpp>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

namespace byzsgd::cli {

/// Parsed experiment file. `variance` holds the optional variance-check
/// section; its schedule and seed are taken from the experiment.
struct ExperimentFile {
    ExperimentConfig experiment;
    VarianceSetup variance;
};

/// Throws Error(ParseError) on malformed JSON, wrong types or unknown keys,
/// and Error(InvalidConfig, ...) from validation.
ExperimentFile parse_experiment(const nlohmann::json& doc);
ExperimentFile parse_experiment_text(const std::string& text);
ExperimentFile load_experiment_file(const std::filesystem::path& path);

} // namespace byzsgd::cli
