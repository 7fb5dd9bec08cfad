#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "voi/decision.hpp"

namespace voi::cli {

enum class OutputFormat { json, csv };

// One analysis run: which problem, optional parameter overrides, the
// sample budget and seed, and where the result document goes.
struct RunConfig {
    std::string problem;                        // ventilation | ashp | gshp | tabular
    std::string tabular_path;                   // required when problem == tabular
    std::map<std::string, std::string> overrides;
    std::uint64_t n_samples = 1'000'000;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> trace_stride;
    std::optional<std::string> output_path;
    OutputFormat format = OutputFormat::json;
    std::optional<std::string> load_csv;        // gshp only: external load profile
    unsigned workers = 0;                       // 0 = hardware concurrency
};

// Parses the tabular problem JSON schema:
//   {"sense": "maximize"|"minimize", "actions": [...], "states": [...],
//    "probabilities": [...], "utilities": [[...], ...]}
TabularProblem parse_tabular(const std::string& path);

// Executes one run: builds the problem, solves it, writes the result
// document (and the trace, if requested).  Returns the process exit
// status: 0 on success, 2 for configuration errors, 3 for numerical
// failures.
int run(const RunConfig& config);

// Full command-line entry point (argument parsing plus run()).
int run_main(int argc, const char* const* argv);

}  // namespace voi::cli
