#pragma once

#include "voltvar/trainer.hpp"

#include <string>
#include <vector>

namespace voltvar {

/// Everything a CLI run needs; filled from a JSON config file (strict
/// schema, unknown keys rejected) with flag overrides applied on top.
struct RunConfig {
    std::string feeder_path;
    std::string scenarios_path;
    std::string output_dir = ".";
    TrainerConfig trainer;
    // gen-scenarios
    int scenario_count = 80;
    std::string profile = "high_solar";
    // evaluate / validate-ac: entries are "none", "default", or a rules CSV
    std::vector<std::string> rule_specs;
    int histogram_bins = 50;
};

RunConfig load_run_config(const std::string& path);

void cmd_build_model(const RunConfig& cfg);
void cmd_gen_scenarios(const RunConfig& cfg);
void cmd_design(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_validate_ac(const RunConfig& cfg);

/// Full argument parsing plus exit-code mapping:
/// 0 ok, 1 config error, 2 I/O error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

} // namespace voltvar
