#pragma once

// Subcommands of the grnn_codesign tool. Each returns the process exit code:
// 0 when every requested cell succeeded, 1 when any failed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "grnn/experiments.hpp"

namespace grnn {

struct CliConfig {
    InstanceSpec spec;
    std::size_t instance_count = 10;
    std::uint64_t seed = 1;
    // Directory of instance_*.json files (benchmark, sweep) or one instance file (train, codesign, eval).
    std::filesystem::path instances;
    std::filesystem::path output = "out";
    std::filesystem::path params;  // eval only
    ExperimentSettings settings;
    std::vector<Variant> variants;  // benchmark; empty means all
    Variant variant = Variant::grnn;  // train
    std::vector<double> lambdas;  // sweep; empty means default_lambda_grid()
};

// Resolved configuration embedded in every artifact. Paths and the job count
// are left out so reruns into another directory stay byte-identical.
[[nodiscard]] Json config_to_json(const CliConfig& cfg, const char* command);

// Sorted instance_*.json files of a directory.
[[nodiscard]] std::vector<std::filesystem::path> instance_files(const std::filesystem::path& dir);
[[nodiscard]] Instance load_instance(const std::filesystem::path& file);

int cmd_gen(const CliConfig& cfg, std::ostream& log);
int cmd_benchmark(const CliConfig& cfg, std::ostream& log);
int cmd_train(const CliConfig& cfg, std::ostream& log);
int cmd_codesign(const CliConfig& cfg, std::ostream& log);
int cmd_sweep(const CliConfig& cfg, std::ostream& log);
int cmd_eval(const CliConfig& cfg, std::ostream& log);

// Parses argv (flags plus an optional key=value file given by --config) and dispatches.
int run_cli(int argc, char** argv);

}  // namespace grnn
