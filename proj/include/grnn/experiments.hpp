#pragma once

// Benchmark and sweep harness shared by the CLI and the acceptance suite.
//
// Seeding: instance i of a run with base seed b uses derive_seed(b, i). Every
// stochastic stage of that instance (generation, validation set, evaluation
// set, per-variant training) draws from its own child stream of that seed,
// so any (instance, variant) or (instance, lambda) cell can be rerun alone.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grnn/codesign.hpp"
#include "grnn/controllers.hpp"
#include "grnn/lqr.hpp"
#include "grnn/serialize.hpp"
#include "grnn/training.hpp"

namespace grnn {

enum class Variant { grnn, grnn_dense, grnn_sparse, grnn_fixed, gcnn, autonomous, lqr };

[[nodiscard]] std::string to_string(Variant v);
[[nodiscard]] Variant variant_from_string(const std::string& name);

struct InstanceSpec {
    std::size_t nodes = 20;
    std::size_t k_nearest = 5;
    double norm_a = 0.995;
    double norm_b = 1.0;
    std::size_t horizon = 50;
};

struct Instance {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    LqrProblem problem;
};

[[nodiscard]] std::uint64_t instance_seed(std::uint64_t base_seed, std::size_t index);
// Samples the topology and plant from derive_seed(base_seed, index), then solves the DARE.
[[nodiscard]] Instance generate_instance(const InstanceSpec& spec, std::uint64_t base_seed, std::size_t index);

[[nodiscard]] Json instance_to_json(const Instance& inst);
[[nodiscard]] Instance instance_from_json(const Json& j);

// An instance with its validation and held-out evaluation sets.
struct PreparedInstance {
    Instance instance;
    EvaluationSet validation;
    EvaluationSet evaluation;
};

[[nodiscard]] PreparedInstance prepare_instance(Instance inst, std::size_t validation_size, std::size_t eval_size);

struct ExperimentSettings {
    TrainConfig grnn_config = TrainConfig::grnn_defaults();
    TrainConfig gcnn_config = TrainConfig::gcnn_defaults();
    GrnnDims dims{};
    std::vector<GcnnLayerSpec> gcnn_layers = default_gcnn_layers();
    Activation activation = Activation::tanh;
    double lambda = 1.0;  // grnn-sparse
    double threshold = kDefaultSupportThreshold;
    std::size_t eval_size = 100;
    std::size_t jobs = 1;
};

struct VariantRun {
    Variant variant = Variant::grnn;
    std::size_t instance = 0;
    std::uint64_t seed = 0;
    std::optional<double> final_cost;  // normalized, on the evaluation set
    std::optional<std::size_t> edge_count;  // communication links used by S (GRNN variants)
    LearningCurve curve;
    Json checkpoint;  // trained parameters, null for untrained variants
    std::string error;
};

// Trains (if needed) and evaluates one variant on one instance.
[[nodiscard]] VariantRun run_variant(const PreparedInstance& inst, Variant variant, const ExperimentSettings& settings);

struct VariantSummary {
    Variant variant;
    std::size_t successes = 0;
    std::size_t failures = 0;
    double q1 = 0.0, median = 0.0, q3 = 0.0;
};

struct BenchmarkResult {
    std::vector<VariantRun> runs;  // variant-major, then instance
    std::vector<VariantSummary> summaries;

    [[nodiscard]] const VariantSummary& summary(Variant v) const;
    [[nodiscard]] std::vector<LearningCurve> curves(Variant v) const;
};

[[nodiscard]] BenchmarkResult run_benchmark(std::span<const PreparedInstance> instances, std::span<const Variant> variants,
                                            const ExperimentSettings& settings);

[[nodiscard]] TradeoffCurve run_sweep(std::span<const PreparedInstance> instances, std::span<const double> lambdas,
                                      const ExperimentSettings& settings);

// Fixed-precision number formatting used by every CSV writer.
[[nodiscard]] std::string format_number(double v);

// Each CSV starts with a "# config: <json>" line recording the resolved configuration.
[[nodiscard]] std::string benchmark_csv(const BenchmarkResult& result, const Json& config);
[[nodiscard]] std::string benchmark_instances_csv(const BenchmarkResult& result, const Json& config);
[[nodiscard]] std::string learning_curve_csv(std::span<const LearningCurve> curves, const Json& config);
[[nodiscard]] std::string tradeoff_csv(const TradeoffCurve& curve, const Json& config);

[[nodiscard]] Json settings_to_json(const ExperimentSettings& settings);
[[nodiscard]] Json train_config_to_json(const TrainConfig& c);

}  // namespace grnn
