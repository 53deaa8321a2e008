#pragma once

// Controller / communication-topology co-design:
//   1. train a dense-S GRNN on loss + lambda * ||S||_1 (proximal l1 steps),
//   2. threshold |S_ij| >= eps to identify a topology,
//   3. refine on the identified support with lambda = 0, warm-started.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grnn/controllers.hpp"
#include "grnn/graphs.hpp"
#include "grnn/training.hpp"

namespace grnn {

inline constexpr double kDefaultSupportThreshold = 0.004;

// Entrywise soft threshold sign(s) * max(|s| - tau, 0), diagonal included.
[[nodiscard]] Matrix prox_l1(const Matrix& s, double tau);
// Per-entry thresholds; tau must have the shape of s.
[[nodiscard]] Matrix prox_l1(const Matrix& s, const Matrix& tau);

// Edge j -> i iff |s(i, j)| >= eps for i != j. The diagonal is never an edge.
[[nodiscard]] Topology threshold_support(const Matrix& s, double eps = kDefaultSupportThreshold);

struct CodesignOptions {
    double threshold = kDefaultSupportThreshold;
    GrnnDims dims{};
    Activation activation = Activation::tanh;
};

struct CodesignResult {
    double lambda = 0.0;
    Topology identified_topology;
    std::size_t edge_count = 0;
    GrnnParams step1_params;
    GrnnParams refined_params;
    // Normalized costs on the held-out evaluation set.
    double step1_cost = 0.0;
    double refined_cost = 0.0;
    // Normalized costs on the validation set; refinement_regressed iff refined > step 1.
    double step1_validation_cost = 0.0;
    double refined_validation_cost = 0.0;
    bool refinement_regressed = false;
    // Quartiles of per-initial-condition cost ratios of the refined controller.
    double eval_q1 = 0.0;
    double eval_median = 0.0;
    double eval_q3 = 0.0;
    LearningCurve step1_curve;
    LearningCurve refined_curve;
};

// Both stages use config (with l1_weight = lambda for stage 1 and 0 for stage 2)
// and draw from independent child streams of rng. Training failures surface
// as TrainingAborted with stage "step1" or "refine".
[[nodiscard]] CodesignResult codesign(const LqrProblem& prob, double lambda, const TrainConfig& config,
                                      const EvaluationSet& validation, const EvaluationSet& evaluation, Rng& rng,
                                      const CodesignOptions& options = {});

// One problem instance of a sweep with its paired validation/evaluation sets.
struct SweepInstance {
    const LqrProblem* problem = nullptr;
    const EvaluationSet* validation = nullptr;
    const EvaluationSet* evaluation = nullptr;
    std::uint64_t seed = 0;
};

struct SweepCell {
    std::size_t instance = 0;
    std::size_t lambda_index = 0;
    double lambda = 0.0;
    std::optional<CodesignResult> result;
    std::string error;  // non-empty iff result is empty
};

struct TradeoffPoint {
    double lambda = 0.0;
    double edges_q1 = 0.0, edges_median = 0.0, edges_q3 = 0.0;
    double cost_q1 = 0.0, cost_median = 0.0, cost_q3 = 0.0;
    std::size_t successes = 0;
    std::size_t failures = 0;
};

struct TradeoffCurve {
    std::vector<TradeoffPoint> points;  // ordered by lambda
    std::vector<SweepCell> cells;       // instance-major

    [[nodiscard]] std::size_t failures() const;
};

// Seed of the codesign run for one (instance, lambda) cell. Depends on the lambda
// value rather than its grid position, so a cell is reproducible in isolation.
[[nodiscard]] std::uint64_t cell_seed(std::uint64_t instance_seed, double lambda);

// Runs codesign on every (instance, lambda) cell using up to `jobs` threads. A
// single lambda is accepted and yields a one-point curve.
[[nodiscard]] TradeoffCurve sweep_lambda(std::span<const SweepInstance> instances, std::span<const double> lambdas,
                                         const TrainConfig& config, const CodesignOptions& options = {},
                                         std::size_t jobs = 1);

// 13 points log-spaced over [1e-2, 1e2] plus the exact values 1 and 2.
[[nodiscard]] std::vector<double> default_lambda_grid();

}  // namespace grnn
