#pragma once

// Closed-loop empirical risk minimization for GRNN and GCNN controllers.
//
// The loss of a parameter set is the mean LQR cost of closed-loop rollouts
// from a batch of initial conditions. Gradients are exact reverse-mode
// derivatives through both the controller recursion and the plant.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grnn/controllers.hpp"
#include "grnn/lqr.hpp"
#include "grnn/random.hpp"

namespace grnn {

enum class Schedule { cosine, step_decay };

// Threshold of the l1 prox on S: lr * lambda, optionally divided entrywise by
// ADAM's bias-corrected sqrt(v_hat) + eps so shrinkage and gradient steps share a metric.
enum class ProxScaling { adam, plain };

struct TrainConfig {
    std::size_t batch_size = 20;
    std::size_t total_batches = 750;
    double lr = 0.02;
    Schedule schedule = Schedule::cosine;
    double decay_factor = 0.9;      // step_decay only
    std::size_t decay_every = 10;   // step_decay only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-4;     // decoupled
    double l1_weight = 0.0;         // lambda on ||S||_1 (GRNN only)
    ProxScaling prox_scaling = ProxScaling::adam;
    std::size_t validation_every = 10;
    std::size_t validation_size = 100;
    std::optional<double> gradient_clip;  // global-norm bound
    std::uint64_t seed = 0;

    static TrainConfig grnn_defaults();
    static TrainConfig gcnn_defaults();

    // Throws ParameterError on non-positive counts or betas outside (0, 1).
    void validate() const;
};

[[nodiscard]] std::string to_string(Schedule s);
[[nodiscard]] Schedule schedule_from_string(const std::string& name);
[[nodiscard]] std::string to_string(ProxScaling s);
[[nodiscard]] ProxScaling prox_scaling_from_string(const std::string& name);

[[nodiscard]] double lr_at(std::size_t batch, const TrainConfig& config);

// Initial conditions with their centralized-LQR costs, for normalized-cost evaluation.
struct EvaluationSet {
    std::vector<Matrix> x0;
    std::vector<double> lqr_costs;

    [[nodiscard]] std::size_t size() const noexcept { return x0.size(); }
};

// Standard-normal initial conditions, one N x p matrix each.
[[nodiscard]] std::vector<Matrix> sample_initial_conditions(const LqrProblem& prob, std::size_t count, Rng& rng);
[[nodiscard]] EvaluationSet make_evaluation_set(const LqrProblem& prob, std::size_t count, Rng& rng);

// Per-trajectory closed-loop costs (hidden state reset to zero for each).
[[nodiscard]] std::vector<double> closed_loop_costs(const GrnnParams& params, const LqrProblem& prob,
                                                    std::span<const Matrix> x0);
[[nodiscard]] std::vector<double> closed_loop_costs(const GcnnParams& params, const LqrProblem& prob,
                                                    std::span<const Matrix> x0);

[[nodiscard]] double closed_loop_loss(const GrnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0_batch);
[[nodiscard]] double closed_loop_loss(const GcnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0_batch);

template <class Params>
[[nodiscard]] double evaluate_normalized(const Params& params, const LqrProblem& prob, const EvaluationSet& set) {
    const auto costs = closed_loop_costs(params, prob, set.x0);
    return normalized_cost(costs, set.lqr_costs);
}

// Trainable matrices in a fixed order: GRNN (S if trained), F, W, G; GCNN H_{l,k} by layer then tap.
[[nodiscard]] std::vector<Matrix*> trainable_parameters(GrnnParams& params);
[[nodiscard]] std::vector<Matrix*> trainable_parameters(GcnnParams& params);
[[nodiscard]] std::vector<const Matrix*> trainable_parameters(const GrnnParams& params);
[[nodiscard]] std::vector<const Matrix*> trainable_parameters(const GcnnParams& params);

struct LossGradient {
    double loss = 0.0;
    std::vector<Matrix> grads;  // mirrors trainable_parameters order
};

[[nodiscard]] LossGradient loss_gradients(const GrnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0_batch);
[[nodiscard]] LossGradient loss_gradients(const GcnnParams& params, const LqrProblem& prob, std::span<const Matrix> x0_batch);

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::size_t step = 0;
};

[[nodiscard]] AdamState make_adam_state(std::span<Matrix* const> params);

// Optional global-norm clip, then decoupled weight decay p *= (1 - lr*wd),
// then the bias-corrected ADAM update.
void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix> grads, double lr,
               const TrainConfig& config);

struct CurvePoint {
    std::size_t batch;
    double cost;  // validation normalized cost
};

struct LearningCurve {
    std::vector<CurvePoint> samples;
};

struct CurveQuartiles {
    std::size_t batch;
    double q1;
    double median;
    double q3;
};

// Linear-interpolation quantile of unsorted values (q in [0, 1]).
[[nodiscard]] double quantile(std::vector<double> values, double q);

// Per-batch quartiles across curves that share sample batches.
[[nodiscard]] std::vector<CurveQuartiles> aggregate_curves(std::span<const LearningCurve> curves);

template <class Params>
struct TrainResult {
    Params params;
    LearningCurve curve;
    std::vector<double> loss_history;
};

// Samples a fresh N(0, I) batch each iteration from rng and records the validation
// normalized cost every validation_every batches and after the last batch.
// With l1_weight > 0 the shift operator takes a proximal l1 step after each update.
// Throws TrainingAborted (stage = "train") if the loss becomes non-finite.
[[nodiscard]] TrainResult<GrnnParams> train(const LqrProblem& prob, GrnnParams params, const TrainConfig& config,
                                            const EvaluationSet& validation, Rng& rng);
[[nodiscard]] TrainResult<GcnnParams> train(const LqrProblem& prob, GcnnParams params, const TrainConfig& config,
                                            const EvaluationSet& validation, Rng& rng);

}  // namespace grnn
