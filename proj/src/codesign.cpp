#include "grnn/codesign.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "grnn/parallel.hpp"

namespace grnn {

Matrix prox_l1(const Matrix& s, double tau) {
    if (tau < 0.0) throw ParameterError("prox_l1: tau must be non-negative");
    Matrix out = s;
    for (double& v : out.values()) {
        const double mag = std::abs(v) - tau;
        v = mag > 0.0 ? std::copysign(mag, v) : 0.0;
    }
    return out;
}

Matrix prox_l1(const Matrix& s, const Matrix& tau) {
    if (tau.rows() != s.rows() || tau.cols() != s.cols()) throw DimensionError("prox_l1: threshold shape mismatch");
    Matrix out = s;
    auto o = out.values();
    const auto t = tau.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (t[i] < 0.0) throw ParameterError("prox_l1: tau must be non-negative");
        const double mag = std::abs(o[i]) - t[i];
        o[i] = mag > 0.0 ? std::copysign(mag, o[i]) : 0.0;
    }
    return out;
}

Topology threshold_support(const Matrix& s, double eps) {
    if (!(eps > 0.0)) throw ParameterError("threshold_support: eps must be positive");
    if (!s.is_square()) throw DimensionError("threshold_support: matrix is not square");
    Topology t(s.rows());
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j)
            if (i != j && std::abs(s(i, j)) >= eps) t.add_edge(j, i);
    return t;
}

namespace {

std::vector<double> cost_ratios(const GrnnParams& params, const LqrProblem& prob, const EvaluationSet& set) {
    auto costs = closed_loop_costs(params, prob, set.x0);
    for (std::size_t i = 0; i < costs.size(); ++i) costs[i] /= set.lqr_costs[i];
    return costs;
}

}  // namespace

CodesignResult codesign(const LqrProblem& prob, double lambda, const TrainConfig& config,
                        const EvaluationSet& validation, const EvaluationSet& evaluation, Rng& rng,
                        const CodesignOptions& options) {
    if (lambda < 0.0) throw ParameterError("codesign: lambda must be non-negative");
    Rng init_rng = rng.child(0);
    Rng step1_rng = rng.child(1);
    Rng refine_rng = rng.child(2);

    CodesignResult result;
    result.lambda = lambda;

    GrnnParams dense =
        init_grnn(prob.sys.source_topology, options.dims, ShiftPolicy::dense, init_rng, options.activation);
    TrainConfig step1_config = config;
    step1_config.l1_weight = lambda;
    TrainResult<GrnnParams> step1;
    try {
        step1 = train(prob, std::move(dense), step1_config, validation, step1_rng);
    } catch (const TrainingAborted& e) {
        throw TrainingAborted(e.what(), "step1", e.batch(), e.loss_history());
    }

    result.identified_topology = threshold_support(step1.params.s, options.threshold);
    result.edge_count = result.identified_topology.edge_count();

    GrnnParams warm = step1.params;
    warm.mask = support_mask(result.identified_topology);
    warm.mask->apply(warm.s);
    warm.train_s = true;
    TrainConfig refine_config = config;
    refine_config.l1_weight = 0.0;
    TrainResult<GrnnParams> refined;
    try {
        refined = train(prob, std::move(warm), refine_config, validation, refine_rng);
    } catch (const TrainingAborted& e) {
        throw TrainingAborted(e.what(), "refine", e.batch(), e.loss_history());
    }

    result.step1_cost = evaluate_normalized(step1.params, prob, evaluation);
    result.refined_cost = evaluate_normalized(refined.params, prob, evaluation);
    result.step1_validation_cost = step1.curve.samples.back().cost;
    result.refined_validation_cost = refined.curve.samples.back().cost;
    result.refinement_regressed = result.refined_validation_cost > result.step1_validation_cost;

    const auto ratios = cost_ratios(refined.params, prob, evaluation);
    result.eval_q1 = quantile(ratios, 0.25);
    result.eval_median = quantile(ratios, 0.5);
    result.eval_q3 = quantile(ratios, 0.75);

    result.step1_params = std::move(step1.params);
    result.refined_params = std::move(refined.params);
    result.step1_curve = std::move(step1.curve);
    result.refined_curve = std::move(refined.curve);
    return result;
}

std::size_t TradeoffCurve::failures() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return !c.result; }));
}

std::uint64_t cell_seed(std::uint64_t instance_seed, double lambda) {
    return derive_seed(instance_seed, std::bit_cast<std::uint64_t>(lambda));
}

TradeoffCurve sweep_lambda(std::span<const SweepInstance> instances, std::span<const double> lambdas,
                           const TrainConfig& config, const CodesignOptions& options, std::size_t jobs) {
    if (instances.empty()) throw ParameterError("sweep_lambda: need at least one instance");
    if (lambdas.empty()) throw ParameterError("sweep_lambda: need at least one lambda value");

    TradeoffCurve curve;
    curve.cells.resize(instances.size() * lambdas.size());
    for (std::size_t i = 0; i < instances.size(); ++i)
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            auto& cell = curve.cells[i * lambdas.size() + l];
            cell.instance = i;
            cell.lambda_index = l;
            cell.lambda = lambdas[l];
        }

    parallel_for(curve.cells.size(), jobs, [&](std::size_t idx) {
        auto& cell = curve.cells[idx];
        const auto& inst = instances[cell.instance];
        try {
            Rng rng(cell_seed(inst.seed, cell.lambda));
            cell.result = codesign(*inst.problem, cell.lambda, config, *inst.validation, *inst.evaluation, rng, options);
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });

    std::vector<std::size_t> order(lambdas.size());
    for (std::size_t l = 0; l < order.size(); ++l) order[l] = l;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] < lambdas[b]; });

    for (std::size_t l : order) {
        TradeoffPoint point;
        point.lambda = lambdas[l];
        std::vector<double> edges, costs;
        for (std::size_t i = 0; i < instances.size(); ++i) {
            const auto& cell = curve.cells[i * lambdas.size() + l];
            if (!cell.result) {
                ++point.failures;
                continue;
            }
            ++point.successes;
            edges.push_back(static_cast<double>(cell.result->edge_count));
            costs.push_back(cell.result->refined_cost);
        }
        if (!edges.empty()) {
            point.edges_q1 = quantile(edges, 0.25);
            point.edges_median = quantile(edges, 0.5);
            point.edges_q3 = quantile(edges, 0.75);
            point.cost_q1 = quantile(costs, 0.25);
            point.cost_median = quantile(costs, 0.5);
            point.cost_q3 = quantile(costs, 0.75);
        }
        curve.points.push_back(point);
    }
    return curve;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int i = -6; i <= 6; ++i) grid.push_back(std::pow(10.0, static_cast<double>(i) / 3.0));
    grid.push_back(2.0);
    std::sort(grid.begin(), grid.end());
    return grid;
}

}  // namespace grnn
