#include "grnn/experiments.hpp"

#include <cstdio>
#include <sstream>

#include "grnn/parallel.hpp"

namespace grnn {

namespace {

// Child-stream indices below an instance seed.
constexpr std::uint64_t kValidationStream = 1;
constexpr std::uint64_t kEvaluationStream = 2;
constexpr std::uint64_t kTrainingStream = 16;  // + variant ordinal

constexpr Variant kAllVariants[] = {Variant::grnn,       Variant::grnn_dense, Variant::grnn_sparse, Variant::grnn_fixed,
                                    Variant::gcnn,       Variant::autonomous, Variant::lqr};

}  // namespace

std::string to_string(Variant v) {
    switch (v) {
        case Variant::grnn: return "grnn";
        case Variant::grnn_dense: return "grnn-dense";
        case Variant::grnn_sparse: return "grnn-sparse";
        case Variant::grnn_fixed: return "grnn-fixed";
        case Variant::gcnn: return "gcnn";
        case Variant::autonomous: return "autonomous";
        case Variant::lqr: return "lqr";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& name) {
    for (Variant v : kAllVariants)
        if (to_string(v) == name) return v;
    throw ParameterError("unknown variant '" + name + "'");
}

std::uint64_t instance_seed(std::uint64_t base_seed, std::size_t index) { return derive_seed(base_seed, index); }

Instance generate_instance(const InstanceSpec& spec, std::uint64_t base_seed, std::size_t index) {
    Instance inst;
    inst.index = index;
    inst.seed = instance_seed(base_seed, index);
    Rng rng(inst.seed);
    const Topology topology = sample_topology(spec.nodes, spec.k_nearest, rng);
    LinearSystem sys = generate_system(topology, spec.norm_a, spec.norm_b, rng);
    sys.seed = inst.seed;
    inst.problem = make_lqr_problem(std::move(sys), spec.horizon);
    return inst;
}

Json instance_to_json(const Instance& inst) {
    return Json{{"index", inst.index}, {"seed", inst.seed}, {"problem", problem_to_json(inst.problem)}};
}

Instance instance_from_json(const Json& j) {
    Instance inst;
    inst.index = j.at("index").get<std::size_t>();
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.problem = problem_from_json(j.at("problem"));
    return inst;
}

PreparedInstance prepare_instance(Instance inst, std::size_t validation_size, std::size_t eval_size) {
    Rng validation_rng(derive_seed(inst.seed, kValidationStream));
    Rng evaluation_rng(derive_seed(inst.seed, kEvaluationStream));
    PreparedInstance out;
    out.validation = make_evaluation_set(inst.problem, validation_size, validation_rng);
    out.evaluation = make_evaluation_set(inst.problem, eval_size, evaluation_rng);
    out.instance = std::move(inst);
    return out;
}

namespace {

std::size_t shift_edge_count(const GrnnParams& p, double threshold) {
    return threshold_support(p.s, threshold).edge_count();
}

std::vector<double> autonomous_costs(const PreparedInstance& inst) {
    const auto& prob = inst.instance.problem;
    ZeroPolicy zero(prob.sys.nodes(), prob.sys.input_dim());
    std::vector<double> costs;
    for (const auto& x0 : inst.evaluation.x0) costs.push_back(trajectory_cost(rollout(prob.sys, zero, x0, prob.horizon), prob));
    return costs;
}

void run_grnn(VariantRun& run, const PreparedInstance& inst, ShiftPolicy policy, const ExperimentSettings& settings,
              Rng& rng) {
    const auto& prob = inst.instance.problem;
    Rng init_rng = rng.child(0);
    Rng train_rng = rng.child(1);
    GrnnParams params = init_grnn(prob.sys.source_topology, settings.dims, policy, init_rng, settings.activation);
    auto trained = train(prob, std::move(params), settings.grnn_config, inst.validation, train_rng);
    run.final_cost = evaluate_normalized(trained.params, prob, inst.evaluation);
    run.edge_count = shift_edge_count(trained.params, settings.threshold);
    run.curve = std::move(trained.curve);
    run.checkpoint = params_to_json(trained.params);
}

}  // namespace

VariantRun run_variant(const PreparedInstance& inst, Variant variant, const ExperimentSettings& settings) {
    const auto& prob = inst.instance.problem;
    VariantRun run;
    run.variant = variant;
    run.instance = inst.instance.index;
    run.checkpoint = nullptr;
    run.seed = variant == Variant::grnn_sparse
                   ? cell_seed(inst.instance.seed, settings.lambda)
                   : derive_seed(inst.instance.seed, kTrainingStream + static_cast<std::uint64_t>(variant));
    Rng rng(run.seed);
    try {
        switch (variant) {
            case Variant::grnn: run_grnn(run, inst, ShiftPolicy::masked, settings, rng); break;
            case Variant::grnn_dense: run_grnn(run, inst, ShiftPolicy::dense, settings, rng); break;
            case Variant::grnn_fixed: run_grnn(run, inst, ShiftPolicy::fixed, settings, rng); break;
            case Variant::grnn_sparse: {
                CodesignOptions options{settings.threshold, settings.dims, settings.activation};
                auto result = codesign(prob, settings.lambda, settings.grnn_config, inst.validation, inst.evaluation, rng,
                                       options);
                run.final_cost = result.refined_cost;
                run.edge_count = result.edge_count;
                run.curve = result.step1_curve;
                // Stage-2 samples continue the batch count after stage 1.
                const std::size_t offset = settings.grnn_config.total_batches;
                for (const auto& s : result.refined_curve.samples) run.curve.samples.push_back({offset + s.batch, s.cost});
                run.checkpoint = params_to_json(result.refined_params);
                break;
            }
            case Variant::gcnn: {
                Rng init_rng = rng.child(0);
                Rng train_rng = rng.child(1);
                GcnnParams params = init_gcnn(prob.sys.source_topology, prob.sys.state_dim(), settings.gcnn_layers,
                                              init_rng, settings.activation);
                auto trained = train(prob, std::move(params), settings.gcnn_config, inst.validation, train_rng);
                run.final_cost = evaluate_normalized(trained.params, prob, inst.evaluation);
                run.curve = std::move(trained.curve);
                run.checkpoint = params_to_json(trained.params);
                break;
            }
            case Variant::autonomous: {
                const auto costs = autonomous_costs(inst);
                run.final_cost = normalized_cost(costs, inst.evaluation.lqr_costs);
                run.edge_count = 0;
                break;
            }
            case Variant::lqr:
                run.final_cost = normalized_cost(inst.evaluation.lqr_costs, inst.evaluation.lqr_costs);
                break;
        }
    } catch (const TrainingAborted& e) {
        run.error = "[" + e.stage() + " batch " + std::to_string(e.batch()) + "] " + e.what();
    } catch (const std::exception& e) {
        run.error = e.what();
    }
    return run;
}

const VariantSummary& BenchmarkResult::summary(Variant v) const {
    for (const auto& s : summaries)
        if (s.variant == v) return s;
    throw ParameterError("benchmark has no variant '" + to_string(v) + "'");
}

std::vector<LearningCurve> BenchmarkResult::curves(Variant v) const {
    std::vector<LearningCurve> out;
    for (const auto& r : runs)
        if (r.variant == v && r.final_cost && !r.curve.samples.empty()) out.push_back(r.curve);
    return out;
}

BenchmarkResult run_benchmark(std::span<const PreparedInstance> instances, std::span<const Variant> variants,
                              const ExperimentSettings& settings) {
    BenchmarkResult result;
    result.runs.resize(instances.size() * variants.size());
    parallel_for(result.runs.size(), settings.jobs, [&](std::size_t idx) {
        const std::size_t v = idx / instances.size();
        const std::size_t i = idx % instances.size();
        result.runs[idx] = run_variant(instances[i], variants[v], settings);
    });
    for (Variant v : variants) {
        VariantSummary s{v};
        std::vector<double> costs;
        for (const auto& r : result.runs) {
            if (r.variant != v) continue;
            if (r.final_cost) costs.push_back(*r.final_cost);
            else ++s.failures;
        }
        s.successes = costs.size();
        if (!costs.empty()) {
            s.q1 = quantile(costs, 0.25);
            s.median = quantile(costs, 0.5);
            s.q3 = quantile(costs, 0.75);
        }
        result.summaries.push_back(s);
    }
    return result;
}

TradeoffCurve run_sweep(std::span<const PreparedInstance> instances, std::span<const double> lambdas,
                        const ExperimentSettings& settings) {
    std::vector<SweepInstance> sweep;
    for (const auto& inst : instances)
        sweep.push_back({&inst.instance.problem, &inst.validation, &inst.evaluation, inst.instance.seed});
    CodesignOptions options{settings.threshold, settings.dims, settings.activation};
    return sweep_lambda(sweep, lambdas, settings.grnn_config, options, settings.jobs);
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

namespace {

std::string header(const Json& config) { return "# config: " + config.dump() + "\n"; }

}  // namespace

std::string benchmark_csv(const BenchmarkResult& result, const Json& config) {
    std::ostringstream out;
    out << header(config) << "variant,instances,failures,cost_q1,cost_median,cost_q3\n";
    for (const auto& s : result.summaries) {
        out << to_string(s.variant) << ',' << s.successes << ',' << s.failures << ',' << format_number(s.q1) << ','
            << format_number(s.median) << ',' << format_number(s.q3) << '\n';
    }
    return out.str();
}

std::string benchmark_instances_csv(const BenchmarkResult& result, const Json& config) {
    std::ostringstream out;
    out << header(config) << "variant,instance,seed,final_cost,edge_count,error\n";
    for (const auto& r : result.runs) {
        out << to_string(r.variant) << ',' << r.instance << ',' << r.seed << ','
            << (r.final_cost ? format_number(*r.final_cost) : "") << ','
            << (r.edge_count ? std::to_string(*r.edge_count) : "") << ',';
        std::string err = r.error;
        for (char& c : err)
            if (c == ',' || c == '\n') c = ' ';
        out << err << '\n';
    }
    return out.str();
}

std::string learning_curve_csv(std::span<const LearningCurve> curves, const Json& config) {
    std::ostringstream out;
    out << header(config) << "batch,cost_q1,cost_median,cost_q3\n";
    for (const auto& row : aggregate_curves(curves))
        out << row.batch << ',' << format_number(row.q1) << ',' << format_number(row.median) << ','
            << format_number(row.q3) << '\n';
    return out.str();
}

std::string tradeoff_csv(const TradeoffCurve& curve, const Json& config) {
    std::ostringstream out;
    out << header(config) << "lambda,edges_q1,edges_median,edges_q3,cost_q1,cost_median,cost_q3\n";
    for (const auto& p : curve.points) {
        out << format_number(p.lambda) << ',' << format_number(p.edges_q1) << ',' << format_number(p.edges_median) << ','
            << format_number(p.edges_q3) << ',' << format_number(p.cost_q1) << ',' << format_number(p.cost_median)
            << ',' << format_number(p.cost_q3) << '\n';
    }
    return out.str();
}

Json train_config_to_json(const TrainConfig& c) {
    Json j{{"batch_size", c.batch_size},
           {"total_batches", c.total_batches},
           {"lr", c.lr},
           {"schedule", to_string(c.schedule)},
           {"decay_factor", c.decay_factor},
           {"decay_every", c.decay_every},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"epsilon", c.epsilon},
           {"weight_decay", c.weight_decay},
           {"l1_weight", c.l1_weight},
           {"prox_scaling", to_string(c.prox_scaling)},
           {"validation_every", c.validation_every},
           {"validation_size", c.validation_size},
           {"seed", c.seed}};
    j["gradient_clip"] = c.gradient_clip ? Json(*c.gradient_clip) : Json(nullptr);
    return j;
}

Json settings_to_json(const ExperimentSettings& s) {
    Json layers = Json::array();
    for (const auto& l : s.gcnn_layers) layers.push_back({{"taps", l.taps}, {"width", l.width}});
    return Json{{"grnn", train_config_to_json(s.grnn_config)},
                {"gcnn", train_config_to_json(s.gcnn_config)},
                {"hidden_dim", s.dims.hidden_dim},
                {"gcnn_layers", layers},
                {"nonlinearity", to_string(s.activation)},
                {"lambda", s.lambda},
                {"threshold", s.threshold},
                {"eval_size", s.eval_size}};
}

}  // namespace grnn
