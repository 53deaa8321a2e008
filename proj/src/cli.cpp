#include "grnn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace grnn {

namespace fs = std::filesystem;

namespace {

constexpr Variant kBenchmarkVariants[] = {Variant::lqr,        Variant::autonomous, Variant::grnn,
                                          Variant::grnn_dense, Variant::grnn_sparse, Variant::grnn_fixed,
                                          Variant::gcnn};

// Write-then-rename so a crashed run never leaves a truncated artifact behind.
void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        if (!out) throw Error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string numbered(const char* prefix, std::size_t i, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%03zu%s", prefix, i, suffix);
    return buf;
}

std::string dot_with_header(const Topology& t, const Json& config) {
    return "// config: " + config.dump() + "\n" + export_topology(t, TopologyFormat::dot);
}

std::vector<Variant> requested_variants(const CliConfig& cfg) {
    if (!cfg.variants.empty()) return cfg.variants;
    return {std::begin(kBenchmarkVariants), std::end(kBenchmarkVariants)};
}

std::vector<double> requested_lambdas(const CliConfig& cfg) {
    return cfg.lambdas.empty() ? default_lambda_grid() : cfg.lambdas;
}

std::vector<PreparedInstance> load_prepared(const CliConfig& cfg) {
    std::vector<PreparedInstance> out;
    for (const auto& file : instance_files(cfg.instances))
        out.push_back(prepare_instance(load_instance(file), cfg.settings.grnn_config.validation_size,
                                       cfg.settings.eval_size));
    if (out.empty()) throw ParameterError("no instance_*.json files in " + cfg.instances.string());
    return out;
}

PreparedInstance load_one(const CliConfig& cfg) {
    return prepare_instance(load_instance(cfg.instances), cfg.settings.grnn_config.validation_size,
                            cfg.settings.eval_size);
}

Json with_config(Json body, const Json& config) {
    body["config"] = config;
    return body;
}

Json instance_seeds(std::span<const PreparedInstance> instances) {
    Json seeds = Json::array();
    for (const auto& p : instances) seeds.push_back(p.instance.seed);
    return seeds;
}

}  // namespace

Json config_to_json(const CliConfig& cfg, const char* command) {
    const std::string cmd = command;
    Json j{{"command", cmd}};
    if (cmd == "gen") {
        j["seed"] = cfg.seed;
        j["instance_spec"] = {{"n", cfg.spec.nodes},
                              {"k_nearest", cfg.spec.k_nearest},
                              {"norm_a", cfg.spec.norm_a},
                              {"norm_b", cfg.spec.norm_b},
                              {"horizon", cfg.spec.horizon},
                              {"instances", cfg.instance_count}};
        return j;
    }
    j["settings"] = settings_to_json(cfg.settings);
    if (cmd == "benchmark") {
        Json variants = Json::array();
        for (Variant v : requested_variants(cfg)) variants.push_back(to_string(v));
        j["variants"] = variants;
    }
    if (cmd == "train") j["variant"] = to_string(cfg.variant);
    if (cmd == "sweep") j["lambdas"] = requested_lambdas(cfg);
    return j;
}

std::vector<fs::path> instance_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ParameterError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.starts_with("instance_") && name.ends_with(".json"))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

Instance load_instance(const fs::path& file) {
    try {
        return instance_from_json(Json::parse(read_file(file)));
    } catch (const Json::exception& e) {
        throw ParameterError("malformed instance file " + file.string() + ": " + e.what());
    }
}

int cmd_gen(const CliConfig& cfg, std::ostream& log) {
    const Json config = config_to_json(cfg, "gen");
    std::size_t failures = 0;
    for (std::size_t i = 0; i < cfg.instance_count; ++i) {
        try {
            const Instance inst = generate_instance(cfg.spec, cfg.seed, i);
            write_file(cfg.output / numbered("instance_", i, ".json"),
                       with_config(instance_to_json(inst), config).dump(2) + "\n");
            write_file(cfg.output / numbered("topology_", i, ".dot"),
                       dot_with_header(inst.problem.sys.source_topology, config));
            log << "instance " << i << ": " << inst.problem.sys.source_topology.edge_count() << " edges\n";
        } catch (const Error& e) {
            ++failures;
            log << "instance " << i << " failed: " << e.what() << '\n';
        }
    }
    return failures == 0 ? 0 : 1;
}

int cmd_benchmark(const CliConfig& cfg, std::ostream& log) {
    const auto instances = load_prepared(cfg);
    const auto variants = requested_variants(cfg);
    Json config = config_to_json(cfg, "benchmark");
    config["instance_seeds"] = instance_seeds(instances);

    const BenchmarkResult result = run_benchmark(instances, variants, cfg.settings);
    write_file(cfg.output / "benchmark.csv", benchmark_csv(result, config));
    write_file(cfg.output / "benchmark_instances.csv", benchmark_instances_csv(result, config));
    std::size_t failures = 0;
    for (Variant v : variants) {
        const auto curves = result.curves(v);
        if (!curves.empty())
            write_file(cfg.output / ("curve_" + to_string(v) + ".csv"), learning_curve_csv(curves, config));
        const auto& s = result.summary(v);
        failures += s.failures;
        log << to_string(v) << ": median " << format_number(s.median) << " over " << s.successes << " instances";
        if (s.failures) log << " (" << s.failures << " failed)";
        log << '\n';
    }
    for (const auto& r : result.runs) {
        Json record{{"variant", to_string(r.variant)},
                    {"instance", r.instance},
                    {"seed", r.seed},
                    {"final_cost", r.final_cost ? Json(*r.final_cost) : Json(nullptr)},
                    {"edge_count", r.edge_count ? Json(*r.edge_count) : Json(nullptr)},
                    {"error", r.error},
                    {"params", r.checkpoint}};
        write_file(cfg.output / "runs" / (to_string(r.variant) + numbered("_", r.instance, ".json")),
                   with_config(std::move(record), config).dump(2) + "\n");
        if (!r.error.empty()) log << to_string(r.variant) << " instance " << r.instance << ": " << r.error << '\n';
    }
    return failures == 0 ? 0 : 1;
}

int cmd_train(const CliConfig& cfg, std::ostream& log) {
    const auto inst = load_one(cfg);
    Json config = config_to_json(cfg, "train");
    config["instance_seeds"] = Json::array({inst.instance.seed});
    const VariantRun run = run_variant(inst, cfg.variant, cfg.settings);
    Json record{{"variant", to_string(run.variant)},
                {"seed", run.seed},
                {"final_cost", run.final_cost ? Json(*run.final_cost) : Json(nullptr)},
                {"edge_count", run.edge_count ? Json(*run.edge_count) : Json(nullptr)},
                {"error", run.error},
                {"params", run.checkpoint}};
    write_file(cfg.output / "train.json", with_config(std::move(record), config).dump(2) + "\n");
    if (!run.curve.samples.empty()) {
        const LearningCurve curves[] = {run.curve};
        write_file(cfg.output / "curve.csv", learning_curve_csv(curves, config));
    }
    if (!run.error.empty()) {
        log << "training failed: " << run.error << '\n';
        return 1;
    }
    log << to_string(run.variant) << ": normalized cost " << format_number(*run.final_cost) << '\n';
    return 0;
}

int cmd_codesign(const CliConfig& cfg, std::ostream& log) {
    const auto inst = load_one(cfg);
    Json config = config_to_json(cfg, "codesign");
    config["instance_seeds"] = Json::array({inst.instance.seed});
    Rng rng(cell_seed(inst.instance.seed, cfg.settings.lambda));
    CodesignOptions options{cfg.settings.threshold, cfg.settings.dims, cfg.settings.activation};
    try {
        const auto result = codesign(inst.instance.problem, cfg.settings.lambda, cfg.settings.grnn_config,
                                     inst.validation, inst.evaluation, rng, options);
        write_file(cfg.output / "codesign.json", with_config(codesign_result_to_json(result), config).dump(2) + "\n");
        write_file(cfg.output / "topology.dot", dot_with_header(result.identified_topology, config));
        const LearningCurve step1[] = {result.step1_curve};
        const LearningCurve refined[] = {result.refined_curve};
        write_file(cfg.output / "curve_step1.csv", learning_curve_csv(step1, config));
        write_file(cfg.output / "curve_refine.csv", learning_curve_csv(refined, config));
        log << "lambda " << format_number(result.lambda) << ": " << result.edge_count << " edges, normalized cost "
            << format_number(result.refined_cost) << (result.refinement_regressed ? " (refinement regressed)" : "")
            << '\n';
        return 0;
    } catch (const TrainingAborted& e) {
        log << "codesign failed in " << e.stage() << " at batch " << e.batch() << ": " << e.what() << '\n';
        return 1;
    }
}

int cmd_sweep(const CliConfig& cfg, std::ostream& log) {
    const auto instances = load_prepared(cfg);
    const auto lambdas = requested_lambdas(cfg);
    Json config = config_to_json(cfg, "sweep");
    config["instance_seeds"] = instance_seeds(instances);

    const TradeoffCurve curve = run_sweep(instances, lambdas, cfg.settings);
    write_file(cfg.output / "tradeoff.csv", tradeoff_csv(curve, config));
    for (const auto& cell : curve.cells) {
        char stem[64];
        std::snprintf(stem, sizeof(stem), "i%03zu_l%02zu", cell.instance, cell.lambda_index);
        Json record = cell.result ? codesign_result_to_json(*cell.result) : Json{{"lambda", cell.lambda}};
        record["instance"] = cell.instance;
        record["error"] = cell.error;
        write_file(cfg.output / "cells" / (std::string(stem) + ".json"), with_config(std::move(record), config).dump(2) + "\n");
        if (cell.result)
            write_file(cfg.output / "topologies" / (std::string(stem) + ".dot"),
                       dot_with_header(cell.result->identified_topology, config));
        else
            log << "instance " << cell.instance << " lambda " << format_number(cell.lambda) << ": " << cell.error << '\n';
    }
    for (const auto& p : curve.points)
        log << "lambda " << format_number(p.lambda) << ": median edges " << format_number(p.edges_median)
            << ", median cost " << format_number(p.cost_median) << '\n';
    return curve.failures() == 0 ? 0 : 1;
}

int cmd_eval(const CliConfig& cfg, std::ostream& log) {
    const auto inst = load_one(cfg);
    Json config = config_to_json(cfg, "eval");
    config["instance_seeds"] = Json::array({inst.instance.seed});
    Json checkpoint = Json::parse(read_file(cfg.params));
    if (checkpoint.contains("params")) checkpoint = checkpoint.at("params");
    const auto& prob = inst.instance.problem;
    std::vector<double> costs;
    try {
        if (checkpoint.value("architecture", "") == "gcnn") {
            const auto p = gcnn_params_from_json(checkpoint);
            costs = closed_loop_costs(p, prob, inst.evaluation.x0);
        } else {
            const auto p = grnn_params_from_json(checkpoint);
            costs = closed_loop_costs(p, prob, inst.evaluation.x0);
        }
    } catch (const DivergedError& e) {
        log << "evaluation diverged: " << e.what() << '\n';
        return 1;
    }
    std::vector<double> ratios(costs.size());
    for (std::size_t i = 0; i < costs.size(); ++i) ratios[i] = costs[i] / inst.evaluation.lqr_costs[i];
    Json record{{"normalized_cost", normalized_cost(costs, inst.evaluation.lqr_costs)},
                {"ratio_q1", quantile(ratios, 0.25)},
                {"ratio_median", quantile(ratios, 0.5)},
                {"ratio_q3", quantile(ratios, 0.75)},
                {"eval_size", costs.size()}};
    log << "normalized cost " << format_number(record["normalized_cost"].get<double>()) << '\n';
    write_file(cfg.output / "eval.json", with_config(std::move(record), config).dump(2) + "\n");
    return 0;
}

namespace {

// Long option names that the given short flags stand for.
std::string long_name(const std::string& flag) {
    static const std::pair<const char*, const char*> aliases[] = {
        {"-o", "output"}, {"-i", "instances"}, {"-j", "jobs"}, {"-p", "params"}, {"-n", "nodes"}, {"-k", "k-nearest"}};
    for (const auto& [s, l] : aliases)
        if (flag == s) return l;
    if (flag.starts_with("--")) {
        const auto eq = flag.find('=');
        return flag.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    }
    return {};
}

// Splices "--key value..." tokens from a key=value file in front of the
// command-line flags. Keys present on the command line are skipped, so flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    auto it = std::find(args.begin(), args.end(), "--config");
    if (it == args.end()) return args;
    if (std::next(it) == args.end()) throw ParameterError("--config needs a file");
    const fs::path file = *std::next(it);
    args.erase(it, it + 2);

    std::vector<std::string> given;
    for (const auto& a : args) {
        auto name = long_name(a);
        if (name == "instance") name = "instances";
        if (!name.empty()) given.push_back(name);
    }

    std::vector<std::string> injected;
    std::istringstream in(read_file(file));
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos && line.find('[') == std::string::npos)
                throw ParameterError("config line without '=': " + line);
            continue;
        }
        std::string key = CLI::detail::trim_copy(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        std::string canonical = key == "instance" ? "instances" : key;
        if (std::find(given.begin(), given.end(), canonical) != given.end()) continue;
        injected.push_back("--" + key);
        std::string values = line.substr(eq + 1);
        std::replace(values.begin(), values.end(), ',', ' ');
        std::istringstream vs(values);
        for (std::string v; vs >> v;) injected.push_back(v);
    }
    // args[0] is the program, args[1] the subcommand.
    const auto pos = args.size() > 1 ? args.begin() + 2 : args.end();
    args.insert(pos, injected.begin(), injected.end());
    return args;
}

}  // namespace

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    try {
        args = expand_config(std::move(args));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    CLI::App app{"GRNN distributed LQR controllers and communication topology co-design"};
    app.require_subcommand(1);

    CliConfig cfg;
    std::string activation = "tanh";
    std::string prox_scaling = "adam";
    std::string variant = "grnn";
    std::vector<std::string> variants;
    double grnn_lr = cfg.settings.grnn_config.lr;
    double gcnn_lr = cfg.settings.gcnn_config.lr;
    std::size_t batches = cfg.settings.grnn_config.total_batches;
    std::size_t batch_size = cfg.settings.grnn_config.batch_size;
    std::size_t validation_size = cfg.settings.grnn_config.validation_size;
    std::size_t validation_every = cfg.settings.grnn_config.validation_every;
    double grnn_wd = cfg.settings.grnn_config.weight_decay;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", "key=value configuration file; flags override it");
        sub->add_option("--seed", cfg.seed, "base seed")->capture_default_str();
        sub->add_option("-o,--output", cfg.output, "output directory")->capture_default_str();
    };
    auto training = [&](CLI::App* sub) {
        sub->add_option("--batches", batches, "training batches")->capture_default_str();
        sub->add_option("--batch-size", batch_size, "initial conditions per batch")->capture_default_str();
        sub->add_option("--grnn-lr", grnn_lr, "GRNN learning rate")->capture_default_str();
        sub->add_option("--gcnn-lr", gcnn_lr, "GCNN learning rate")->capture_default_str();
        sub->add_option("--weight-decay", grnn_wd, "GRNN weight decay")->capture_default_str();
        sub->add_option("--validation-size", validation_size)->capture_default_str();
        sub->add_option("--validation-every", validation_every)->capture_default_str();
        sub->add_option("--eval-size", cfg.settings.eval_size)->capture_default_str();
        sub->add_option("--hidden", cfg.settings.dims.hidden_dim, "GRNN hidden features per node")->capture_default_str();
        sub->add_option("--nonlinearity", activation)->check(CLI::IsMember({"tanh", "relu", "identity"}))->capture_default_str();
        sub->add_option("--lambda", cfg.settings.lambda, "l1 weight for grnn-sparse and codesign")->capture_default_str();
        sub->add_option("--threshold", cfg.settings.threshold, "support threshold")->capture_default_str();
        sub->add_option("--prox-scaling", prox_scaling)->check(CLI::IsMember({"adam", "plain"}))->capture_default_str();
        sub->add_option("-j,--jobs", cfg.settings.jobs, "concurrent cells")->capture_default_str();
    };

    auto* gen = app.add_subcommand("gen", "generate problem instances");
    common(gen);
    gen->add_option("-n,--nodes", cfg.spec.nodes)->capture_default_str();
    gen->add_option("-k,--k-nearest", cfg.spec.k_nearest)->capture_default_str();
    gen->add_option("--norm-a", cfg.spec.norm_a)->capture_default_str();
    gen->add_option("--norm-b", cfg.spec.norm_b)->capture_default_str();
    gen->add_option("--horizon", cfg.spec.horizon)->capture_default_str();
    gen->add_option("--count", cfg.instance_count, "number of instances")->capture_default_str();

    auto* bench = app.add_subcommand("benchmark", "train and compare controller variants");
    common(bench);
    training(bench);
    bench->add_option("-i,--instances,--instance", cfg.instances, "directory of instance files")->required()->check(CLI::ExistingDirectory);
    bench->add_option("--variants", variants, "subset of variants to run");

    auto* train_cmd = app.add_subcommand("train", "train one variant on one instance");
    common(train_cmd);
    training(train_cmd);
    train_cmd->add_option("-i,--instance,--instances", cfg.instances, "instance file")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--variant", variant)->capture_default_str();

    auto* codesign_cmd = app.add_subcommand("codesign", "co-design controller and topology for one lambda");
    common(codesign_cmd);
    training(codesign_cmd);
    codesign_cmd->add_option("-i,--instance,--instances", cfg.instances, "instance file")->required()->check(CLI::ExistingFile);

    auto* sweep = app.add_subcommand("sweep", "trade-off sweep over lambda");
    common(sweep);
    training(sweep);
    sweep->add_option("-i,--instances,--instance", cfg.instances, "directory of instance files")->required()->check(CLI::ExistingDirectory);
    sweep->add_option("--lambdas", cfg.lambdas, "lambda grid (default: 13 log-spaced points in [1e-2, 1e2] plus 2)");

    auto* eval = app.add_subcommand("eval", "evaluate a saved controller");
    common(eval);
    training(eval);
    eval->add_option("-i,--instance,--instances", cfg.instances, "instance file")->required()->check(CLI::ExistingFile);
    eval->add_option("-p,--params", cfg.params, "checkpoint JSON")->required()->check(CLI::ExistingFile);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(std::move(rev));
    } catch (const CLI::ParseError& e) {
        // --help and --version are successes; every other parse error is a usage error.
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        cfg.settings.activation = activation_from_string(activation);
        for (TrainConfig* c : {&cfg.settings.grnn_config, &cfg.settings.gcnn_config}) {
            c->total_batches = batches;
            c->batch_size = batch_size;
            c->validation_size = validation_size;
            c->validation_every = validation_every;
            c->prox_scaling = prox_scaling_from_string(prox_scaling);
        }
        cfg.settings.grnn_config.lr = grnn_lr;
        cfg.settings.gcnn_config.lr = gcnn_lr;
        cfg.settings.grnn_config.weight_decay = grnn_wd;
        cfg.variant = variant_from_string(variant);
        for (const auto& v : variants) cfg.variants.push_back(variant_from_string(v));

        if (*gen) return cmd_gen(cfg, std::cerr);
        if (*bench) return cmd_benchmark(cfg, std::cerr);
        if (*train_cmd) return cmd_train(cfg, std::cerr);
        if (*codesign_cmd) return cmd_codesign(cfg, std::cerr);
        if (*sweep) return cmd_sweep(cfg, std::cerr);
        if (*eval) return cmd_eval(cfg, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

}  // namespace grnn
