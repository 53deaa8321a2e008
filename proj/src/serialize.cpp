#include "grnn/serialize.hpp"

namespace grnn {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ParameterError(std::string("malformed JSON: ") + what);
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix matrix_from_json(const Json& j) {
    require(j.is_object() && j.contains("rows") && j.contains("cols") && j.contains("data"), "matrix");
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), j.at("data").get<std::vector<double>>());
}

Json topology_to_json(const Topology& t) {
    Json edges = Json::array();
    for (const auto& [src, dst] : t.edges()) edges.push_back({src, dst});
    Json j{{"n", t.n()}, {"edges", edges}};
    j["positions"] = t.positions() ? Json(*t.positions()) : Json(nullptr);
    return j;
}

Topology topology_from_json(const Json& j) {
    require(j.is_object() && j.contains("n") && j.contains("edges"), "topology");
    const auto n = j.at("n").get<std::size_t>();
    BoolMatrix adj(n);
    for (const auto& e : j.at("edges")) {
        require(e.is_array() && e.size() == 2, "topology edge");
        const auto src = e[0].get<std::size_t>(), dst = e[1].get<std::size_t>();
        if (src >= n || dst >= n) throw ParameterError("topology edge index out of range");
        adj.set(dst, src, true);
    }
    std::optional<std::vector<double>> positions;
    if (j.contains("positions") && !j.at("positions").is_null()) positions = j.at("positions").get<std::vector<double>>();
    return Topology(std::move(adj), std::move(positions));
}

Json mask_to_json(const GsoMask& m) {
    Json allowed = Json::array();
    for (std::size_t i = 0; i < m.n(); ++i)
        for (std::size_t j = 0; j < m.n(); ++j)
            if (i != j && m(i, j)) allowed.push_back({i, j});
    return Json{{"n", m.n()}, {"allowed", allowed}};
}

GsoMask mask_from_json(const Json& j) {
    require(j.is_object() && j.contains("n") && j.contains("allowed"), "mask");
    BoolMatrix allowed(j.at("n").get<std::size_t>());
    for (const auto& e : j.at("allowed")) allowed.set(e[0].get<std::size_t>(), e[1].get<std::size_t>(), true);
    return GsoMask(std::move(allowed));
}

Json system_to_json(const LinearSystem& sys) {
    return Json{{"a", matrix_to_json(sys.a)},         {"b", matrix_to_json(sys.b)},
                {"topology", topology_to_json(sys.source_topology)},
                {"norm_a", sys.norm_a},               {"norm_b", sys.norm_b},
                {"seed", sys.seed}};
}

LinearSystem system_from_json(const Json& j) {
    require(j.is_object() && j.contains("a") && j.contains("b") && j.contains("topology"), "system");
    LinearSystem sys;
    sys.a = matrix_from_json(j.at("a"));
    sys.b = matrix_from_json(j.at("b"));
    sys.source_topology = topology_from_json(j.at("topology"));
    sys.norm_a = j.value("norm_a", 0.0);
    sys.norm_b = j.value("norm_b", 0.0);
    sys.seed = j.value("seed", std::uint64_t{0});
    if (sys.a.rows() % std::max<std::size_t>(sys.nodes(), 1) != 0 || !sys.a.is_square() || sys.b.rows() != sys.a.rows())
        throw DimensionError("system JSON: A/B shapes inconsistent with topology");
    return sys;
}

Json problem_to_json(const LqrProblem& prob) {
    return Json{{"system", system_to_json(prob.sys)},
                {"q", matrix_to_json(prob.q_mat)},
                {"r", matrix_to_json(prob.r_mat)},
                {"p", matrix_to_json(prob.p_mat)},
                {"horizon", prob.horizon}};
}

LqrProblem problem_from_json(const Json& j) {
    require(j.is_object() && j.contains("system") && j.contains("p"), "problem");
    LqrProblem prob;
    prob.sys = system_from_json(j.at("system"));
    prob.q_mat = matrix_from_json(j.at("q"));
    prob.r_mat = matrix_from_json(j.at("r"));
    prob.p_mat = matrix_from_json(j.at("p"));
    prob.horizon = j.at("horizon").get<std::size_t>();
    return prob;
}

Json params_to_json(const GrnnParams& p) {
    Json j{{"architecture", "grnn"},
           {"s", matrix_to_json(p.s)},
           {"f", matrix_to_json(p.f)},
           {"w", matrix_to_json(p.w)},
           {"g", matrix_to_json(p.g)},
           {"hidden_dim", p.hidden_dim()},
           {"nonlinearity", to_string(p.activation)},
           {"train_s", p.train_s}};
    j["mask"] = p.mask ? mask_to_json(*p.mask) : Json(nullptr);
    return j;
}

Json params_to_json(const GcnnParams& p) {
    Json layers = Json::array();
    for (const auto& layer : p.layers) {
        Json taps = Json::array();
        for (const auto& h : layer.taps) taps.push_back(matrix_to_json(h));
        layers.push_back(Json{{"taps", taps}});
    }
    return Json{{"architecture", "gcnn"},
                {"s", matrix_to_json(p.s)},
                {"layers", layers},
                {"nonlinearity", to_string(p.activation)},
                {"parameter_count", p.parameter_count()}};
}

GrnnParams grnn_params_from_json(const Json& j) {
    require(j.is_object() && j.value("architecture", "") == "grnn", "GRNN checkpoint");
    GrnnParams p;
    p.s = matrix_from_json(j.at("s"));
    p.f = matrix_from_json(j.at("f"));
    p.w = matrix_from_json(j.at("w"));
    p.g = matrix_from_json(j.at("g"));
    p.activation = activation_from_string(j.value("nonlinearity", "tanh"));
    p.train_s = j.value("train_s", true);
    if (j.contains("mask") && !j.at("mask").is_null()) p.mask = mask_from_json(j.at("mask"));
    if (p.mask && !p.mask->admits(p.s)) throw InvariantError("GRNN checkpoint: S violates its mask");
    return p;
}

GcnnParams gcnn_params_from_json(const Json& j) {
    require(j.is_object() && j.value("architecture", "") == "gcnn", "GCNN checkpoint");
    GcnnParams p;
    p.s = matrix_from_json(j.at("s"));
    p.activation = activation_from_string(j.value("nonlinearity", "tanh"));
    for (const auto& layer : j.at("layers")) {
        GcnnLayer l;
        for (const auto& h : layer.at("taps")) l.taps.push_back(matrix_from_json(h));
        p.layers.push_back(std::move(l));
    }
    return p;
}

Json codesign_result_to_json(const CodesignResult& r) {
    return Json{{"lambda", r.lambda},
                {"edge_count", r.edge_count},
                {"identified_topology", topology_to_json(r.identified_topology)},
                {"step1_cost", r.step1_cost},
                {"refined_cost", r.refined_cost},
                {"step1_validation_cost", r.step1_validation_cost},
                {"refined_validation_cost", r.refined_validation_cost},
                {"refinement_regressed", r.refinement_regressed},
                {"eval_quartiles", {r.eval_q1, r.eval_median, r.eval_q3}},
                {"refined_params", params_to_json(r.refined_params)}};
}

}  // namespace grnn
