#include "grnn/controllers.hpp"

#include <cmath>

namespace grnn {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    throw ParameterError("unknown activation '" + name + "'");
}

void activate(Activation a, const Matrix& pre, Matrix& out, Matrix& derivative) {
    if (out.rows() != pre.rows() || out.cols() != pre.cols()) out = Matrix(pre.rows(), pre.cols());
    if (derivative.rows() != pre.rows() || derivative.cols() != pre.cols()) derivative = Matrix(pre.rows(), pre.cols());
    const auto p = pre.values();
    auto o = out.values();
    auto d = derivative.values();
    switch (a) {
        case Activation::tanh:
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double y = std::tanh(p[i]);
                o[i] = y;
                d[i] = 1.0 - y * y;
            }
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < p.size(); ++i) {
                o[i] = p[i] > 0.0 ? p[i] : 0.0;
                d[i] = p[i] > 0.0 ? 1.0 : 0.0;
            }
            break;
        case Activation::identity:
            for (std::size_t i = 0; i < p.size(); ++i) {
                o[i] = p[i];
                d[i] = 1.0;
            }
            break;
    }
}

Matrix activate(Activation a, Matrix pre) {
    Matrix out, derivative;
    activate(a, pre, out, derivative);
    return out;
}

std::size_t GcnnParams::parameter_count() const noexcept {
    std::size_t count = 0;
    for (const auto& layer : layers)
        for (const auto& h : layer.taps) count += h.size();
    return count;
}

Matrix graph_filter(const Matrix& s, std::span<const Matrix> taps, std::span<const Matrix> history) {
    if (taps.empty() || history.empty()) throw DimensionError("graph_filter: need at least one tap and one state");
    const std::size_t k_max = std::min(taps.size(), history.size());
    const std::size_t n = history.front().rows();
    Matrix out(n, taps.front().cols());
    for (std::size_t k = 0; k < k_max; ++k) {
        if (history[k].rows() != n || history[k].cols() != taps[k].rows() || taps[k].cols() != out.cols())
            throw DimensionError("graph_filter: inconsistent tap/state shapes");
        Matrix shifted = history[k];
        for (std::size_t r = 0; r < k; ++r) shifted = s * shifted;
        multiply_add(out, shifted, taps[k]);
    }
    return out;
}

void validate(const GcnnParams& params, std::size_t state_dim) {
    if (params.layers.empty()) throw DimensionError("GCNN: no layers");
    std::size_t width = state_dim;
    for (const auto& layer : params.layers) {
        if (layer.taps.empty()) throw DimensionError("GCNN: layer without taps");
        const std::size_t cols = layer.taps.front().cols();
        for (const auto& h : layer.taps)
            if (h.rows() != width || h.cols() != cols) throw DimensionError("GCNN: filter shapes do not chain");
        width = cols;
    }
}

Matrix gcnn_forward(const GcnnParams& params, const Matrix& x) {
    validate(params, x.cols());
    Matrix input = x;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& taps = params.layers[l].taps;
        Matrix pre(x.rows(), taps.front().cols());
        Matrix shifted = input;
        for (std::size_t k = 0; k < taps.size(); ++k) {
            if (k > 0) shifted = params.s * shifted;
            multiply_add(pre, shifted, taps[k]);
        }
        const bool last = l + 1 == params.layers.size();
        input = last ? std::move(pre) : activate(params.activation, std::move(pre));
    }
    return input;
}

HiddenState initial_hidden_state(const GrnnParams& params) {
    return HiddenState{Matrix(params.nodes(), params.hidden_dim()), 0};
}

std::pair<HiddenState, Matrix> grnn_step(const GrnnParams& params, const HiddenState& prev, const Matrix& x) {
    if (params.mask && !params.mask->admits(params.s))
        throw InvariantError("grnn_step: shift operator has support outside its mask");
    if (x.rows() != params.nodes() || x.cols() != params.state_dim() || prev.z.rows() != params.nodes() ||
        prev.z.cols() != params.hidden_dim())
        throw DimensionError("grnn_step: state or hidden shape mismatch");

    Matrix pre = x * params.f;
    multiply_add(pre, params.s, prev.z * params.w);
    HiddenState next{activate(params.activation, std::move(pre)), prev.step + 1};
    Matrix u = next.z * params.g;
    return {std::move(next), std::move(u)};
}

std::vector<GcnnLayerSpec> default_gcnn_layers(std::size_t input_dim) { return {{5, 32}, {1, input_dim}}; }

namespace {

Matrix uniform_fan_in(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    return rng.uniform_matrix(rows, cols, -bound, bound);
}

}  // namespace

GrnnParams init_grnn(const Topology& t, GrnnDims dims, ShiftPolicy policy, Rng& rng, Activation activation) {
    if (dims.state_dim == 0 || dims.hidden_dim == 0 || dims.input_dim == 0)
        throw ParameterError("init_grnn: dimensions must be positive");
    GrnnParams params;
    params.activation = activation;
    switch (policy) {
        case ShiftPolicy::fixed:
        case ShiftPolicy::masked:
            params.s = normalized_adjacency(t);
            params.mask = support_mask(t);
            params.train_s = policy == ShiftPolicy::masked;
            break;
        case ShiftPolicy::dense: {
            params.s = rng.normal_matrix(t.n(), t.n());
            params.s *= 1.0 / spectral_norm(params.s);
            params.train_s = true;
            break;
        }
    }
    params.f = uniform_fan_in(dims.state_dim, dims.hidden_dim, rng);
    params.w = uniform_fan_in(dims.hidden_dim, dims.hidden_dim, rng);
    params.g = uniform_fan_in(dims.hidden_dim, dims.input_dim, rng);
    return params;
}

GcnnParams init_gcnn(const Topology& t, std::size_t state_dim, std::span<const GcnnLayerSpec> layers, Rng& rng,
                     Activation activation) {
    if (layers.empty()) throw ParameterError("init_gcnn: need at least one layer");
    GcnnParams params;
    params.s = normalized_adjacency(t);
    params.activation = activation;
    std::size_t width = state_dim;
    for (const auto& spec : layers) {
        if (spec.taps == 0 || spec.width == 0) throw ParameterError("init_gcnn: taps and widths must be positive");
        GcnnLayer layer;
        for (std::size_t k = 0; k < spec.taps; ++k) layer.taps.push_back(uniform_fan_in(width, spec.width, rng));
        params.layers.push_back(std::move(layer));
        width = spec.width;
    }
    return params;
}

Matrix GrnnPolicy::act(const Matrix& x) {
    auto [next, u] = grnn_step(params_, hidden_, x);
    hidden_ = std::move(next);
    return u;
}

}  // namespace grnn
