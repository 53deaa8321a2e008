#pragma once

// Graph filter, GCNN and GRNN controller parameterizations.
//
//   graph filter:  U(t) = sum_k S^k X(t-k) H_k
//   GCNN:          X_l = sigma(sum_k S^k X_{l-1} H_{l,k}),  U(t) = X_L (last layer linear)
//   GRNN:          Z(t) = sigma(S Z(t-1) W + X(t) F),       U(t) = Z(t) G
//
// A filter's "taps" is its number of summands: K taps means k = 0..K-1.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grnn/dynamics.hpp"
#include "grnn/graphs.hpp"
#include "grnn/linalg.hpp"
#include "grnn/random.hpp"

namespace grnn {

enum class Activation { tanh, relu, identity };

[[nodiscard]] std::string to_string(Activation a);
[[nodiscard]] Activation activation_from_string(const std::string& name);

// Applies sigma entrywise to pre, writing the activation into out and
// sigma'(pre) into derivative (both resized as needed).
void activate(Activation a, const Matrix& pre, Matrix& out, Matrix& derivative);
[[nodiscard]] Matrix activate(Activation a, Matrix pre);

struct GrnnParams {
    Matrix s;  // N x N graph shift operator
    Matrix f;  // p x h
    Matrix w;  // h x h
    Matrix g;  // h x q
    std::optional<GsoMask> mask;
    Activation activation = Activation::tanh;
    bool train_s = true;

    [[nodiscard]] std::size_t nodes() const noexcept { return s.rows(); }
    [[nodiscard]] std::size_t state_dim() const noexcept { return f.rows(); }
    [[nodiscard]] std::size_t hidden_dim() const noexcept { return w.rows(); }
    [[nodiscard]] std::size_t input_dim() const noexcept { return g.cols(); }
};

struct GcnnLayer {
    std::vector<Matrix> taps;  // taps[k] = H_{l,k}, r_l x c_l
};

struct GcnnParams {
    Matrix s;  // fixed shift operator
    std::vector<GcnnLayer> layers;
    Activation activation = Activation::tanh;

    [[nodiscard]] std::size_t nodes() const noexcept { return s.rows(); }
    [[nodiscard]] std::size_t parameter_count() const noexcept;
};

struct HiddenState {
    Matrix z;  // N x h
    std::size_t step = 0;
};

// history[k] holds X(t-k); uses min(taps, history) summands.
[[nodiscard]] Matrix graph_filter(const Matrix& s, std::span<const Matrix> taps, std::span<const Matrix> history);

// Throws DimensionError if the layer shapes do not chain from p to q.
void validate(const GcnnParams& params, std::size_t state_dim);
[[nodiscard]] Matrix gcnn_forward(const GcnnParams& params, const Matrix& x);

[[nodiscard]] HiddenState initial_hidden_state(const GrnnParams& params);
// Throws InvariantError if s has support outside the mask.
[[nodiscard]] std::pair<HiddenState, Matrix> grnn_step(const GrnnParams& params, const HiddenState& prev, const Matrix& x);

// fixed: S = normalized adjacency, not trained. masked: same start, trained on the
// topology's support. dense: unconstrained S, random with spectral norm 1.
enum class ShiftPolicy { fixed, masked, dense };

struct GrnnDims {
    std::size_t state_dim = 1;
    std::size_t hidden_dim = 5;
    std::size_t input_dim = 1;
};

struct GcnnLayerSpec {
    std::size_t taps;
    std::size_t width;  // output columns c_l
};

// Two layers, 5 then 1 taps, hidden width 32: 5*32 + 32 = 192 parameters for p = q = 1.
[[nodiscard]] std::vector<GcnnLayerSpec> default_gcnn_layers(std::size_t input_dim = 1);

// Weights are uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) with fan_in the row count.
[[nodiscard]] GrnnParams init_grnn(const Topology& t, GrnnDims dims, ShiftPolicy policy, Rng& rng,
                                   Activation activation = Activation::tanh);
[[nodiscard]] GcnnParams init_gcnn(const Topology& t, std::size_t state_dim, std::span<const GcnnLayerSpec> layers,
                                   Rng& rng, Activation activation = Activation::tanh);

class GrnnPolicy final : public Policy {
public:
    explicit GrnnPolicy(GrnnParams params) : params_(std::move(params)), hidden_(initial_hidden_state(params_)) {}
    void reset() override { hidden_ = initial_hidden_state(params_); }
    Matrix act(const Matrix& x) override;
    [[nodiscard]] const HiddenState& hidden() const noexcept { return hidden_; }

private:
    GrnnParams params_;
    HiddenState hidden_;
};

class GcnnPolicy final : public Policy {
public:
    explicit GcnnPolicy(GcnnParams params) : params_(std::move(params)) {}
    Matrix act(const Matrix& x) override { return gcnn_forward(params_, x); }

private:
    GcnnParams params_;
};

}  // namespace grnn
