#pragma once

// Networked LTI plants x(t+1) = A x(t) + B u(t) and closed-loop rollouts.
//
// States and controls are carried in stacked form: an N x p matrix whose
// row i is x_i(t). Its row-major storage is exactly the joint vector
// (x_1, ..., x_N), so the plant matrices act on the flat storage directly.

#include <cstdint>
#include <vector>

#include "grnn/graphs.hpp"
#include "grnn/linalg.hpp"
#include "grnn/random.hpp"

namespace grnn {

struct LinearSystem {
    Matrix a;  // (N p) x (N p)
    Matrix b;  // (N p) x (N q)
    Topology source_topology;
    double norm_a = 0.0;
    double norm_b = 0.0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t nodes() const noexcept { return source_topology.n(); }
    [[nodiscard]] std::size_t state_dim() const noexcept { return nodes() == 0 ? 0 : a.rows() / nodes(); }
    [[nodiscard]] std::size_t input_dim() const noexcept { return nodes() == 0 ? 0 : b.cols() / nodes(); }
};

// Eigen-construction on the normalized adjacency, 3-hop sparsification, then
// rescaling to the target spectral norms. Draws N normals for A, then N for B.
[[nodiscard]] LinearSystem generate_system(const Topology& t, double norm_a, double norm_b, Rng& rng);

// Stateful state-feedback policy. reset() is called once before each rollout.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void reset() {}
    // x is the N x p stacked state; returns the N x q stacked control.
    virtual Matrix act(const Matrix& x) = 0;
};

class ZeroPolicy final : public Policy {
public:
    ZeroPolicy(std::size_t nodes, std::size_t input_dim) : nodes_(nodes), input_dim_(input_dim) {}
    Matrix act(const Matrix&) override { return Matrix(nodes_, input_dim_); }

private:
    std::size_t nodes_;
    std::size_t input_dim_;
};

// u = K x on the joint vectors.
class LinearGainPolicy final : public Policy {
public:
    LinearGainPolicy(Matrix gain, std::size_t nodes);
    Matrix act(const Matrix& x) override;

private:
    Matrix gain_;
    std::size_t nodes_;
};

struct Trajectory {
    std::vector<Matrix> states;    // T + 1 entries, N x p
    std::vector<Matrix> controls;  // T entries, N x q

    [[nodiscard]] std::size_t horizon() const noexcept { return controls.size(); }
};

// Applies controls for t = 0..T-1 and records the terminal state x(T).
// Throws DivergedError carrying the step whose successor state is non-finite.
[[nodiscard]] Trajectory rollout(const LinearSystem& sys, Policy& policy, const Matrix& x0, std::size_t horizon);

}  // namespace grnn
