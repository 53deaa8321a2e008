#include "grnn/dynamics.hpp"

#include <cmath>
#include <string>

namespace grnn {

namespace {

constexpr HopCount kInteractionRadius = 3;

void sparsify(Matrix& m, const DistanceTable& dist) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (dist(i, j) > kInteractionRadius) m(i, j) = 0.0;
}

void symmetrize(Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j) m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
}

Matrix rescale_to_norm(Matrix m, double target) {
    const double current = spectral_norm(m);
    if (current == 0.0) {
        if (target == 0.0) return m;
        throw DegenerateInputError("generate_system: sparsified matrix is zero, cannot rescale");
    }
    m *= target / current;
    return m;
}

}  // namespace

LinearSystem generate_system(const Topology& t, double norm_a, double norm_b, Rng& rng) {
    if (norm_a < 0.0 || norm_b < 0.0) throw ParameterError("generate_system: norms must be non-negative");
    const std::size_t n = t.n();
    const auto eig = sym_eig(normalized_adjacency(t));
    const Matrix& v = eig.vectors;

    auto spectral_matrix = [&](std::span<const double> lambda) {
        Matrix scaled = v;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= lambda[j];
        Matrix m(n, n);
        multiply_a_bt_add(m, scaled, v);
        symmetrize(m);
        return m;
    };

    std::vector<double> lambda_a(n), lambda_b(n);
    for (double& x : lambda_a) x = rng.normal();
    for (double& x : lambda_b) x = rng.normal();

    Matrix a = spectral_matrix(lambda_a);
    Matrix b = spectral_matrix(lambda_b);

    const DistanceTable dist(t);
    sparsify(a, dist);
    sparsify(b, dist);

    LinearSystem sys;
    sys.a = rescale_to_norm(std::move(a), norm_a);
    sys.b = rescale_to_norm(std::move(b), norm_b);
    sys.source_topology = t;
    sys.norm_a = norm_a;
    sys.norm_b = norm_b;
    sys.seed = rng.seed();
    return sys;
}

LinearGainPolicy::LinearGainPolicy(Matrix gain, std::size_t nodes) : gain_(std::move(gain)), nodes_(nodes) {
    if (nodes_ == 0 || gain_.rows() % nodes_ != 0) throw DimensionError("LinearGainPolicy: gain rows not divisible by node count");
}

Matrix LinearGainPolicy::act(const Matrix& x) {
    Matrix u(nodes_, gain_.rows() / nodes_);
    matvec_into(u.values(), gain_, x.values());
    return u;
}

Trajectory rollout(const LinearSystem& sys, Policy& policy, const Matrix& x0, std::size_t horizon) {
    const std::size_t n = sys.nodes();
    if (x0.rows() != n || x0.size() != sys.a.cols()) throw DimensionError("rollout: x0 shape does not match the plant");

    Trajectory traj;
    traj.states.reserve(horizon + 1);
    traj.controls.reserve(horizon);
    traj.states.push_back(x0);
    policy.reset();

    for (std::size_t t = 0; t < horizon; ++t) {
        const Matrix& x = traj.states.back();
        Matrix u = policy.act(x);
        if (u.size() != sys.b.cols()) throw DimensionError("rollout: policy output shape does not match the plant");
        Matrix next(n, x.cols());
        matvec_into(next.values(), sys.a, x.values());
        std::vector<double> bu(sys.b.rows());
        matvec_into(bu, sys.b, u.values());
        for (std::size_t i = 0; i < bu.size(); ++i) next.values()[i] += bu[i];
        if (!all_finite(next) || !all_finite(u))
            throw DivergedError("rollout: non-finite state after step " + std::to_string(t), t);
        traj.controls.push_back(std::move(u));
        traj.states.push_back(std::move(next));
    }
    return traj;
}

}  // namespace grnn
