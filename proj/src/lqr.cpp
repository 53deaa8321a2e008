#include "grnn/lqr.hpp"

#include <cmath>
#include <numeric>

namespace grnn {

namespace {

void check_square_pair(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    if (!a.is_square() || b.rows() != a.rows() || !q.is_square() || q.rows() != a.rows() || !r.is_square() ||
        r.rows() != b.cols())
        throw DimensionError("LQR: inconsistent A, B, Q, R shapes");
}

void symmetrize(Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j) m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
}

// A^T P A - A^T P B (B^T P B + R)^{-1} B^T P A
Matrix riccati_map(const Matrix& a, const Matrix& b, const Matrix& r, const Matrix& p) {
    const Matrix pa = p * a;
    const Matrix pb = p * b;
    Matrix btpb_r = transpose(b) * pb + r;
    symmetrize(btpb_r);
    const Matrix btpa = transpose(b) * pa;
    const Matrix gain = solve_spd(btpb_r, btpa);
    Matrix out = transpose(a) * pa;
    multiply_at_b_add(out, btpa, gain, -1.0);
    return out;
}

}  // namespace

Matrix solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    check_square_pair(a, b, q, r);
    Matrix p = q;
    constexpr int kMaxIterations = 100000;
    for (int it = 0; it < kMaxIterations; ++it) {
        Matrix next = riccati_map(a, b, r, p) + q;
        symmetrize(next);
        if (!all_finite(next)) throw NumericalError("solve_dare: iteration diverged (unstabilizable pair?)");
        const double change = frobenius_norm(next - p);
        const double scale = frobenius_norm(next);
        if (!std::isfinite(scale)) throw NumericalError("solve_dare: iteration diverged (unstabilizable pair?)");
        p = std::move(next);
        if (change <= 1e-12 * scale) return p;
    }
    throw NumericalError("solve_dare: no convergence in 1e5 iterations (unstabilizable or ill-conditioned)");
}

double dare_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, const Matrix& p) {
    check_square_pair(a, b, q, r);
    return frobenius_norm(riccati_map(a, b, r, p) - p + q);
}

Matrix centralized_gain(const Matrix& a, const Matrix& b, const Matrix& p, const Matrix& r) {
    Matrix normal = transpose(b) * p * b + r;
    symmetrize(normal);
    Matrix k = solve_spd(normal, transpose(b) * p * a);
    k *= -1.0;
    return k;
}

LqrProblem make_lqr_problem(LinearSystem sys, std::size_t horizon) {
    LqrProblem prob;
    prob.q_mat = Matrix::identity(sys.a.rows());
    prob.r_mat = Matrix::identity(sys.b.cols());
    prob.p_mat = solve_dare(sys.a, sys.b, prob.q_mat, prob.r_mat);
    prob.sys = std::move(sys);
    prob.horizon = horizon;
    return prob;
}

double trajectory_cost(const Trajectory& traj, const LqrProblem& prob) {
    if (traj.controls.size() != prob.horizon || traj.states.size() != prob.horizon + 1)
        throw DimensionError("trajectory_cost: trajectory length does not match the horizon");
    double cost = 0.0;
    for (std::size_t t = 0; t < prob.horizon; ++t) {
        cost += quadratic_form(prob.q_mat, traj.states[t].values());
        cost += quadratic_form(prob.r_mat, traj.controls[t].values());
    }
    cost += quadratic_form(prob.p_mat, traj.states.back().values());
    return cost;
}

double normalized_cost(std::span<const double> controller_costs, std::span<const double> lqr_costs) {
    if (controller_costs.empty()) throw ParameterError("normalized_cost: empty evaluation set");
    if (controller_costs.size() != lqr_costs.size()) throw ParameterError("normalized_cost: unpaired evaluation sets");
    const double num = std::accumulate(controller_costs.begin(), controller_costs.end(), 0.0);
    const double den = std::accumulate(lqr_costs.begin(), lqr_costs.end(), 0.0);
    // The sample counts cancel in the ratio of means.
    return num / den;
}

}  // namespace grnn
