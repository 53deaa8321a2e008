#pragma once

#include <cstddef>
#include <span>

#include "grnn/dynamics.hpp"
#include "grnn/linalg.hpp"

namespace grnn {

struct LqrProblem {
    LinearSystem sys;
    Matrix q_mat;
    Matrix r_mat;
    Matrix p_mat;  // terminal cost, the stabilizing DARE solution
    std::size_t horizon = 0;
};

// Fixed-point iteration of the Riccati recursion from P = Q until the relative
// Frobenius change drops below 1e-12. Throws NumericalError after 1e5 iterations.
[[nodiscard]] Matrix solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

// ||A^T P A - P - A^T P B (B^T P B + R)^{-1} B^T P A + Q||_F
[[nodiscard]] double dare_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, const Matrix& p);

// K = -(B^T P B + R)^{-1} B^T P A, so that u = K x.
[[nodiscard]] Matrix centralized_gain(const Matrix& a, const Matrix& b, const Matrix& p, const Matrix& r);

// Q = R = I and P from solve_dare.
[[nodiscard]] LqrProblem make_lqr_problem(LinearSystem sys, std::size_t horizon);

// sum_{t<T} x'Qx + u'Ru + x(T)'P x(T)
[[nodiscard]] double trajectory_cost(const Trajectory& traj, const LqrProblem& prob);

// Ratio of means over a paired evaluation set.
[[nodiscard]] double normalized_cost(std::span<const double> controller_costs, std::span<const double> lqr_costs);

}  // namespace grnn
