#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>
#include <vector>

#include "grnn/controllers.hpp"
#include "grnn/graphs.hpp"
#include "grnn/lqr.hpp"
#include "grnn/random.hpp"
#include "grnn/training.hpp"

namespace grnn::testing {

inline Matrix random_symmetric(std::size_t n, Rng& rng) {
    Matrix m = rng.normal_matrix(n, n);
    return 0.5 * (m + transpose(m));
}

// n-node instance from the standard recipe with a short horizon.
inline LqrProblem small_problem(std::size_t n, std::size_t k, double norm_a, std::size_t horizon, Rng& rng) {
    const Topology t = sample_topology(n, k, rng);
    return make_lqr_problem(generate_system(t, norm_a, 1.0, rng), horizon);
}

// Scales S to a random nonzero pattern on its mask so gradients are generic.
inline void randomize_shift(GrnnParams& p, Rng& rng) {
    p.s = 0.4 * rng.normal_matrix(p.s.rows(), p.s.cols());
    if (p.mask) p.mask->apply(p.s);
}

struct GradientCheck {
    double max_rel_error = 0.0;
    std::size_t entries = 0;
};

template <class Params>
bool outside_mask(const Params& p, std::size_t matrix, std::size_t flat) {
    if constexpr (std::is_same_v<Params, GrnnParams>) {
        if (matrix == 0 && p.train_s && p.mask) return !(*p.mask)(flat / p.s.cols(), flat % p.s.cols());
    }
    return false;
}

// Compares analytic gradients to central differences of the loss. The relative
// error of one entry is |a - n| / max(|a|, |n|, floor).
template <class Params>
GradientCheck check_gradients(Params params, const LqrProblem& prob, const std::vector<Matrix>& x0, double step,
                              double floor) {
    const LossGradient lg = loss_gradients(params, prob, x0);
    auto trainables = trainable_parameters(params);
    GradientCheck out;
    for (std::size_t m = 0; m < trainables.size(); ++m) {
        auto values = trainables[m]->values();
        const auto grad = lg.grads[m].values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (outside_mask(params, m, i)) {
                // Not a free parameter: the gradient must vanish exactly.
                if (grad[i] != 0.0) out.max_rel_error = std::max(out.max_rel_error, 1.0);
                continue;
            }
            const double saved = values[i];
            values[i] = saved + step;
            const double up = closed_loop_loss(params, prob, x0);
            values[i] = saved - step;
            const double down = closed_loop_loss(params, prob, x0);
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double scale = std::max({std::abs(grad[i]), std::abs(numeric), floor});
            out.max_rel_error = std::max(out.max_rel_error, std::abs(grad[i] - numeric) / scale);
            ++out.entries;
        }
    }
    return out;
}

// Matrix with P(i, perm[i]) = 1, so (P X) row i = X row perm[i].
inline Matrix permutation_matrix(const std::vector<std::size_t>& perm) {
    Matrix p(perm.size(), perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) p(i, perm[i]) = 1.0;
    return p;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
    }
    return perm;
}

// Minimizer of 0.5 (x - s)^2 + tau |x| by brute force: a coarse grid over
// [-|s| - 1, |s| + 1], then two successively finer grids around the best point.
inline double prox_grid_search(double s, double tau) {
    auto objective = [&](double x) { return 0.5 * (x - s) * (x - s) + tau * std::abs(x); };
    double lo = -std::abs(s) - 1.0, hi = std::abs(s) + 1.0, best = 0.0;
    for (int level = 0; level < 3; ++level) {
        const int points = 4000;
        const double h = (hi - lo) / points;
        double best_val = objective(best);
        for (int k = 0; k <= points; ++k) {
            const double x = lo + h * k;
            if (const double v = objective(x); v < best_val) {
                best_val = v;
                best = x;
            }
        }
        lo = best - 2.0 * h;
        hi = best + 2.0 * h;
    }
    return best;
}

// Controls of a GRNN fed a recorded state sequence (no plant feedback).
inline std::vector<Matrix> grnn_open_loop(const GrnnParams& p, const std::vector<Matrix>& xs) {
    std::vector<Matrix> us;
    HiddenState h = initial_hidden_state(p);
    for (const auto& x : xs) {
        auto [next, u] = grnn_step(p, h, x);
        h = std::move(next);
        us.push_back(std::move(u));
    }
    return us;
}

struct LocalityReport {
    std::size_t checked = 0;     // (j, tau, i, t) with dist(j -> i) > t - tau: must be unchanged
    std::size_t violations = 0;  // of those, entries that changed at all
    std::size_t reachable_changed = 0;  // pairs inside the horizon that did change (non-vacuity)
};

// Perturbs x_j(tau) of a recorded sequence and compares every u_i(t), t >= tau,
// bitwise against the unperturbed run.
inline LocalityReport check_locality(const GrnnParams& p, const Topology& t, const std::vector<Matrix>& xs) {
    const DistanceTable dist(t);
    const auto base = grnn_open_loop(p, xs);
    LocalityReport r;
    for (std::size_t tau = 0; tau < xs.size(); ++tau)
        for (std::size_t j = 0; j < t.n(); ++j) {
            auto bumped = xs;
            for (std::size_t c = 0; c < bumped[tau].cols(); ++c) bumped[tau](j, c) += 0.7;
            const auto us = grnn_open_loop(p, bumped);
            for (std::size_t step = tau; step < xs.size(); ++step)
                for (std::size_t i = 0; i < t.n(); ++i) {
                    bool same = true;
                    for (std::size_t c = 0; c < us[step].cols(); ++c) same = same && us[step](i, c) == base[step](i, c);
                    if (dist(j, i) > step - tau) {
                        ++r.checked;
                        if (!same) ++r.violations;
                    } else if (!same) {
                        ++r.reachable_changed;
                    }
                }
        }
    return r;
}

// max |P U - U'| where U' is computed on the relabelled graph and inputs.
inline double grnn_equivariance_error(GrnnParams p, const std::vector<Matrix>& xs, const std::vector<std::size_t>& perm) {
    p.mask.reset();
    const Matrix pm = permutation_matrix(perm);
    GrnnParams q = p;
    q.s = pm * p.s * transpose(pm);
    std::vector<Matrix> pxs;
    for (const auto& x : xs) pxs.push_back(pm * x);
    const auto us = grnn_open_loop(p, xs);
    const auto pus = grnn_open_loop(q, pxs);
    double err = 0.0;
    for (std::size_t t = 0; t < us.size(); ++t) err = std::max(err, max_abs(pm * us[t] - pus[t]));
    return err;
}

inline double gcnn_equivariance_error(const GcnnParams& p, const Matrix& x, const std::vector<std::size_t>& perm) {
    const Matrix pm = permutation_matrix(perm);
    GcnnParams q = p;
    q.s = pm * p.s * transpose(pm);
    return max_abs(pm * gcnn_forward(p, x) - gcnn_forward(q, pm * x));
}

}  // namespace grnn::testing
