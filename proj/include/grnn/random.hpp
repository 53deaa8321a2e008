#pragma once

// Seedable random stream shared by every stochastic component.
//
// Uniform draws take the top 53 bits of mt19937_64 and Gaussian draws use
// Box-Muller, so a seed reproduces the same stream on any conforming
// standard library (std::normal_distribution is implementation-defined).

#include <cstdint>
#include <optional>
#include <cmath>
#include <random>

#include "grnn/linalg.hpp"

namespace grnn {

// SplitMix64 finalizer; used to derive independent child seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child stream seed for (parent, index); distinct indices give unrelated streams.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return mix_seed(parent ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        return r * std::cos(theta);
    }

    Matrix normal_matrix(std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        for (double& v : m.values()) v = normal();
        return m;
    }

    Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
        Matrix m(rows, cols);
        for (double& v : m.values()) v = uniform(lo, hi);
        return m;
    }

    [[nodiscard]] Rng child(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

}  // namespace grnn
