#pragma once

// Communication topologies, hop distances, and graph-shift-operator masks.
//
// Orientation convention: adjacency(i, j) is true iff the directed edge
// j -> i exists, i.e. row = receiver. This matches S(i, j) != 0 only when
// node i may aggregate information sent by node j.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grnn/linalg.hpp"
#include "grnn/random.hpp"

namespace grnn {

using HopCount = std::size_t;
// Ordered above every finite hop count.
inline constexpr HopCount kUnreachable = std::numeric_limits<HopCount>::max();

// Dense boolean n x n matrix stored row-major as bytes.
class BoolMatrix {
public:
    BoolMatrix() = default;
    explicit BoolMatrix(std::size_t n, bool fill = false) : n_(n), bits_(n * n, fill ? 1 : 0) {}

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] bool operator()(std::size_t i, std::size_t j) const noexcept { return bits_[i * n_ + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) noexcept { bits_[i * n_ + j] = v ? 1 : 0; }

    friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> bits_;
};

class Topology {
public:
    Topology() = default;
    explicit Topology(std::size_t n) : adjacency_(n) {}
    Topology(BoolMatrix adjacency, std::optional<std::vector<double>> positions = std::nullopt);

    [[nodiscard]] std::size_t n() const noexcept { return adjacency_.n(); }
    [[nodiscard]] const BoolMatrix& adjacency() const noexcept { return adjacency_; }
    [[nodiscard]] const std::optional<std::vector<double>>& positions() const noexcept { return positions_; }

    // True iff the directed edge src -> dst exists.
    [[nodiscard]] bool has_edge(std::size_t src, std::size_t dst) const noexcept { return adjacency_(dst, src); }
    void add_edge(std::size_t src, std::size_t dst) { adjacency_.set(dst, src, true); }

    // Off-diagonal directed edges; stored self-loops are not counted.
    [[nodiscard]] std::size_t edge_count() const noexcept;
    [[nodiscard]] bool is_symmetric() const noexcept;

    // (src, dst) pairs, ordered by src then dst, diagonal excluded.
    [[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> edges() const;

    friend bool operator==(const Topology&, const Topology&) = default;

private:
    BoolMatrix adjacency_;
    std::optional<std::vector<double>> positions_;
};

// Valid-GSO support: mask(i, j) true iff S(i, j) may be nonzero. Diagonal is always permitted.
class GsoMask {
public:
    GsoMask() = default;
    explicit GsoMask(BoolMatrix allowed);

    [[nodiscard]] std::size_t n() const noexcept { return allowed_.n(); }
    [[nodiscard]] bool operator()(std::size_t i, std::size_t j) const noexcept { return allowed_(i, j); }
    [[nodiscard]] const BoolMatrix& matrix() const noexcept { return allowed_; }
    [[nodiscard]] std::size_t off_diagonal_count() const noexcept;

    // Zeroes every entry of m outside the mask.
    void apply(Matrix& m) const;
    // True iff m has no nonzero entry outside the mask.
    [[nodiscard]] bool admits(const Matrix& m) const;

    friend bool operator==(const GsoMask&, const GsoMask&) = default;

private:
    BoolMatrix allowed_;
};

// n points uniform on [0, 1]; each node links bidirectionally to its k nearest
// points under |u_i - u_j| (ties broken toward the lower index).
[[nodiscard]] Topology sample_topology(std::size_t n, std::size_t k, Rng& rng);
[[nodiscard]] Topology topology_from_positions(std::span<const double> positions, std::size_t k);

// Breadth-first directed hop count from src to dst along edge orientation.
[[nodiscard]] HopCount directed_distance(const Topology& t, std::size_t src, std::size_t dst);

// dist(i, j) = directed_distance(t, i, j) for every pair.
class DistanceTable {
public:
    explicit DistanceTable(const Topology& t);
    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] HopCount operator()(std::size_t src, std::size_t dst) const noexcept { return hops_[src * n_ + dst]; }

private:
    std::size_t n_;
    std::vector<HopCount> hops_;
};

// Adjacency (diagonal excluded) divided by its spectral radius.
[[nodiscard]] Matrix normalized_adjacency(const Topology& t);

[[nodiscard]] GsoMask support_mask(const Topology& t);
[[nodiscard]] GsoMask dense_mask(std::size_t n);

enum class TopologyFormat { dot, json };

[[nodiscard]] std::string export_topology(const Topology& t, TopologyFormat format);
[[nodiscard]] Topology parse_topology_json(const std::string& text);

}  // namespace grnn
