#include "grnn/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "grnn/serialize.hpp"

namespace grnn {

Topology::Topology(BoolMatrix adjacency, std::optional<std::vector<double>> positions)
    : adjacency_(std::move(adjacency)), positions_(std::move(positions)) {
    if (positions_ && positions_->size() != adjacency_.n())
        throw ParameterError("Topology: positions length does not match node count");
}

std::size_t Topology::edge_count() const noexcept {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n(); ++i)
        for (std::size_t j = 0; j < n(); ++j)
            if (i != j && adjacency_(i, j)) ++count;
    return count;
}

bool Topology::is_symmetric() const noexcept {
    for (std::size_t i = 0; i < n(); ++i)
        for (std::size_t j = i + 1; j < n(); ++j)
            if (adjacency_(i, j) != adjacency_(j, i)) return false;
    return true;
}

std::vector<std::pair<std::size_t, std::size_t>> Topology::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t src = 0; src < n(); ++src)
        for (std::size_t dst = 0; dst < n(); ++dst)
            if (src != dst && has_edge(src, dst)) out.emplace_back(src, dst);
    return out;
}

GsoMask::GsoMask(BoolMatrix allowed) : allowed_(std::move(allowed)) {
    for (std::size_t i = 0; i < allowed_.n(); ++i) allowed_.set(i, i, true);
}

std::size_t GsoMask::off_diagonal_count() const noexcept {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n(); ++i)
        for (std::size_t j = 0; j < n(); ++j)
            if (i != j && allowed_(i, j)) ++count;
    return count;
}

void GsoMask::apply(Matrix& m) const {
    if (m.rows() != n() || m.cols() != n()) throw DimensionError("GsoMask::apply: shape mismatch");
    for (std::size_t i = 0; i < n(); ++i)
        for (std::size_t j = 0; j < n(); ++j)
            if (!allowed_(i, j)) m(i, j) = 0.0;
}

bool GsoMask::admits(const Matrix& m) const {
    if (m.rows() != n() || m.cols() != n()) return false;
    for (std::size_t i = 0; i < n(); ++i)
        for (std::size_t j = 0; j < n(); ++j)
            if (!allowed_(i, j) && m(i, j) != 0.0) return false;
    return true;
}

Topology topology_from_positions(std::span<const double> positions, std::size_t k) {
    const std::size_t n = positions.size();
    if (n < 2) throw ParameterError("sample_topology: need n >= 2");
    if (k < 1 || k > n - 1) throw ParameterError("sample_topology: need 1 <= k <= n-1");

    BoolMatrix adj(n);
    std::vector<std::size_t> others(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        others.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(j);
        std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
            const double da = std::abs(positions[i] - positions[a]);
            const double db = std::abs(positions[i] - positions[b]);
            return da < db || (da == db && a < b);
        });
        for (std::size_t r = 0; r < k; ++r) {
            adj.set(i, others[r], true);
            adj.set(others[r], i, true);
        }
    }
    return Topology(std::move(adj), std::vector<double>(positions.begin(), positions.end()));
}

Topology sample_topology(std::size_t n, std::size_t k, Rng& rng) {
    if (n < 2) throw ParameterError("sample_topology: need n >= 2");
    if (k < 1 || k > n - 1) throw ParameterError("sample_topology: need 1 <= k <= n-1");
    std::vector<double> positions(n);
    for (double& u : positions) u = rng.uniform();
    return topology_from_positions(positions, k);
}

namespace {

std::vector<HopCount> bfs_from(const Topology& t, std::size_t src) {
    const std::size_t n = t.n();
    std::vector<HopCount> dist(n, kUnreachable);
    std::deque<std::size_t> frontier{src};
    dist[src] = 0;
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop_front();
        for (std::size_t v = 0; v < n; ++v) {
            if (v != u && t.has_edge(u, v) && dist[v] == kUnreachable) {
                dist[v] = dist[u] + 1;
                frontier.push_back(v);
            }
        }
    }
    return dist;
}

}  // namespace

HopCount directed_distance(const Topology& t, std::size_t src, std::size_t dst) {
    if (src >= t.n() || dst >= t.n()) throw ParameterError("directed_distance: node index out of range");
    return bfs_from(t, src)[dst];
}

DistanceTable::DistanceTable(const Topology& t) : n_(t.n()), hops_(t.n() * t.n()) {
    for (std::size_t src = 0; src < n_; ++src) {
        const auto row = bfs_from(t, src);
        std::copy(row.begin(), row.end(), hops_.begin() + static_cast<std::ptrdiff_t>(src * n_));
    }
}

Matrix normalized_adjacency(const Topology& t) {
    if (!t.is_symmetric()) throw DegenerateInputError("normalized_adjacency: topology is not symmetric");
    if (t.edge_count() == 0) throw DegenerateInputError("normalized_adjacency: graph has no edges");
    const std::size_t n = t.n();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && t.adjacency()(i, j)) a(i, j) = 1.0;
    const auto eig = sym_eig(a);
    const double rho = std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
    a *= 1.0 / rho;
    return a;
}

GsoMask support_mask(const Topology& t) { return GsoMask(t.adjacency()); }

GsoMask dense_mask(std::size_t n) { return GsoMask(BoolMatrix(n, true)); }

std::string export_topology(const Topology& t, TopologyFormat format) {
    if (format == TopologyFormat::json) return topology_to_json(t).dump(2) + "\n";

    std::ostringstream out;
    out << "digraph G {\n";
    for (std::size_t i = 0; i < t.n(); ++i) out << "  " << i + 1 << ";\n";
    for (const auto& [src, dst] : t.edges()) out << "  " << src + 1 << " -> " << dst + 1 << ";\n";
    out << "}\n";
    return out.str();
}

Topology parse_topology_json(const std::string& text) { return topology_from_json(nlohmann::json::parse(text)); }

}  // namespace grnn
