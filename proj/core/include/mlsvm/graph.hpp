#pragma once

#include "mlsvm/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mlsvm {

/// Upper bound on an edge weight; pairs at distance 0 get exactly this.
inline constexpr double kMaxEdgeWeight = 1e6;

struct Neighbor {
    std::size_t node;
    double weight;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Undirected edge in canonical form (u < v).
struct WeightedEdge {
    std::size_t u;
    std::size_t v;
    double weight;

    friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Symmetric weighted graph in compressed adjacency form with per-node volumes.
/// Neighbor lists are sorted by node index; there are no self-loops.
class ProximityGraph {
public:
    ProximityGraph() = default;

    /// Builds from canonical edges; duplicates are merged by summing weights.
    /// Empty `volumes` means all ones.
    ProximityGraph(std::size_t node_count, std::vector<WeightedEdge> edges, std::vector<double> volumes = {});

    [[nodiscard]] std::size_t node_count() const noexcept { return volumes_.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept { return adjacency_.size() / 2; }

    [[nodiscard]] std::span<const Neighbor> neighbors(std::size_t i) const noexcept {
        return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    [[nodiscard]] std::size_t degree(std::size_t i) const noexcept { return offsets_[i + 1] - offsets_[i]; }
    [[nodiscard]] double weighted_degree(std::size_t i) const noexcept;

    [[nodiscard]] std::span<const double> volumes() const noexcept { return volumes_; }
    [[nodiscard]] double total_volume() const noexcept;

    /// Weight of edge (i, j) or 0 when absent.
    [[nodiscard]] double weight(std::size_t i, std::size_t j) const noexcept;

    /// Canonical (u < v) edge list, sorted.
    [[nodiscard]] std::vector<WeightedEdge> edges() const;

    /// Subgraph induced by `nodes`; node t of the result is nodes[t].
    [[nodiscard]] ProximityGraph induced(std::span<const std::size_t> nodes) const;

    friend bool operator==(const ProximityGraph&, const ProximityGraph&) = default;

private:
    std::vector<std::size_t> offsets_{0};
    std::vector<Neighbor> adjacency_;
    std::vector<double> volumes_;
};

enum class KnnMode { exact, approximate, automatic };

/// Graphs with more nodes than this use the approximate search under KnnMode::automatic.
inline constexpr std::size_t kExactKnnLimit = 20000;

struct KnnOptions {
    KnnMode mode = KnnMode::automatic;
    std::size_t branching = 32;
    std::size_t leaf_size = 64;
    /// Minimum number of candidate points examined per query in approximate mode.
    std::size_t checks = 512;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// k-NN proximity graph: i--j whenever either is among the other's k nearest
/// (Euclidean), weighted by inverse distance capped at kMaxEdgeWeight; unit volumes.
[[nodiscard]] ProximityGraph build_knn_graph(const Matrix& points, std::size_t k, const KnnOptions& options = {});

/// Drops (i,j) when its weight is below theta times the average adjacent
/// weight at both endpoints. Averages come from the input graph.
[[nodiscard]] ProximityGraph filter_weak_edges(const ProximityGraph& g, double theta);

}  // namespace mlsvm
