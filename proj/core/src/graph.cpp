#include "mlsvm/graph.hpp"

#include "mlsvm/error.hpp"
#include "mlsvm/knn.hpp"

#include <algorithm>
#include <numeric>

namespace mlsvm {

ProximityGraph::ProximityGraph(std::size_t node_count, std::vector<WeightedEdge> edges, std::vector<double> volumes)
    : volumes_(std::move(volumes)) {
    if (volumes_.empty()) {
        volumes_.assign(node_count, 1.0);
    }
    if (volumes_.size() != node_count) {
        throw InvalidArgument("volume count differs from node count");
    }
    for (auto& e : edges) {
        if (e.u == e.v || e.u >= node_count || e.v >= node_count) {
            throw InvalidArgument("edge endpoints must be distinct valid nodes");
        }
        if (e.u > e.v) {
            std::swap(e.u, e.v);
        }
    }
    std::sort(edges.begin(), edges.end(),
              [](const WeightedEdge& a, const WeightedEdge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
    std::vector<WeightedEdge> merged;
    merged.reserve(edges.size());
    for (const auto& e : edges) {
        if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v) {
            merged.back().weight += e.weight;
        } else {
            merged.push_back(e);
        }
    }

    std::vector<std::size_t> degree(node_count, 0);
    for (const auto& e : merged) {
        ++degree[e.u];
        ++degree[e.v];
    }
    offsets_.assign(node_count + 1, 0);
    for (std::size_t i = 0; i < node_count; ++i) {
        offsets_[i + 1] = offsets_[i] + degree[i];
    }
    adjacency_.resize(offsets_.back());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : merged) {
        adjacency_[cursor[e.u]++] = {e.v, e.weight};
    }
    for (const auto& e : merged) {
        adjacency_[cursor[e.v]++] = {e.u, e.weight};
    }
    for (std::size_t i = 0; i < node_count; ++i) {
        std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                  adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]),
                  [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    }
}

double ProximityGraph::weighted_degree(std::size_t i) const noexcept {
    double sum = 0.0;
    for (const auto& nb : neighbors(i)) {
        sum += nb.weight;
    }
    return sum;
}

double ProximityGraph::total_volume() const noexcept {
    return std::accumulate(volumes_.begin(), volumes_.end(), 0.0);
}

double ProximityGraph::weight(std::size_t i, std::size_t j) const noexcept {
    const auto nbrs = neighbors(i);
    const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), j,
                                     [](const Neighbor& nb, std::size_t target) { return nb.node < target; });
    return it != nbrs.end() && it->node == j ? it->weight : 0.0;
}

std::vector<WeightedEdge> ProximityGraph::edges() const {
    std::vector<WeightedEdge> out;
    out.reserve(edge_count());
    for (std::size_t i = 0; i < node_count(); ++i) {
        for (const auto& nb : neighbors(i)) {
            if (i < nb.node) {
                out.push_back({i, nb.node, nb.weight});
            }
        }
    }
    return out;
}

ProximityGraph ProximityGraph::induced(std::span<const std::size_t> nodes) const {
    std::vector<std::size_t> local(node_count(), node_count());
    for (std::size_t t = 0; t < nodes.size(); ++t) {
        local[nodes[t]] = t;
    }
    std::vector<WeightedEdge> sub;
    std::vector<double> vols;
    vols.reserve(nodes.size());
    for (std::size_t t = 0; t < nodes.size(); ++t) {
        vols.push_back(volumes_[nodes[t]]);
        for (const auto& nb : neighbors(nodes[t])) {
            const std::size_t other = local[nb.node];
            if (other != node_count() && t < other) {
                sub.push_back({t, other, nb.weight});
            }
        }
    }
    return {nodes.size(), std::move(sub), std::move(vols)};
}

namespace {

double inverse_distance_weight(double distance) {
    if (distance <= 1.0 / kMaxEdgeWeight) {
        return kMaxEdgeWeight;
    }
    return 1.0 / distance;
}

}  // namespace

ProximityGraph build_knn_graph(const Matrix& points, std::size_t k, const KnnOptions& options) {
    const std::size_t n = points.rows();
    if (n < 2) {
        throw InvalidArgument("k-NN graph needs at least two points");
    }
    if (k == 0 || k >= n) {
        throw InvalidArgument("k-NN graph needs 1 <= k < number of points");
    }
    const bool exact =
        options.mode == KnnMode::exact || (options.mode == KnnMode::automatic && n <= kExactKnnLimit);
    const NeighborTable table =
        exact ? knn_exact(points, k, options.threads)
              : knn_approximate(points, k, {options.branching, options.leaf_size, 11, options.seed}, options.checks,
                                options.threads);

    std::vector<WeightedEdge> edges;
    edges.reserve(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ids = table.ids_of(i);
        const auto dist = table.distances_of(i);
        for (std::size_t t = 0; t < k; ++t) {
            const std::size_t j = ids[t];
            edges.push_back({std::min(i, j), std::max(i, j), inverse_distance_weight(dist[t])});
        }
    }
    // the union keeps one copy of each pair; both directions carry the same distance
    std::sort(edges.begin(), edges.end(),
              [](const WeightedEdge& a, const WeightedEdge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const WeightedEdge& a, const WeightedEdge& b) { return a.u == b.u && a.v == b.v; }),
                edges.end());
    return {n, std::move(edges)};
}

ProximityGraph filter_weak_edges(const ProximityGraph& g, double theta) {
    if (!(theta >= 0.0 && theta < 1.0)) {
        throw InvalidArgument("weak-edge threshold must lie in [0, 1)");
    }
    const std::size_t n = g.node_count();
    std::vector<double> average(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (g.degree(i) > 0) {
            average[i] = g.weighted_degree(i) / static_cast<double>(g.degree(i));
        }
    }
    std::vector<WeightedEdge> kept;
    for (const auto& e : g.edges()) {
        const bool weak = e.weight < theta * average[e.u] && e.weight < theta * average[e.v];
        if (!weak) {
            kept.push_back(e);
        }
    }
    return {n, std::move(kept), std::vector<double>(g.volumes().begin(), g.volumes().end())};
}

}  // namespace mlsvm
