#pragma once

#include "mlsvm/graph.hpp"
#include "mlsvm/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mlsvm {

/// Allowed overshoot of the largest part over ceil(n / K).
inline constexpr double kBalanceTolerance = 0.05;

struct Partitioning {
    std::vector<std::size_t> part_of;
    std::size_t parts = 0;
    std::vector<std::size_t> sizes;
    /// Volume-weighted mean of the member points.
    Matrix centroids;
    std::vector<double> volumes;

    [[nodiscard]] std::vector<std::size_t> members(std::size_t part) const;
    /// Largest part size permitted for n nodes in K parts.
    [[nodiscard]] static std::size_t size_limit(std::size_t n, std::size_t parts) noexcept;
};

/// Sum of edge weights crossing parts.
[[nodiscard]] double edge_cut(const ProximityGraph& g, const std::vector<std::size_t>& part_of);

/// Greedy boundary moves, at most 8 passes. A node moves only when that
/// strictly lowers the cut, leaves its part nonempty and keeps the target
/// within `limit`. `sizes` is updated with `part_of`.
void refine_partition(const ProximityGraph& g, std::size_t limit, std::vector<std::size_t>& part_of,
                      std::vector<std::size_t>& sizes);

/// Balanced K-way partition: farthest-point seeds, round-robin BFS region
/// growing capped at ceil(n / K), then boundary moves that strictly lower
/// the cut while respecting the balance bound. Throws InvalidArgument when
/// K is 0 or exceeds n, or the graph and points disagree in size.
[[nodiscard]] Partitioning partition_graph(const ProximityGraph& g, const Matrix& points, std::size_t parts,
                                           std::uint64_t seed = 0);

}  // namespace mlsvm
