#pragma once

#include "mlsvm/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace mlsvm {

/// Flattened n x k neighbor table, each row ordered by (distance, index).
struct NeighborTable {
    std::size_t k = 0;
    std::vector<std::size_t> ids;
    std::vector<double> distances;

    [[nodiscard]] std::span<const std::size_t> ids_of(std::size_t i) const { return {ids.data() + i * k, k}; }
    [[nodiscard]] std::span<const double> distances_of(std::size_t i) const {
        return {distances.data() + i * k, k};
    }
};

/// Brute-force scan; each point excludes itself.
[[nodiscard]] NeighborTable knn_exact(const Matrix& points, std::size_t k, unsigned threads = 1);

/// Hierarchical k-means tree with best-bin-first search.
class KMeansTree {
public:
    struct Params {
        std::size_t branching = 32;
        std::size_t leaf_size = 64;
        std::size_t kmeans_iterations = 11;
        std::uint64_t seed = 0;
    };

    KMeansTree(const Matrix& points, Params params);
    ~KMeansTree();
    KMeansTree(KMeansTree&&) noexcept;
    KMeansTree& operator=(KMeansTree&&) noexcept;

    /// k approximate neighbors of `query`, skipping point `exclude` (pass
    /// points.rows() to skip nothing). Stops once `checks` points were examined.
    void search(std::span<const double> query, std::size_t k, std::size_t checks, std::size_t exclude,
                std::span<std::size_t> out_ids, std::span<double> out_distances) const;

    struct Node;  // opaque; defined in the implementation

private:
    const Matrix* points_;
    Params params_;
    std::unique_ptr<Node> root_;
};

[[nodiscard]] NeighborTable knn_approximate(const Matrix& points, std::size_t k, const KMeansTree::Params& params,
                                            std::size_t checks, unsigned threads = 1);

}  // namespace mlsvm
