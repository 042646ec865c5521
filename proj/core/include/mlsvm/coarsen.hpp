#pragma once

#include "mlsvm/data.hpp"
#include "mlsvm/graph.hpp"
#include "mlsvm/matrix.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mlsvm {

/// Sparse |fine| x |coarse| aggregation operator stored by rows, with the
/// column supports precomputed. Column q is the aggregate seeded by seed(q).
class InterpolationMatrix {
public:
    struct Entry {
        std::size_t column;
        double value;
    };

    InterpolationMatrix() = default;
    /// `rows[i]` lists the nonzeros of fine row i; `seeds[q]` is the fine seed of column q.
    InterpolationMatrix(std::vector<std::vector<Entry>> rows, std::vector<std::size_t> seeds);

    [[nodiscard]] static InterpolationMatrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return row_offsets_.size() - 1; }
    [[nodiscard]] std::size_t cols() const noexcept { return seeds_.size(); }

    [[nodiscard]] std::span<const Entry> row(std::size_t i) const noexcept {
        return {entries_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
    }
    /// (fine row, value) pairs of column q, ordered by row.
    [[nodiscard]] std::span<const std::pair<std::size_t, double>> column(std::size_t q) const noexcept {
        return {column_entries_.data() + column_offsets_[q], column_offsets_[q + 1] - column_offsets_[q]};
    }
    [[nodiscard]] std::size_t seed(std::size_t q) const noexcept { return seeds_[q]; }
    [[nodiscard]] std::span<const std::size_t> seeds() const noexcept { return seeds_; }

    [[nodiscard]] double at(std::size_t i, std::size_t q) const noexcept;
    [[nodiscard]] std::size_t nonzeros() const noexcept { return entries_.size(); }

private:
    std::vector<std::size_t> row_offsets_{0};
    std::vector<Entry> entries_;
    std::vector<std::size_t> column_offsets_{0};
    std::vector<std::pair<std::size_t, double>> column_entries_;
    std::vector<std::size_t> seeds_;
};

enum class CoarseningMode { amg, iis, sparse_amg };

/// Future volume of every node: v_i + sum_j v_j * w_ji / (weighted degree of j).
[[nodiscard]] std::vector<double> future_volumes(const ProximityGraph& g);

struct SeedSelection {
    std::vector<std::size_t> seeds;      // ascending
    std::vector<std::size_t> non_seeds;  // ascending
};

/// Nodes with future volume above eta times the mean seed immediately; the
/// rest are visited by decreasing future volume (recomputed over non-seed
/// neighbors only; ties by index) and become seeds when their coupling to the
/// current seeds is at most Q.
[[nodiscard]] SeedSelection select_seeds(const ProximityGraph& g, std::span<const double> future_volume, double Q,
                                         double eta);

/// Seeds map to their own column with value 1; other nodes split over their
/// r strongest seed neighbors proportionally to edge weight. Nodes without a
/// seed neighbor are promoted to seeds. Columns follow ascending seed index.
[[nodiscard]] InterpolationMatrix build_interpolation(const ProximityGraph& g, std::span<const std::size_t> seeds,
                                                      std::size_t caliber);

/// Edge weights of P^T W P with the diagonal dropped, as a canonical edge list.
[[nodiscard]] std::vector<WeightedEdge> galerkin_edges(const ProximityGraph& g, const InterpolationMatrix& p);

/// One class at one level of the hierarchy.
struct ClassLevel {
    Matrix points;
    ProximityGraph graph;
    /// Link to the next-finer level (|finer| x |this|). Absent at the finest level
    /// and for IIS levels.
    std::optional<InterpolationMatrix> interpolation;
    /// Finer-level index represented by each point: the seed for AMG, the
    /// selected point for IIS, the same point for copies.
    std::vector<std::size_t> finer_index;
    bool copied_from_finer = false;

    [[nodiscard]] std::size_t size() const noexcept { return points.rows(); }
};

struct CoarseningParams {
    CoarseningMode mode = CoarseningMode::amg;
    double Q = 0.5;
    double eta = 2.0;
    std::size_t caliber = 1;
    double theta = 0.05;
    std::size_t k_nn = 10;
    std::size_t max_positive = 300;  // M+
    std::size_t max_negative = 300;  // M-
    std::size_t coarsest_size = 500;
    std::uint64_t seed = 0;
    KnnOptions knn{};
};

/// Throws CoarseningStagnation when the result is not smaller than the input.
[[nodiscard]] ClassLevel coarsen_amg(const ClassLevel& fine, const CoarseningParams& params);

/// Visiting order for one independent-set pass over the still-unselected nodes.
using IisOrder = std::function<std::vector<std::size_t>(std::span<const std::size_t> remaining)>;

/// Accumulates independent-set passes while they fit in ceil(Q * n); an
/// oversized first pass is truncated to the budget. Result is ascending.
[[nodiscard]] std::vector<std::size_t> iis_select(const ProximityGraph& g, double Q, const IisOrder& order);
[[nodiscard]] std::vector<std::size_t> iis_select(const ProximityGraph& g, double Q, std::uint64_t seed);

/// Keeps the iis_select points and rebuilds their k-NN graph.
[[nodiscard]] ClassLevel coarsen_iis(const ClassLevel& fine, const CoarseningParams& params, std::uint64_t seed);

struct Level {
    ClassLevel positive;
    ClassLevel negative;

    [[nodiscard]] const ClassLevel& of(int label) const noexcept { return label > 0 ? positive : negative; }
    [[nodiscard]] std::size_t size() const noexcept { return positive.size() + negative.size(); }
};

/// levels[0] is the finest; finest_rows map class-local finest indices to dataset rows.
struct Hierarchy {
    std::vector<Level> levels;
    std::vector<std::size_t> positive_rows;
    std::vector<std::size_t> negative_rows;

    [[nodiscard]] std::size_t depth() const noexcept { return levels.size(); }
    [[nodiscard]] std::span<const std::size_t> rows_of(int label) const noexcept {
        return label > 0 ? std::span<const std::size_t>(positive_rows) : std::span<const std::size_t>(negative_rows);
    }
};

/// Coarsens both classes until the level holds at most coarsest_size points or
/// neither class exceeds its M limit. A class at or below its limit is copied.
[[nodiscard]] Hierarchy build_hierarchy(const Dataset& d, ProximityGraph positive_graph, ProximityGraph negative_graph,
                                        const CoarseningParams& params);

/// Per-level sizes, volume sums and edge counts.
[[nodiscard]] nlohmann::json hierarchy_summary(const Hierarchy& h);

}  // namespace mlsvm
