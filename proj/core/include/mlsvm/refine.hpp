#pragma once

#include "mlsvm/coarsen.hpp"
#include "mlsvm/graph.hpp"
#include "mlsvm/matrix.hpp"
#include "mlsvm/modelsel.hpp"
#include "mlsvm/svm.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace mlsvm {

enum class Disaggregation { full, k_distant, sampled };
enum class VotingRule { distance_weighted, majority };

[[nodiscard]] std::optional<Disaggregation> parse_disaggregation(std::string_view name);
[[nodiscard]] std::optional<VotingRule> parse_voting_rule(std::string_view name);
[[nodiscard]] std::string_view to_string(Disaggregation mode);
[[nodiscard]] std::string_view to_string(VotingRule rule);

/// One model of an ensemble, trained on a positive part and a negative part.
struct EnsembleMember {
    SvmModel model;
    std::vector<double> positive_centroid;
    std::vector<double> negative_centroid;
    double positive_volume = 0.0;
    double negative_volume = 0.0;
    std::vector<double> midpoint;

    friend bool operator==(const EnsembleMember&, const EnsembleMember&) = default;
};

struct ModelEnsemble {
    std::vector<EnsembleMember> members;
    VotingRule rule = VotingRule::distance_weighted;

    friend bool operator==(const ModelEnsemble&, const ModelEnsemble&) = default;
};

/// A level's classifier: one model or an ensemble of pair models.
using Predictor = std::variant<SvmModel, ModelEnsemble>;

/// Volume-weighted point on the segment between two centroids.
[[nodiscard]] std::vector<double> weighted_midpoint(std::span<const double> ci, std::span<const double> cj,
                                                    double volume_i, double volume_j);

/// Vote in [-1, 1]. distance_weighted: sum_m l_m(t) / d(t, x_m) normalized by
/// sum_m 1 / d(t, x_m), where an exact hit on a midpoint returns that model's
/// label. majority: mean of the labels. Throws InvalidArgument when empty.
[[nodiscard]] double ensemble_vote(const ModelEnsemble& e, std::span<const double> t, VotingRule rule);
[[nodiscard]] int ensemble_predict(const ModelEnsemble& e, std::span<const double> t, VotingRule rule);

[[nodiscard]] double predictor_decision(const Predictor& p, std::span<const double> t);
[[nodiscard]] int predictor_label(const Predictor& p, std::span<const double> t);
[[nodiscard]] std::size_t support_vector_count(const Predictor& p);

/// Fine nodes of `support` plus, for each, its h strongest-weight (nearest)
/// graph neighbors. Sorted, without duplicates.
[[nodiscard]] std::vector<std::size_t> uncoarsen_iis(std::span<const std::size_t> support, const ProximityGraph& fine,
                                                     std::size_t h);

inline constexpr std::size_t kMaxNeighborDistance = 2;

struct DisaggregationOptions {
    Disaggregation mode = Disaggregation::full;
    /// Graph hops added around the aggregates in k_distant mode (1 or 2).
    std::size_t distance = 1;
    /// Fine points kept per aggregate in sampled mode, seed included.
    std::size_t budget = 4;
};

/// Fine nodes covered by the aggregates (columns of P) listed in `support`.
/// Sorted, without duplicates. `fine` is only read in k_distant mode.
[[nodiscard]] std::vector<std::size_t> uncoarsen_amg(std::span<const std::size_t> support, const InterpolationMatrix& p,
                                                     const DisaggregationOptions& options,
                                                     const ProximityGraph* fine = nullptr);

/// Per-class training set of one level: points, volumes and the induced graph.
struct ClassSet {
    Matrix points;
    std::vector<double> volumes;
    ProximityGraph graph;
    /// Class-local index of each row at this level.
    std::vector<std::size_t> level_index;

    [[nodiscard]] std::size_t size() const noexcept { return points.rows(); }
};

struct ValidationContext {
    ValidationStrategy strategy = ValidationStrategy::ff;
    double fraction = 0.1;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    const TrainingData* finest = nullptr;
};

struct RefineOptions {
    /// Training sets of at least this size are partitioned.
    std::size_t qt = 5000;
    /// Target points per part when partitioning.
    std::size_t part_size = 1000;
    MetricRule rule = MetricRule::gmean;
    VotingRule voting = VotingRule::distance_weighted;
    TrainingOptions training{};
    ValidationContext validation{};
    std::uint64_t seed = 0;
};

struct LevelOutcome {
    Predictor predictor;
    ParamPoint params;
    bool ensemble = false;
    bool retrained = true;
    std::size_t trainings = 0;
    PerformanceReport validation;
    /// Class-local indices at this level of every model's support vectors.
    std::vector<std::size_t> positive_support;
    std::vector<std::size_t> negative_support;
};

/// Pairs each part with its nearest opposite-class part by centroid distance
/// in both directions; duplicates removed, sorted as (positive, negative).
[[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> nearest_part_pairs(const Matrix& positive_centroids,
                                                                                  const Matrix& negative_centroids);

/// Parts used for a class of `size` points: round(size / part_size), at
/// least 2, at most size.
[[nodiscard]] std::size_t part_count(std::size_t size, std::size_t part_size);

/// Small training sets (< qt) rerun the second search stage around
/// `inherited`; larger ones are partitioned per class and every nearest part
/// pair is trained once with `inherited`. A set missing a class keeps
/// `fallback` untrained.
[[nodiscard]] LevelOutcome refine_level(const ClassSet& positive, const ClassSet& negative, const ParamPoint& inherited,
                                        const Predictor& fallback, const RefineOptions& options);

}  // namespace mlsvm
