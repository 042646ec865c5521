#pragma once

#include "mlsvm/coarsen.hpp"
#include "mlsvm/data.hpp"
#include "mlsvm/metrics.hpp"
#include "mlsvm/modelsel.hpp"
#include "mlsvm/refine.hpp"
#include "mlsvm/svm.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mlsvm {

/// Validation sets switch from the whole finest training set to a sample of
/// it above this many training points.
inline constexpr std::size_t kFullValidationLimit = 50'000;

struct Config {
    CoarseningParams coarsening{};
    std::size_t qt = 5000;
    std::size_t part_size = 1000;
    /// Unset: ff up to kFullValidationLimit training points, fs above.
    std::optional<ValidationStrategy> validation;
    double val_fraction = 0.1;
    std::size_t val_folds = 5;
    DisaggregationOptions disaggregation{};
    /// Graph neighbors added per support vector when uncoarsening IIS levels.
    std::size_t iis_neighbors = 2;
    /// Unset: gmean_then_sn at coarse levels, gmean at the finest.
    std::optional<MetricRule> rule;
    VotingRule voting = VotingRule::distance_weighted;
    WeightScheme weights = WeightScheme::per_point;
    SmoOptions smo{};
    std::uint64_t seed = 0;
    unsigned threads = 1;
    /// Allows parameters outside the recommended ranges.
    bool force = false;
    /// Directory of cached k-NN graphs; empty disables the cache.
    std::filesystem::path cache_dir;

    /// Throws InvalidArgument on values that are invalid, or outside the
    /// recommended ranges without `force`.
    void validate() const;
};

[[nodiscard]] nlohmann::json config_to_json(const Config& c);

struct PhaseTimings {
    double graph = 0.0;
    double coarsening = 0.0;
    double coarsest = 0.0;
    double refinement = 0.0;
    double other = 0.0;

    [[nodiscard]] double total() const noexcept { return graph + coarsening + coarsest + refinement + other; }
};

struct LevelRecord {
    std::size_t level = 0;
    std::size_t positive_size = 0;
    std::size_t negative_size = 0;
    std::size_t training_size = 0;
    ParamPoint params;
    bool ensemble = false;
    bool retrained = true;
    std::size_t models = 1;
    std::size_t support_vectors = 0;
    std::size_t trainings = 0;
    MetricRule rule = MetricRule::gmean;
    PerformanceReport validation;
    double seconds = 0.0;
};

struct TrainedClassifier {
    Predictor predictor;
    std::size_t chosen_level = 0;
    std::size_t depth = 1;
    /// In training order, coarsest first.
    std::vector<LevelRecord> levels;
    std::optional<Normalization> normalization;
    Config config;
    PhaseTimings timings;
    nlohmann::json hierarchy;
};

/// Where a set of dataset rows is used: "train" or "validate", at `level`.
using RowObserver = std::function<void(std::string_view use, std::size_t level, std::span<const std::size_t> rows)>;

/// Full multilevel training. `d` must not contain test data; features are
/// z-score normalized with statistics stored in the result. Throws
/// InvalidArgument when a class is empty or the config is invalid.
[[nodiscard]] TrainedClassifier mlsvm_train(const Dataset& d, const Config& cfg, const RowObserver& observer = {});

/// Builds the per-class k-NN graphs exactly as mlsvm_train would and stores
/// them in cfg.cache_dir. Returns the number of graphs written or refreshed.
std::size_t precompute_class_graphs(const Dataset& d, const Config& cfg);

struct Predictions {
    std::vector<int> labels;
    std::vector<double> decisions;
};

/// Applies the stored normalization, then the chosen model or ensemble.
[[nodiscard]] Predictions mlsvm_predict(const TrainedClassifier& c, const Matrix& points);

struct FoldResult {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    PerformanceReport test;
    std::size_t depth = 0;
    std::size_t chosen_level = 0;
    PhaseTimings timings;
};

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;
};

struct CrossValidationReport {
    std::vector<FoldResult> folds;
    MetricSummary sn, sp, gmean, acc, ppv, f1;
    MetricSummary depth;
};

/// k-fold stratified cross-validation repeated `repeats` times; repeat r
/// shuffles with seed cfg.seed + r. The test fold never reaches training or
/// validation. The observer receives rows of `d`.
[[nodiscard]] CrossValidationReport cross_validate(const Dataset& d, const Config& cfg, std::size_t k,
                                                   std::size_t repeats, const RowObserver& observer = {});

}  // namespace mlsvm
