#pragma once

#include "mlsvm/matrix.hpp"
#include "mlsvm/metrics.hpp"
#include "mlsvm/svm.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mlsvm {

/// Hyperparameters in log2 units.
struct ParamPoint {
    double log2_c = 0.0;
    double log2_gamma = 0.0;

    [[nodiscard]] double C() const noexcept { return std::exp2(log2_c); }
    [[nodiscard]] double gamma() const noexcept { return std::exp2(log2_gamma); }

    friend bool operator==(const ParamPoint&, const ParamPoint&) = default;
};

struct ParamBox {
    double c_low = -10.0;
    double c_high = 10.0;
    double gamma_low = -10.0;
    double gamma_high = 10.0;

    [[nodiscard]] bool contains(const ParamPoint& p) const noexcept {
        return p.log2_c >= c_low && p.log2_c <= c_high && p.log2_gamma >= gamma_low && p.log2_gamma <= gamma_high;
    }
};

inline constexpr ParamBox kSearchBounds{};
inline constexpr std::size_t kFirstStagePoints = 9;
inline constexpr std::size_t kSecondStagePoints = 13;
inline constexpr double kSecondStageHalfWidth = 2.0;

/// Golden-ratio lattice: point t of m is ((t + 0.5) / m, frac(t * 0.6180339887))
/// mapped affinely onto the box.
[[nodiscard]] std::vector<ParamPoint> uniform_design(std::size_t count, const ParamBox& box);

/// Box of the given half-width around `center`, clamped to `bounds`.
[[nodiscard]] ParamBox refinement_box(const ParamPoint& center, double half_width = kSecondStageHalfWidth,
                                      const ParamBox& bounds = kSearchBounds);

enum class MetricRule { gmean, gmean_then_sn, acc };
enum class ValidationStrategy { cs, cckf, ff, fs };

[[nodiscard]] std::optional<MetricRule> parse_metric_rule(std::string_view name);
[[nodiscard]] std::optional<ValidationStrategy> parse_validation_strategy(std::string_view name);
[[nodiscard]] std::string_view to_string(MetricRule rule);
[[nodiscard]] std::string_view to_string(ValidationStrategy strategy);

/// Labeled points with volumes (empty volumes mean all ones) and caller
/// ids carried through subsetting (empty ids mean row positions).
struct TrainingData {
    Matrix points;
    std::vector<int> labels;
    std::vector<double> volumes;
    std::vector<std::size_t> ids;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    [[nodiscard]] std::size_t count(int label) const noexcept;
    [[nodiscard]] std::vector<double> volumes_or_ones() const;
    [[nodiscard]] std::size_t id(std::size_t row) const noexcept { return ids.empty() ? row : ids[row]; }
    [[nodiscard]] TrainingData subset(std::span<const std::size_t> rows) const;
};

struct ValidationSplit {
    TrainingData train;
    TrainingData validate;
};

/// One split for CS, FF and FS; one split per fold for CCkF.
struct ValidationPlan {
    ValidationStrategy strategy = ValidationStrategy::ff;
    std::vector<ValidationSplit> splits;
    /// Data the final CCkF model is retrained on.
    TrainingData full;
};

/// CS holds out `fraction` of each class of the level data; CCkF deals the
/// level data into `folds` stratified folds; FF validates on the whole finest
/// training set; FS on a `fraction` sample of it per class. Throws
/// InvalidArgument when CS/CCkF have fewer than two points in a class.
[[nodiscard]] ValidationPlan make_validation_set(ValidationStrategy strategy, const TrainingData& level_data,
                                                 const TrainingData& finest_train, double fraction, std::size_t folds,
                                                 std::uint64_t seed);

struct TrainingOptions {
    WeightScheme weights = WeightScheme::per_point;
    SmoOptions smo{};
    unsigned threads = 1;
};

struct TrainedSvm {
    SvmModel model;
    /// ids (see TrainingData::id) of the support vectors, ascending.
    std::vector<std::size_t> support_ids;
};

/// Weighted SVM on `data` with bounds C * W_i, W rescaled to mean 1.
[[nodiscard]] TrainedSvm train_svm(const TrainingData& data, const ParamPoint& params, const TrainingOptions& options);

/// Predicted labels of `model` on `data`, scored.
[[nodiscard]] PerformanceReport evaluate(const SvmModel& model, const TrainingData& data);

struct NudCandidate {
    ParamPoint params;
    PerformanceReport report;
    std::size_t support_vectors = 0;
};

struct NudResult {
    ParamPoint best;
    SvmModel model;
    std::vector<std::size_t> support_ids;
    PerformanceReport report;
    std::size_t trainings = 0;
    bool accuracy_fallback = false;
    std::vector<NudCandidate> evaluated;
};

/// Nested uniform design: a 9-point first stage over the full box (skipped
/// when `center` is given) and a 13-point second stage around the first-stage
/// winner or the center. The best of all evaluated points wins.
[[nodiscard]] NudResult nud_search(const ValidationPlan& plan, const std::optional<ParamPoint>& center,
                                   MetricRule rule, const TrainingOptions& options);

struct ModelCandidate {
    PerformanceReport report;
    std::size_t support_vectors = 0;
    std::size_t level = 0;
};

/// True when `a` ranks strictly above `b`: objective first, then SN (for
/// gmean_then_sn), then fewer support vectors, then the coarser level.
[[nodiscard]] bool ranks_above(const ModelCandidate& a, const ModelCandidate& b, MetricRule rule);

/// Index of the best candidate. Throws InvalidArgument on an empty list.
[[nodiscard]] std::size_t select_best(std::span<const ModelCandidate> candidates, MetricRule rule);

}  // namespace mlsvm
