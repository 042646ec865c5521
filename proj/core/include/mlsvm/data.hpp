#pragma once

#include "mlsvm/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mlsvm {

/// Per-feature z-score statistics. Features with zero spread keep stddev 0
/// and map to 0 when applied.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;

    void apply(std::span<double> point) const;
    void apply(Matrix& points) const;

    friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Labeled samples. Label +1 is the minority (positive) class, -1 the majority.
struct Dataset {
    Matrix points;
    std::vector<int> labels;
    std::optional<Normalization> normalization;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    [[nodiscard]] std::size_t dims() const noexcept { return points.cols(); }
    [[nodiscard]] std::size_t count(int label) const noexcept;
    [[nodiscard]] std::vector<std::size_t> indices_of(int label) const;
    [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const;

    /// Throws InvalidArgument when labels are not +-1 or shapes disagree.
    void validate() const;
};

[[nodiscard]] Dataset load_csv(const std::filesystem::path& path, int label_column, bool has_header);
void write_csv(const Dataset& data, const std::filesystem::path& path, bool header = true);

/// Fits population-stddev z-score statistics on `points`.
[[nodiscard]] Normalization fit_zscore(const Matrix& points);

/// Returns `d` with normalized features and the fitted statistics attached.
[[nodiscard]] Dataset zscore_normalize(const Dataset& d);

struct FoldAssignment {
    std::vector<std::size_t> fold_of;
    std::size_t k = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<std::size_t> test_indices(std::size_t fold) const;
    [[nodiscard]] std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Stratified assignment: each class is shuffled and dealt round-robin into k folds.
[[nodiscard]] FoldAssignment kfold_split(const Dataset& d, std::size_t k, std::uint64_t seed);
[[nodiscard]] FoldAssignment kfold_split(std::span<const int> labels, std::size_t k, std::uint64_t seed);

enum class SyntheticKind { twonorm, ringnorm };

[[nodiscard]] std::optional<SyntheticKind> parse_synthetic_kind(std::string_view name);

/// Breiman's twonorm/ringnorm in 20 dimensions. Class sizes follow the
/// 3703:3697 (twonorm) and 3664:3736 (ringnorm) proportions.
[[nodiscard]] Dataset gen_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed);

/// Two isotropic unit Gaussians: majority centred at 0, minority shifted by
/// `separation` along the diagonal. Minority labels are +1.
[[nodiscard]] Dataset gen_gaussian_mixture(std::size_t n, double minority_fraction, std::size_t dims,
                                           double separation, std::uint64_t seed);

}  // namespace mlsvm
