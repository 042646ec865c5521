#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>

namespace mlsvm {

/// Confusion counts and derived rates. Ratios with a zero denominator are
/// reported as 0 and set `undefined_ratio`.
struct PerformanceReport {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double sn = 0.0;
    double sp = 0.0;
    double gmean = 0.0;
    double acc = 0.0;
    double ppv = 0.0;
    double f1 = 0.0;
    bool undefined_ratio = false;
    double seconds = 0.0;
    std::size_t level = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tp + tn + fp + fn; }
};

[[nodiscard]] PerformanceReport metrics_from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn);

/// Throws InvalidArgument when lengths differ or are zero.
[[nodiscard]] PerformanceReport compute_metrics(std::span<const int> predicted, std::span<const int> truth);

void to_json(nlohmann::json& j, const PerformanceReport& r);

}  // namespace mlsvm
