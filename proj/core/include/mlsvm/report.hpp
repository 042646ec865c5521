#pragma once

#include "mlsvm/data.hpp"
#include "mlsvm/driver.hpp"
#include "mlsvm/metrics.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string_view>

namespace mlsvm {

/// Run reports have two sections: "report" is a pure function of data,
/// config and seed; "runtime" holds wall-clock timings and the thread count.

[[nodiscard]] nlohmann::json dataset_summary(const Dataset& d);
[[nodiscard]] nlohmann::json timings_to_json(const PhaseTimings& t, std::size_t points, std::size_t features);

/// `final_metrics` is the classifier scored on its own training data, if computed.
[[nodiscard]] nlohmann::json make_train_report(const TrainedClassifier& c, const Dataset& d,
                                               const std::optional<PerformanceReport>& final_metrics);

[[nodiscard]] nlohmann::json make_cv_report(const CrossValidationReport& cv, const Config& cfg, const Dataset& d,
                                            std::size_t folds, std::size_t repeats);

/// The report with the "runtime" section removed.
[[nodiscard]] nlohmann::json deterministic_part(const nlohmann::json& report);

}  // namespace mlsvm
