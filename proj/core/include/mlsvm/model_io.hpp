#pragma once

#include "mlsvm/driver.hpp"

#include <filesystem>
#include <iosfwd>

namespace mlsvm {

inline constexpr std::string_view kModelMagic = "MLSVM1";

/// Versioned text format: the magic line, mode single|ensemble, feature count,
/// normalization statistics, then per model its gamma, C, W+, W-, bias and
/// support vectors (alpha_y followed by the features, one per line).
/// Ensemble models carry their pair centroids, volumes and midpoint.
/// Numbers use shortest round-trip notation, so a reloaded classifier
/// reproduces decision values exactly.
void write_classifier(std::ostream& out, const TrainedClassifier& c);
void save_classifier(const std::filesystem::path& path, const TrainedClassifier& c);

/// Restores predictor, normalization and chosen level. Throws ParseError on
/// an unknown version or malformed content.
[[nodiscard]] TrainedClassifier read_classifier(std::istream& in);
[[nodiscard]] TrainedClassifier load_classifier(const std::filesystem::path& path);

}  // namespace mlsvm
