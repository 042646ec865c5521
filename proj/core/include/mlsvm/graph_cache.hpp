#pragma once

#include "mlsvm/graph.hpp"
#include "mlsvm/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace mlsvm {

/// FNV-1a over the shape, the raw feature bytes and k.
[[nodiscard]] std::uint64_t knn_content_hash(const Matrix& points, std::size_t k);

/// Text listing: header `MLSVM-KNN 1`, then `hash <hex> nodes <n> edges <m>`,
/// then one `i j w` line per undirected edge with round-trip precision.
void write_graph_cache(const std::filesystem::path& path, const ProximityGraph& g, std::uint64_t hash);

/// Returns nullopt if the file is missing or was built from other content.
/// Throws ParseError on an unknown version or malformed body.
[[nodiscard]] std::optional<ProximityGraph> read_graph_cache(const std::filesystem::path& path,
                                                             std::uint64_t expected_hash);

/// Graph for `points`, served from `cache_dir` when a matching entry exists and
/// stored there otherwise. An empty cache_dir disables caching.
[[nodiscard]] ProximityGraph cached_knn_graph(const Matrix& points, std::size_t k, const KnnOptions& options,
                                              const std::filesystem::path& cache_dir);

}  // namespace mlsvm
