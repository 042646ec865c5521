#include "mlsvm/graph_cache.hpp"

#include "mlsvm/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace mlsvm {

namespace {

constexpr std::string_view kMagic = "MLSVM-KNN";
constexpr int kVersion = 1;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

}  // namespace

std::uint64_t knn_content_hash(const Matrix& points, std::size_t k) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const std::uint64_t shape[3] = {points.rows(), points.cols(), k};
    fnv_mix(h, shape, sizeof(shape));
    fnv_mix(h, points.data().data(), points.data().size() * sizeof(double));
    return h;
}

void write_graph_cache(const std::filesystem::path& path, const ProximityGraph& g, std::uint64_t hash) {
    std::ofstream out(path);
    if (!out) {
        throw Error(fmt::format("cannot write graph cache '{}'", path.string()));
    }
    std::string buffer = fmt::format("{} {}\nhash {:016x} nodes {} edges {}\n", kMagic, kVersion, hash,
                                     g.node_count(), g.edge_count());
    for (const auto& e : g.edges()) {
        fmt::format_to(std::back_inserter(buffer), "{} {} {}\n", e.u, e.v, e.weight);
    }
    out << buffer;
}

std::optional<ProximityGraph> read_graph_cache(const std::filesystem::path& path, std::uint64_t expected_hash) {
    std::ifstream in(path);
    if (!in) {
        return std::nullopt;
    }
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) {
        throw ParseError(fmt::format("'{}' is not a k-NN graph cache", path.string()));
    }
    if (version != kVersion) {
        throw ParseError(fmt::format("'{}': unsupported graph cache version {}", path.string(), version));
    }
    std::string key_hash, key_nodes, key_edges, hash_text;
    std::size_t nodes = 0, edge_total = 0;
    if (!(in >> key_hash >> hash_text >> key_nodes >> nodes >> key_edges >> edge_total) || key_hash != "hash" ||
        key_nodes != "nodes" || key_edges != "edges") {
        throw ParseError(fmt::format("'{}': malformed graph cache header", path.string()));
    }
    std::uint64_t stored = 0;
    const auto [ptr, ec] = std::from_chars(hash_text.data(), hash_text.data() + hash_text.size(), stored, 16);
    if (ec != std::errc{} || ptr != hash_text.data() + hash_text.size()) {
        throw ParseError(fmt::format("'{}': malformed content hash", path.string()));
    }
    if (stored != expected_hash) {
        return std::nullopt;
    }
    std::vector<WeightedEdge> edges;
    edges.reserve(edge_total);
    for (std::size_t e = 0; e < edge_total; ++e) {
        std::string u, v, w;
        if (!(in >> u >> v >> w)) {
            throw ParseError(fmt::format("'{}': truncated edge list", path.string()));
        }
        WeightedEdge edge{};
        auto parse = [&](const std::string& s, auto& value) {
            const auto [p, err] = std::from_chars(s.data(), s.data() + s.size(), value);
            if (err != std::errc{} || p != s.data() + s.size()) {
                throw ParseError(fmt::format("'{}': malformed edge '{} {} {}'", path.string(), u, v, w));
            }
        };
        parse(u, edge.u);
        parse(v, edge.v);
        parse(w, edge.weight);
        edges.push_back(edge);
    }
    return ProximityGraph(nodes, std::move(edges));
}

ProximityGraph cached_knn_graph(const Matrix& points, std::size_t k, const KnnOptions& options,
                                const std::filesystem::path& cache_dir) {
    if (cache_dir.empty()) {
        return build_knn_graph(points, k, options);
    }
    const std::uint64_t hash = knn_content_hash(points, k);
    const auto file = cache_dir / fmt::format("knn-{:016x}.txt", hash);
    if (auto cached = read_graph_cache(file, hash)) {
        return std::move(*cached);
    }
    auto g = build_knn_graph(points, k, options);
    std::filesystem::create_directories(cache_dir);
    write_graph_cache(file, g, hash);
    return g;
}

}  // namespace mlsvm
