#include "mlsvm/coarsen.hpp"

#include "mlsvm/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mlsvm {

InterpolationMatrix::InterpolationMatrix(std::vector<std::vector<Entry>> rows, std::vector<std::size_t> seeds)
    : seeds_(std::move(seeds)) {
    const std::size_t n = rows.size();
    const std::size_t m = seeds_.size();
    row_offsets_.assign(n + 1, 0);
    std::vector<std::size_t> column_count(m, 0);
    for (std::size_t i = 0; i < n; ++i) {
        row_offsets_[i + 1] = row_offsets_[i] + rows[i].size();
        for (const auto& e : rows[i]) {
            if (e.column >= m) {
                throw InvalidArgument("interpolation entry refers to a missing column");
            }
            ++column_count[e.column];
        }
    }
    entries_.reserve(row_offsets_.back());
    for (auto& r : rows) {
        std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.column < b.column; });
        entries_.insert(entries_.end(), r.begin(), r.end());
    }
    column_offsets_.assign(m + 1, 0);
    for (std::size_t q = 0; q < m; ++q) {
        column_offsets_[q + 1] = column_offsets_[q] + column_count[q];
    }
    column_entries_.resize(column_offsets_.back());
    std::vector<std::size_t> cursor(column_offsets_.begin(), column_offsets_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : row(i)) {
            column_entries_[cursor[e.column]++] = {i, e.value};
        }
    }
}

InterpolationMatrix InterpolationMatrix::identity(std::size_t n) {
    std::vector<std::vector<Entry>> rows(n);
    std::vector<std::size_t> seeds(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i] = {{i, 1.0}};
        seeds[i] = i;
    }
    return {std::move(rows), std::move(seeds)};
}

double InterpolationMatrix::at(std::size_t i, std::size_t q) const noexcept {
    for (const auto& e : row(i)) {
        if (e.column == q) {
            return e.value;
        }
    }
    return 0.0;
}

namespace {

std::vector<double> weighted_degrees(const ProximityGraph& g) {
    std::vector<double> deg(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        deg[i] = g.weighted_degree(i);
    }
    return deg;
}

/// Future volumes where only nodes with include[j] contribute to their neighbors.
std::vector<double> future_volumes_over(const ProximityGraph& g, const std::vector<double>& degree,
                                        const std::vector<char>& include) {
    const auto v = g.volumes();
    std::vector<double> result(v.begin(), v.end());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        for (const auto& nb : g.neighbors(i)) {
            const std::size_t j = nb.node;
            if (include[j] && degree[j] > 0.0) {
                result[i] += v[j] * nb.weight / degree[j];
            }
        }
    }
    return result;
}

}  // namespace

std::vector<double> future_volumes(const ProximityGraph& g) {
    return future_volumes_over(g, weighted_degrees(g), std::vector<char>(g.node_count(), 1));
}

SeedSelection select_seeds(const ProximityGraph& g, std::span<const double> future_volume, double Q, double eta) {
    const std::size_t n = g.node_count();
    if (future_volume.size() != n) {
        throw InvalidArgument("future volume count differs from node count");
    }
    SeedSelection out;
    if (n == 0) {
        return out;
    }
    const double mean = std::accumulate(future_volume.begin(), future_volume.end(), 0.0) / static_cast<double>(n);
    std::vector<char> seed(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        seed[i] = future_volume[i] > eta * mean ? 1 : 0;
    }

    const auto degree = weighted_degrees(g);
    std::vector<char> in_f(n);
    for (std::size_t i = 0; i < n; ++i) {
        in_f[i] = seed[i] ? 0 : 1;
    }
    const auto recomputed = future_volumes_over(g, degree, in_f);

    std::vector<double> seed_coupling(n, 0.0);
    auto promote = [&](std::size_t i) {
        seed[i] = 1;
        for (const auto& nb : g.neighbors(i)) {
            seed_coupling[nb.node] += nb.weight;
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (seed[i]) {
            seed[i] = 0;
            promote(i);
        }
    }

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seed[i]) {
            order.push_back(i);
        }
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (recomputed[a] != recomputed[b]) {
            return recomputed[a] > recomputed[b];
        }
        return a < b;
    });
    for (const auto i : order) {
        const double ratio = degree[i] > 0.0 ? seed_coupling[i] / degree[i] : 0.0;
        if (ratio <= Q) {
            promote(i);
        }
    }

    if (std::none_of(seed.begin(), seed.end(), [](char s) { return s != 0; })) {
        const auto top = std::max_element(future_volume.begin(), future_volume.end());
        seed[static_cast<std::size_t>(top - future_volume.begin())] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        (seed[i] ? out.seeds : out.non_seeds).push_back(i);
    }
    return out;
}

InterpolationMatrix build_interpolation(const ProximityGraph& g, std::span<const std::size_t> seeds,
                                        std::size_t caliber) {
    const std::size_t n = g.node_count();
    if (seeds.empty() && n > 0) {
        throw InvalidArgument("interpolation needs at least one seed");
    }
    if (caliber == 0) {
        throw InvalidArgument("interpolation caliber must be at least 1");
    }
    std::vector<char> is_seed(n, 0);
    for (const auto s : seeds) {
        is_seed.at(s) = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (is_seed[i]) {
            continue;
        }
        const auto nbrs = g.neighbors(i);
        const bool has_seed_neighbor =
            std::any_of(nbrs.begin(), nbrs.end(), [&](const Neighbor& nb) { return is_seed[nb.node] == 1; });
        if (!has_seed_neighbor) {
            is_seed[i] = 2;  // promoted
        }
    }

    std::vector<std::size_t> column_of(n, n);
    std::vector<std::size_t> final_seeds;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_seed[i]) {
            column_of[i] = final_seeds.size();
            final_seeds.push_back(i);
        }
    }

    std::vector<std::vector<InterpolationMatrix::Entry>> rows(n);
    std::vector<Neighbor> seed_neighbors;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_seed[i]) {
            rows[i] = {{column_of[i], 1.0}};
            continue;
        }
        seed_neighbors.clear();
        for (const auto& nb : g.neighbors(i)) {
            if (is_seed[nb.node]) {
                seed_neighbors.push_back(nb);
            }
        }
        std::sort(seed_neighbors.begin(), seed_neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
            return a.weight != b.weight ? a.weight > b.weight : a.node < b.node;
        });
        if (seed_neighbors.size() > caliber) {
            seed_neighbors.resize(caliber);
        }
        double total = 0.0;
        for (const auto& nb : seed_neighbors) {
            total += nb.weight;
        }
        for (const auto& nb : seed_neighbors) {
            rows[i].push_back({column_of[nb.node], nb.weight / total});
        }
    }
    return {std::move(rows), std::move(final_seeds)};
}

std::vector<WeightedEdge> galerkin_edges(const ProximityGraph& g, const InterpolationMatrix& p) {
    std::vector<WeightedEdge> contributions;
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        for (const auto& nb : g.neighbors(k)) {
            for (const auto& a : p.row(k)) {
                for (const auto& b : p.row(nb.node)) {
                    if (a.column < b.column) {
                        contributions.push_back({a.column, b.column, a.value * nb.weight * b.value});
                    }
                }
            }
        }
    }
    std::sort(contributions.begin(), contributions.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
        if (x.u != y.u) {
            return x.u < y.u;
        }
        if (x.v != y.v) {
            return x.v < y.v;
        }
        return x.weight < y.weight;
    });
    std::vector<WeightedEdge> merged;
    for (const auto& c : contributions) {
        if (!merged.empty() && merged.back().u == c.u && merged.back().v == c.v) {
            merged.back().weight += c.weight;
        } else {
            merged.push_back(c);
        }
    }
    std::erase_if(merged, [](const WeightedEdge& e) { return !(e.weight > 0.0); });
    return merged;
}

ClassLevel coarsen_amg(const ClassLevel& fine, const CoarseningParams& params) {
    const ProximityGraph& g = fine.graph;
    const std::size_t n = g.node_count();
    const auto theta = future_volumes(g);
    const auto selection = select_seeds(g, theta, params.Q, params.eta);
    InterpolationMatrix p = build_interpolation(g, selection.seeds, params.caliber);
    const std::size_t m = p.cols();
    if (m >= n) {
        throw CoarseningStagnation(fmt::format("AMG coarsening kept {} of {} points", m, n));
    }

    const auto v = g.volumes();
    std::vector<double> coarse_volume(m, 0.0);
    const std::size_t d = fine.points.cols();
    Matrix coarse_points(m, d);
    for (std::size_t q = 0; q < m; ++q) {
        auto x = coarse_points.row(q);
        for (const auto& [i, value] : p.column(q)) {
            const double mass = v[i] * value;
            coarse_volume[q] += mass;
            if (params.mode != CoarseningMode::sparse_amg) {
                const auto xi = fine.points.row(i);
                for (std::size_t j = 0; j < d; ++j) {
                    x[j] += mass * xi[j];
                }
            }
        }
        if (params.mode == CoarseningMode::sparse_amg) {
            const auto seed_point = fine.points.row(p.seed(q));
            std::copy(seed_point.begin(), seed_point.end(), x.begin());
        } else {
            for (auto& value : x) {
                value /= coarse_volume[q];
            }
        }
    }

    ProximityGraph coarse_graph(m, galerkin_edges(g, p), coarse_volume);
    ClassLevel coarse;
    coarse.points = std::move(coarse_points);
    coarse.graph = filter_weak_edges(coarse_graph, params.theta);
    coarse.finer_index.assign(p.seeds().begin(), p.seeds().end());
    coarse.interpolation = std::move(p);
    return coarse;
}

std::vector<std::size_t> iis_select(const ProximityGraph& g, double Q, const IisOrder& order) {
    const std::size_t n = g.node_count();
    const auto budget = static_cast<std::size_t>(std::ceil(Q * static_cast<double>(n) - 1e-12));
    std::vector<char> selected(n, 0);
    std::vector<std::size_t> remaining(n);
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});
    std::vector<std::size_t> result;
    std::vector<char> blocked(n, 0);

    while (!remaining.empty() && result.size() < budget) {
        std::fill(blocked.begin(), blocked.end(), 0);
        std::vector<std::size_t> pass;
        for (const auto i : order(remaining)) {
            if (blocked[i] || selected[i]) {
                continue;
            }
            pass.push_back(i);
            blocked[i] = 1;
            for (const auto& nb : g.neighbors(i)) {
                blocked[nb.node] = 1;
            }
        }
        if (result.size() + pass.size() > budget) {
            if (!result.empty()) {
                break;
            }
            pass.resize(budget);
        }
        for (const auto i : pass) {
            selected[i] = 1;
            result.push_back(i);
        }
        std::erase_if(remaining, [&](std::size_t i) { return selected[i] != 0; });
    }
    std::sort(result.begin(), result.end());
    return result;
}

std::vector<std::size_t> iis_select(const ProximityGraph& g, double Q, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return iis_select(g, Q, [&rng](std::span<const std::size_t> remaining) {
        std::vector<std::size_t> order(remaining.begin(), remaining.end());
        std::shuffle(order.begin(), order.end(), rng);
        return order;
    });
}

ClassLevel coarsen_iis(const ClassLevel& fine, const CoarseningParams& params, std::uint64_t seed) {
    auto chosen = iis_select(fine.graph, params.Q, seed);
    if (chosen.size() >= fine.size()) {
        throw CoarseningStagnation(fmt::format("IIS coarsening kept {} of {} points", chosen.size(), fine.size()));
    }
    ClassLevel coarse;
    coarse.points = fine.points.select_rows(chosen);
    std::vector<double> volumes;
    volumes.reserve(chosen.size());
    for (const auto i : chosen) {
        volumes.push_back(fine.graph.volumes()[i]);
    }
    std::vector<WeightedEdge> edges;
    if (chosen.size() >= 2) {
        const std::size_t k = std::min(params.k_nn, chosen.size() - 1);
        edges = build_knn_graph(coarse.points, k, params.knn).edges();
    }
    coarse.graph = ProximityGraph(chosen.size(), std::move(edges), std::move(volumes));
    coarse.finer_index = std::move(chosen);
    return coarse;
}

namespace {

ClassLevel copy_level(const ClassLevel& fine) {
    ClassLevel copy;
    copy.points = fine.points;
    copy.graph = fine.graph;
    copy.interpolation = InterpolationMatrix::identity(fine.size());
    copy.finer_index.resize(fine.size());
    std::iota(copy.finer_index.begin(), copy.finer_index.end(), std::size_t{0});
    copy.copied_from_finer = true;
    return copy;
}

ClassLevel coarsen_class(const ClassLevel& fine, const CoarseningParams& params, std::uint64_t seed) {
    if (params.mode == CoarseningMode::iis) {
        return coarsen_iis(fine, params, seed);
    }
    return coarsen_amg(fine, params);
}

}  // namespace

Hierarchy build_hierarchy(const Dataset& d, ProximityGraph positive_graph, ProximityGraph negative_graph,
                          const CoarseningParams& params) {
    if (params.max_positive == 0 || params.max_negative == 0 || params.coarsest_size == 0) {
        throw InvalidArgument("class limits and coarsest size must be positive");
    }
    Hierarchy h;
    h.positive_rows = d.indices_of(1);
    h.negative_rows = d.indices_of(-1);
    if (positive_graph.node_count() != h.positive_rows.size() ||
        negative_graph.node_count() != h.negative_rows.size()) {
        throw InvalidArgument("class graph sizes do not match the dataset");
    }

    Level finest;
    finest.positive.points = d.points.select_rows(h.positive_rows);
    finest.positive.graph = std::move(positive_graph);
    finest.negative.points = d.points.select_rows(h.negative_rows);
    finest.negative.graph = std::move(negative_graph);
    h.levels.push_back(std::move(finest));

    constexpr std::size_t max_depth = 64;
    while (h.levels.size() < max_depth) {
        const Level& current = h.levels.back();
        const bool positive_small = current.positive.size() <= params.max_positive;
        const bool negative_small = current.negative.size() <= params.max_negative;
        if (current.size() <= params.coarsest_size || (positive_small && negative_small)) {
            break;
        }
        const std::uint64_t level_seed = params.seed + 0x9e3779b97f4a7c15ULL * h.levels.size();
        Level next;
        next.positive = positive_small ? copy_level(current.positive)
                                       : coarsen_class(current.positive, params, level_seed);
        next.negative = negative_small ? copy_level(current.negative)
                                       : coarsen_class(current.negative, params, level_seed + 1);
        h.levels.push_back(std::move(next));
    }
    return h;
}

nlohmann::json hierarchy_summary(const Hierarchy& h) {
    auto describe = [](const ClassLevel& c) {
        return nlohmann::json{{"size", c.size()},
                              {"volume", c.graph.total_volume()},
                              {"edges", c.graph.edge_count()},
                              {"copied_from_finer", c.copied_from_finer}};
    };
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t i = 0; i < h.levels.size(); ++i) {
        levels.push_back({{"level", i},
                          {"positive", describe(h.levels[i].positive)},
                          {"negative", describe(h.levels[i].negative)}});
    }
    return {{"depth", h.depth()}, {"levels", std::move(levels)}};
}

}  // namespace mlsvm
