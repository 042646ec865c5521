#include "mlsvm/partition.hpp"

#include "mlsvm/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

namespace mlsvm {

namespace {

constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kRefinementPasses = 8;

std::vector<std::size_t> farthest_point_seeds(const Matrix& points, std::size_t parts, std::uint64_t seed) {
    const std::size_t n = points.rows();
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> seeds{static_cast<std::size_t>(rng() % n)};
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (seeds.size() < parts) {
        const auto last = points.row(seeds.back());
        std::size_t next = kUnassigned;
        double far = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points.row(i), last));
            if (nearest[i] > far) {
                far = nearest[i];
                next = i;
            }
        }
        if (far <= 0.0) {
            // duplicates everywhere: take the first node not yet used
            next = 0;
            while (std::find(seeds.begin(), seeds.end(), next) != seeds.end()) {
                ++next;
            }
        }
        seeds.push_back(next);
    }
    return seeds;
}

void grow_regions(const ProximityGraph& g, const std::vector<std::size_t>& seeds, std::size_t cap,
                  std::vector<std::size_t>& part_of, std::vector<std::size_t>& sizes) {
    const std::size_t parts = seeds.size();
    std::vector<std::deque<std::size_t>> frontier(parts);
    for (std::size_t p = 0; p < parts; ++p) {
        part_of[seeds[p]] = p;
        sizes[p] = 1;
        for (const auto& nb : g.neighbors(seeds[p])) {
            frontier[p].push_back(nb.node);
        }
    }
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t p = 0; p < parts; ++p) {
            if (sizes[p] >= cap) {
                continue;
            }
            while (!frontier[p].empty()) {
                const std::size_t v = frontier[p].front();
                frontier[p].pop_front();
                if (part_of[v] != kUnassigned) {
                    continue;
                }
                part_of[v] = p;
                ++sizes[p];
                for (const auto& nb : g.neighbors(v)) {
                    if (part_of[nb.node] == kUnassigned) {
                        frontier[p].push_back(nb.node);
                    }
                }
                progress = true;
                break;
            }
        }
    }
}

Matrix part_centroids(const Matrix& points, std::span<const double> volumes, const std::vector<std::size_t>& part_of,
                      std::size_t parts, std::vector<double>& part_volume) {
    Matrix centroids(parts, points.cols());
    part_volume.assign(parts, 0.0);
    for (std::size_t i = 0; i < part_of.size(); ++i) {
        if (part_of[i] == kUnassigned) {
            continue;
        }
        const auto row = points.row(i);
        auto c = centroids.row(part_of[i]);
        for (std::size_t d = 0; d < row.size(); ++d) {
            c[d] += volumes[i] * row[d];
        }
        part_volume[part_of[i]] += volumes[i];
    }
    for (std::size_t p = 0; p < parts; ++p) {
        if (part_volume[p] > 0.0) {
            for (auto& x : centroids.row(p)) {
                x /= part_volume[p];
            }
        }
    }
    return centroids;
}

void place_leftovers(const Matrix& points, std::span<const double> volumes, std::size_t cap,
                     std::vector<std::size_t>& part_of, std::vector<std::size_t>& sizes) {
    const std::size_t parts = sizes.size();
    std::vector<double> part_volume;
    const Matrix centroids = part_centroids(points, volumes, part_of, parts, part_volume);
    for (std::size_t i = 0; i < part_of.size(); ++i) {
        if (part_of[i] != kUnassigned) {
            continue;
        }
        std::size_t best = kUnassigned;
        double best_distance = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < parts; ++p) {
            if (sizes[p] >= cap) {
                continue;
            }
            const double dist = squared_distance(points.row(i), centroids.row(p));
            if (dist < best_distance) {
                best_distance = dist;
                best = p;
            }
        }
        part_of[i] = best;
        ++sizes[best];
    }
}

}  // namespace

std::vector<std::size_t> Partitioning::members(std::size_t part) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < part_of.size(); ++i) {
        if (part_of[i] == part) {
            out.push_back(i);
        }
    }
    return out;
}

std::size_t Partitioning::size_limit(std::size_t n, std::size_t parts) noexcept {
    const std::size_t cap = (n + parts - 1) / parts;
    return std::max(cap, static_cast<std::size_t>(std::floor((1.0 + kBalanceTolerance) * static_cast<double>(cap))));
}

void refine_partition(const ProximityGraph& g, std::size_t limit, std::vector<std::size_t>& part_of,
                      std::vector<std::size_t>& sizes) {
    if (part_of.size() != g.node_count()) {
        throw InvalidArgument("partition and graph differ in size");
    }
    std::vector<double> link(sizes.size(), 0.0);
    std::vector<std::size_t> touched;
    for (std::size_t pass = 0; pass < kRefinementPasses; ++pass) {
        bool moved = false;
        for (std::size_t v = 0; v < part_of.size(); ++v) {
            const std::size_t own = part_of[v];
            if (sizes[own] <= 1) {
                continue;
            }
            touched.clear();
            for (const auto& nb : g.neighbors(v)) {
                const std::size_t p = part_of[nb.node];
                if (link[p] == 0.0) {
                    touched.push_back(p);
                }
                link[p] += nb.weight;
            }
            std::sort(touched.begin(), touched.end());
            std::size_t target = own;
            double gain = 0.0;
            for (const auto p : touched) {
                if (p == own || sizes[p] + 1 > limit) {
                    continue;
                }
                const double delta = link[p] - link[own];
                if (delta > gain) {
                    gain = delta;
                    target = p;
                }
            }
            for (const auto p : touched) {
                link[p] = 0.0;
            }
            link[own] = 0.0;
            if (target != own) {
                part_of[v] = target;
                --sizes[own];
                ++sizes[target];
                moved = true;
            }
        }
        if (!moved) {
            break;
        }
    }
}

double edge_cut(const ProximityGraph& g, const std::vector<std::size_t>& part_of) {
    double cut = 0.0;
    for (const auto& e : g.edges()) {
        if (part_of[e.u] != part_of[e.v]) {
            cut += e.weight;
        }
    }
    return cut;
}

Partitioning partition_graph(const ProximityGraph& g, const Matrix& points, std::size_t parts, std::uint64_t seed) {
    const std::size_t n = points.rows();
    if (g.node_count() != n) {
        throw InvalidArgument(fmt::format("graph has {} nodes but there are {} points", g.node_count(), n));
    }
    if (parts == 0 || parts > n) {
        throw InvalidArgument(fmt::format("cannot split {} nodes into {} parts", n, parts));
    }
    const std::size_t cap = (n + parts - 1) / parts;
    std::vector<std::size_t> part_of(n, kUnassigned);
    std::vector<std::size_t> sizes(parts, 0);

    grow_regions(g, farthest_point_seeds(points, parts, seed), cap, part_of, sizes);
    place_leftovers(points, g.volumes(), cap, part_of, sizes);
    refine_partition(g, Partitioning::size_limit(n, parts), part_of, sizes);

    Partitioning out;
    out.parts = parts;
    out.sizes = sizes;
    out.centroids = part_centroids(points, g.volumes(), part_of, parts, out.volumes);
    out.part_of = std::move(part_of);
    return out;
}

}  // namespace mlsvm
