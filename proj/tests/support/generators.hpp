#pragma once

#include "mlsvm/data.hpp"
#include "mlsvm/graph.hpp"
#include "mlsvm/matrix.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace mlsvm::testing {

/// Uniform points in [-scale, scale]^dims.
inline Matrix random_points(std::mt19937_64& rng, std::size_t n, std::size_t dims, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(n, dims);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& x : m.row(i)) {
            x = u(rng);
        }
    }
    return m;
}

/// Labels with both classes present for n >= 2.
inline std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n) {
    std::bernoulli_distribution coin(0.5);
    std::vector<int> y(n);
    for (auto& v : y) {
        v = coin(rng) ? 1 : -1;
    }
    if (n >= 2) {
        y[0] = 1;
        y[1] = -1;
        std::shuffle(y.begin(), y.end(), rng);
    }
    return y;
}

inline std::vector<double> random_positive(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = u(rng);
    }
    return v;
}

/// Random weighted graph with edge probability p and random volumes.
inline ProximityGraph random_graph(std::mt19937_64& rng, std::size_t n, double p, bool unit_volumes = false) {
    std::bernoulli_distribution edge(p);
    std::uniform_real_distribution<double> weight(0.1, 5.0);
    std::vector<WeightedEdge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (edge(rng)) {
                edges.push_back({i, j, weight(rng)});
            }
        }
    }
    std::vector<double> volumes = unit_volumes ? std::vector<double>(n, 1.0) : random_positive(rng, n, 0.5, 3.0);
    return ProximityGraph(n, std::move(edges), std::move(volumes));
}

/// Two Gaussian blobs in `dims` dimensions, labels +1 and -1.
inline Dataset two_blobs(std::mt19937_64& rng, std::size_t per_class, std::size_t dims, double gap) {
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset d;
    for (const int label : {1, -1}) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> x(dims);
            for (auto& v : x) {
                v = g(rng) + label * gap / 2.0;
            }
            d.points.append_row(x);
            d.labels.push_back(label);
        }
    }
    return d;
}

}  // namespace mlsvm::testing
