#include "mlsvm/knn.hpp"

#include "mlsvm/error.hpp"
#include "mlsvm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <utility>

namespace mlsvm {

namespace {

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)

/// Keeps the k smallest candidates; the heap top is the current worst.
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

    [[nodiscard]] bool full() const noexcept { return heap_.size() == k_; }
    [[nodiscard]] double worst() const noexcept {
        return full() ? heap_.front().first : std::numeric_limits<double>::infinity();
    }

    void offer(double d2, std::size_t id) {
        const Candidate c{d2, id};
        if (!full()) {
            heap_.push_back(c);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (c < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = c;
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    void write(std::span<std::size_t> ids, std::span<double> distances) {
        std::sort_heap(heap_.begin(), heap_.end());
        for (std::size_t t = 0; t < heap_.size(); ++t) {
            ids[t] = heap_[t].second;
            distances[t] = std::sqrt(heap_[t].first);
        }
    }

private:
    std::size_t k_;
    std::vector<Candidate> heap_;
};

void check_k(const Matrix& points, std::size_t k) {
    if (k == 0) {
        throw InvalidArgument("k-NN needs k >= 1");
    }
    if (k >= points.rows()) {
        throw InvalidArgument("k-NN needs k < number of points");
    }
}

}  // namespace

NeighborTable knn_exact(const Matrix& points, std::size_t k, unsigned threads) {
    check_k(points, k);
    const std::size_t n = points.rows();
    NeighborTable table{k, std::vector<std::size_t>(n * k), std::vector<double>(n * k)};
    constexpr std::size_t block = 64;
    const std::size_t blocks = (n + block - 1) / block;
    parallel_for(blocks, threads, [&](std::size_t b) {
        for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) {
            TopK best(k);
            const auto xi = points.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    continue;
                }
                const double d2 = squared_distance(xi, points.row(j));
                if (!best.full() || d2 <= best.worst()) {
                    best.offer(d2, j);
                }
            }
            best.write({table.ids.data() + i * k, k}, {table.distances.data() + i * k, k});
        }
    });
    return table;
}

struct KMeansTree::Node {
    std::vector<double> centers;  // children.size() rows of d values
    std::vector<double> radii;
    std::vector<std::unique_ptr<Node>> children;
    std::vector<std::size_t> members;  // leaves only
};

namespace {

struct Builder {
    const Matrix& points;
    const KMeansTree::Params& params;
    std::mt19937_64 rng;

    std::unique_ptr<KMeansTree::Node> build(std::vector<std::size_t> members) {
        auto node = std::make_unique<KMeansTree::Node>();
        if (members.size() <= params.leaf_size) {
            node->members = std::move(members);
            return node;
        }
        auto clusters = cluster(members);
        if (clusters.size() < 2) {
            node->members = std::move(members);
            return node;
        }
        const std::size_t d = points.cols();
        for (auto& members_of : clusters) {
            std::vector<double> centre(d, 0.0);
            for (const auto p : members_of) {
                const auto x = points.row(p);
                for (std::size_t j = 0; j < d; ++j) {
                    centre[j] += x[j];
                }
            }
            for (auto& c : centre) {
                c /= static_cast<double>(members_of.size());
            }
            double radius = 0.0;
            for (const auto p : members_of) {
                radius = std::max(radius, squared_distance(centre, points.row(p)));
            }
            node->centers.insert(node->centers.end(), centre.begin(), centre.end());
            node->radii.push_back(std::sqrt(radius));
            node->children.push_back(build(std::move(members_of)));
        }
        return node;
    }

    std::vector<std::vector<std::size_t>> cluster(const std::vector<std::size_t>& members) {
        const std::size_t d = points.cols();
        const std::size_t m = members.size();
        const std::size_t b = std::min(params.branching, m);

        // k-means++ seeding
        std::vector<double> centres;
        centres.reserve(b * d);
        std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        std::size_t chosen = pick(rng);
        for (std::size_t c = 0; c < b; ++c) {
            const auto x = points.row(members[chosen]);
            centres.insert(centres.end(), x.begin(), x.end());
            double total = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                nearest[t] = std::min(nearest[t], squared_distance(x, points.row(members[t])));
                total += nearest[t];
            }
            if (total <= 0.0) {
                break;
            }
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            chosen = m - 1;
            for (std::size_t t = 0; t < m; ++t) {
                target -= nearest[t];
                if (target <= 0.0) {
                    chosen = t;
                    break;
                }
            }
        }
        const std::size_t centre_count = centres.size() / d;

        std::vector<std::size_t> assignment(m, 0);
        std::vector<std::size_t> sizes(centre_count, 0);
        for (std::size_t iter = 0; iter < params.kmeans_iterations; ++iter) {
            bool changed = false;
            for (std::size_t t = 0; t < m; ++t) {
                const auto x = points.row(members[t]);
                std::size_t best = 0;
                double best_d2 = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < centre_count; ++c) {
                    const double d2 = squared_distance(x, {centres.data() + c * d, d});
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best = c;
                    }
                }
                if (iter == 0 || assignment[t] != best) {
                    changed = true;
                    assignment[t] = best;
                }
            }
            if (!changed) {
                break;
            }
            std::fill(centres.begin(), centres.end(), 0.0);
            std::fill(sizes.begin(), sizes.end(), 0);
            for (std::size_t t = 0; t < m; ++t) {
                const auto x = points.row(members[t]);
                const std::size_t c = assignment[t];
                ++sizes[c];
                for (std::size_t j = 0; j < d; ++j) {
                    centres[c * d + j] += x[j];
                }
            }
            for (std::size_t c = 0; c < centre_count; ++c) {
                if (sizes[c] == 0) {
                    continue;
                }
                for (std::size_t j = 0; j < d; ++j) {
                    centres[c * d + j] /= static_cast<double>(sizes[c]);
                }
            }
        }

        std::vector<std::vector<std::size_t>> clusters(centre_count);
        for (std::size_t t = 0; t < m; ++t) {
            clusters[assignment[t]].push_back(members[t]);
        }
        std::erase_if(clusters, [](const auto& c) { return c.empty(); });
        return clusters;
    }
};

}  // namespace

KMeansTree::KMeansTree(const Matrix& points, Params params) : points_(&points), params_(params) {
    if (params_.branching < 2 || params_.leaf_size < 1) {
        throw InvalidArgument("k-means tree needs branching >= 2 and leaf size >= 1");
    }
    std::vector<std::size_t> all(points.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Builder builder{points, params_, std::mt19937_64(params_.seed)};
    root_ = builder.build(std::move(all));
}

KMeansTree::~KMeansTree() = default;
KMeansTree::KMeansTree(KMeansTree&&) noexcept = default;
KMeansTree& KMeansTree::operator=(KMeansTree&&) noexcept = default;

void KMeansTree::search(std::span<const double> query, std::size_t k, std::size_t checks, std::size_t exclude,
                        std::span<std::size_t> out_ids, std::span<double> out_distances) const {
    const std::size_t d = points_->cols();
    TopK best(k);
    using Branch = std::pair<double, const Node*>;  // (lower bound on distance, node)
    std::priority_queue<Branch, std::vector<Branch>, std::greater<>> branches;
    std::size_t examined = 0;

    auto descend = [&](const Node* node) {
        while (!node->children.empty()) {
            const std::size_t count = node->children.size();
            std::size_t closest = 0;
            double closest_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < count; ++c) {
                const double dc = std::sqrt(squared_distance(query, {node->centers.data() + c * d, d}));
                if (dc < closest_d) {
                    closest_d = dc;
                    closest = c;
                }
            }
            for (std::size_t c = 0; c < count; ++c) {
                if (c == closest) {
                    continue;
                }
                const double dc = std::sqrt(squared_distance(query, {node->centers.data() + c * d, d}));
                branches.emplace(std::max(0.0, dc - node->radii[c]), node->children[c].get());
            }
            node = node->children[closest].get();
        }
        for (const auto p : node->members) {
            if (p == exclude) {
                continue;
            }
            best.offer(squared_distance(query, points_->row(p)), p);
            ++examined;
        }
    };

    descend(root_.get());
    while (!branches.empty() && (examined < checks || !best.full())) {
        const auto [bound, node] = branches.top();
        branches.pop();
        if (best.full() && bound * bound > best.worst()) {
            // every remaining branch is at least this far away
            break;
        }
        descend(node);
    }
    best.write(out_ids, out_distances);
}

NeighborTable knn_approximate(const Matrix& points, std::size_t k, const KMeansTree::Params& params,
                              std::size_t checks, unsigned threads) {
    check_k(points, k);
    const std::size_t n = points.rows();
    const KMeansTree tree(points, params);
    NeighborTable table{k, std::vector<std::size_t>(n * k), std::vector<double>(n * k)};
    constexpr std::size_t block = 256;
    const std::size_t blocks = (n + block - 1) / block;
    parallel_for(blocks, threads, [&](std::size_t b) {
        for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) {
            tree.search(points.row(i), k, checks, i, {table.ids.data() + i * k, k},
                        {table.distances.data() + i * k, k});
        }
    });
    return table;
}

}  // namespace mlsvm
