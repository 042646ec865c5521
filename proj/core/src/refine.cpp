#include "mlsvm/refine.hpp"

#include "mlsvm/error.hpp"
#include "mlsvm/parallel.hpp"
#include "mlsvm/partition.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlsvm {

std::optional<Disaggregation> parse_disaggregation(std::string_view name) {
    if (name == "full") {
        return Disaggregation::full;
    }
    if (name == "k_distant") {
        return Disaggregation::k_distant;
    }
    if (name == "sampled") {
        return Disaggregation::sampled;
    }
    return std::nullopt;
}

std::optional<VotingRule> parse_voting_rule(std::string_view name) {
    if (name == "distance_weighted") {
        return VotingRule::distance_weighted;
    }
    if (name == "majority") {
        return VotingRule::majority;
    }
    return std::nullopt;
}

std::string_view to_string(Disaggregation mode) {
    switch (mode) {
        case Disaggregation::full:
            return "full";
        case Disaggregation::k_distant:
            return "k_distant";
        case Disaggregation::sampled:
            return "sampled";
    }
    return "unknown";
}

std::string_view to_string(VotingRule rule) {
    return rule == VotingRule::majority ? "majority" : "distance_weighted";
}

std::vector<double> weighted_midpoint(std::span<const double> ci, std::span<const double> cj, double volume_i,
                                      double volume_j) {
    if (ci.size() != cj.size()) {
        throw InvalidArgument("centroids differ in dimension");
    }
    if (!(volume_i > 0.0) || !(volume_j > 0.0)) {
        throw InvalidArgument("part volumes must be positive");
    }
    const double total = volume_i + volume_j;
    std::vector<double> x(ci.size());
    for (std::size_t d = 0; d < x.size(); ++d) {
        x[d] = (ci[d] * volume_i + cj[d] * volume_j) / total;
    }
    return x;
}

double ensemble_vote(const ModelEnsemble& e, std::span<const double> t, VotingRule rule) {
    if (e.members.empty()) {
        throw InvalidArgument("ensemble has no models");
    }
    if (rule == VotingRule::majority) {
        double sum = 0.0;
        for (const auto& m : e.members) {
            sum += m.model.predict(t);
        }
        return sum / static_cast<double>(e.members.size());
    }
    double weighted = 0.0;
    double norm = 0.0;
    for (const auto& m : e.members) {
        if (m.midpoint.size() != t.size()) {
            throw InvalidArgument(
                fmt::format("point has {} features, ensemble expects {}", t.size(), m.midpoint.size()));
        }
        const double d = euclidean_distance(t, m.midpoint);
        const int label = m.model.predict(t);
        if (d == 0.0) {
            return label;
        }
        weighted += label / d;
        norm += 1.0 / d;
    }
    return weighted / norm;
}

int ensemble_predict(const ModelEnsemble& e, std::span<const double> t, VotingRule rule) {
    return ensemble_vote(e, t, rule) >= 0.0 ? 1 : -1;
}

double predictor_decision(const Predictor& p, std::span<const double> t) {
    if (const auto* m = std::get_if<SvmModel>(&p)) {
        return m->decision(t);
    }
    const auto& e = std::get<ModelEnsemble>(p);
    return ensemble_vote(e, t, e.rule);
}

int predictor_label(const Predictor& p, std::span<const double> t) {
    return predictor_decision(p, t) >= 0.0 ? 1 : -1;
}

std::size_t support_vector_count(const Predictor& p) {
    if (const auto* m = std::get_if<SvmModel>(&p)) {
        return m->support_vector_count();
    }
    std::size_t total = 0;
    for (const auto& member : std::get<ModelEnsemble>(p).members) {
        total += member.model.support_vector_count();
    }
    return total;
}

namespace {

void sort_unique(std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::vector<std::size_t> uncoarsen_iis(std::span<const std::size_t> support, const ProximityGraph& fine,
                                       std::size_t h) {
    std::vector<std::size_t> out(support.begin(), support.end());
    std::vector<Neighbor> ranked;
    for (const auto s : support) {
        if (s >= fine.node_count()) {
            throw InvalidArgument(fmt::format("support node {} is outside the graph", s));
        }
        const auto nbs = fine.neighbors(s);
        ranked.assign(nbs.begin(), nbs.end());
        const std::size_t take = std::min(h, ranked.size());
        std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(),
                          [](const Neighbor& a, const Neighbor& b) {
                              return a.weight != b.weight ? a.weight > b.weight : a.node < b.node;
                          });
        for (std::size_t t = 0; t < take; ++t) {
            out.push_back(ranked[t].node);
        }
    }
    sort_unique(out);
    return out;
}

std::vector<std::size_t> uncoarsen_amg(std::span<const std::size_t> support, const InterpolationMatrix& p,
                                       const DisaggregationOptions& options, const ProximityGraph* fine) {
    std::vector<std::size_t> out;
    for (const auto q : support) {
        if (q >= p.cols()) {
            throw InvalidArgument(fmt::format("support column {} is outside the interpolation matrix", q));
        }
    }
    if (options.mode == Disaggregation::sampled) {
        if (options.budget == 0) {
            throw InvalidArgument("sampling budget must be at least 1");
        }
        std::vector<std::pair<double, std::size_t>> members;
        for (const auto q : support) {
            const std::size_t seed = p.seed(q);
            out.push_back(seed);
            members.clear();
            for (const auto& [row, value] : p.column(q)) {
                if (row != seed) {
                    members.emplace_back(value, row);
                }
            }
            std::sort(members.begin(), members.end());
            const std::size_t take = std::min(options.budget - 1, members.size());
            for (std::size_t t = 0; t < take; ++t) {
                out.push_back(members[t].second);
            }
        }
        sort_unique(out);
        return out;
    }

    for (const auto q : support) {
        for (const auto& entry : p.column(q)) {
            out.push_back(entry.first);
        }
    }
    sort_unique(out);
    if (options.mode == Disaggregation::k_distant) {
        if (fine == nullptr || fine->node_count() != p.rows()) {
            throw InvalidArgument("k_distant disaggregation needs the fine graph");
        }
        if (options.distance < 1 || options.distance > kMaxNeighborDistance) {
            throw InvalidArgument(fmt::format("neighbor distance {} is outside [1, {}]", options.distance,
                                              kMaxNeighborDistance));
        }
        std::vector<bool> in(p.rows(), false);
        for (const auto v : out) {
            in[v] = true;
        }
        std::vector<std::size_t> frontier = out;
        for (std::size_t hop = 0; hop < options.distance; ++hop) {
            std::vector<std::size_t> next;
            for (const auto v : frontier) {
                for (const auto& nb : fine->neighbors(v)) {
                    if (!in[nb.node]) {
                        in[nb.node] = true;
                        next.push_back(nb.node);
                    }
                }
            }
            out.insert(out.end(), next.begin(), next.end());
            frontier = std::move(next);
        }
        sort_unique(out);
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> nearest_part_pairs(const Matrix& positive_centroids,
                                                                    const Matrix& negative_centroids) {
    auto nearest = [](std::span<const double> c, const Matrix& others) {
        std::size_t best = 0;
        double best_distance = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < others.rows(); ++j) {
            const double d = squared_distance(c, others.row(j));
            if (d < best_distance) {
                best_distance = d;
                best = j;
            }
        }
        return best;
    };
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < positive_centroids.rows(); ++i) {
        pairs.emplace_back(i, nearest(positive_centroids.row(i), negative_centroids));
    }
    for (std::size_t j = 0; j < negative_centroids.rows(); ++j) {
        pairs.emplace_back(nearest(negative_centroids.row(j), positive_centroids), j);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

std::size_t part_count(std::size_t size, std::size_t part_size) {
    if (part_size == 0) {
        throw InvalidArgument("part size must be positive");
    }
    const auto rounded = static_cast<std::size_t>(
        std::llround(static_cast<double>(size) / static_cast<double>(part_size)));
    return std::min(std::max<std::size_t>(rounded, 2), size);
}

namespace {

// Rows [0, |positive|) are positive, the rest negative; ids are these row numbers.
TrainingData combine(const ClassSet& positive, const ClassSet& negative) {
    TrainingData t;
    t.points = positive.points;
    for (std::size_t i = 0; i < negative.size(); ++i) {
        t.points.append_row(negative.points.row(i));
    }
    t.labels.assign(positive.size(), 1);
    t.labels.resize(positive.size() + negative.size(), -1);
    t.volumes = positive.volumes;
    t.volumes.insert(t.volumes.end(), negative.volumes.begin(), negative.volumes.end());
    return t;
}

void split_support(std::span<const std::size_t> ids, const ClassSet& positive, const ClassSet& negative,
                   LevelOutcome& out) {
    for (const auto id : ids) {
        if (id < positive.size()) {
            out.positive_support.push_back(positive.level_index[id]);
        } else {
            out.negative_support.push_back(negative.level_index[id - positive.size()]);
        }
    }
    sort_unique(out.positive_support);
    sort_unique(out.negative_support);
}

PerformanceReport evaluate_predictor(const Predictor& p, const TrainingData& data) {
    std::vector<int> predicted(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        predicted[i] = predictor_label(p, data.points.row(i));
    }
    return compute_metrics(predicted, data.labels);
}

LevelOutcome search_single(const TrainingData& t, const ClassSet& positive, const ClassSet& negative,
                           const ParamPoint& inherited, const RefineOptions& options) {
    const auto& ctx = options.validation;
    const auto plan = make_validation_set(ctx.strategy, t, *ctx.finest, ctx.fraction, ctx.folds, ctx.seed);
    auto nud = nud_search(plan, inherited, options.rule, options.training);
    LevelOutcome out{std::move(nud.model), nud.best, false, true, nud.trainings, nud.report, {}, {}};
    split_support(nud.support_ids, positive, negative, out);
    return out;
}

}  // namespace

LevelOutcome refine_level(const ClassSet& positive, const ClassSet& negative, const ParamPoint& inherited,
                          const Predictor& fallback, const RefineOptions& options) {
    if (options.validation.finest == nullptr) {
        throw InvalidArgument("refinement needs the finest training data for validation");
    }
    if (positive.size() == 0 || negative.size() == 0) {
        spdlog::warn("refinement set holds a single class; keeping the inherited model");
        LevelOutcome out{fallback, inherited, std::holds_alternative<ModelEnsemble>(fallback), false, 0, {}, {}, {}};
        out.validation = evaluate_predictor(fallback, *options.validation.finest);
        return out;
    }
    const TrainingData t = combine(positive, negative);
    if (t.size() < options.qt) {
        return search_single(t, positive, negative, inherited, options);
    }

    const auto& ctx = options.validation;
    const auto plan = make_validation_set(ctx.strategy, t, *ctx.finest, ctx.fraction, ctx.folds, ctx.seed);
    const auto& split = plan.splits.front();
    std::vector<bool> trainable(t.size(), false);
    for (std::size_t r = 0; r < split.train.size(); ++r) {
        trainable[split.train.id(r)] = true;
    }

    const auto pos_parts = partition_graph(positive.graph, positive.points,
                                           part_count(positive.size(), options.part_size), options.seed);
    const auto neg_parts = partition_graph(negative.graph, negative.points,
                                           part_count(negative.size(), options.part_size), options.seed + 1);
    const auto pairs = nearest_part_pairs(pos_parts.centroids, neg_parts.centroids);

    std::vector<TrainingData> pair_data;
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    for (const auto& [i, j] : pairs) {
        std::vector<std::size_t> rows;
        for (const auto r : pos_parts.members(i)) {
            if (trainable[r]) {
                rows.push_back(r);
            }
        }
        const std::size_t positives = rows.size();
        for (const auto r : neg_parts.members(j)) {
            if (trainable[positive.size() + r]) {
                rows.push_back(positive.size() + r);
            }
        }
        if (positives == 0 || positives == rows.size()) {
            continue;
        }
        pair_data.push_back(t.subset(rows));
        kept.emplace_back(i, j);
    }
    if (kept.empty()) {
        return search_single(t, positive, negative, inherited, options);
    }

    std::vector<TrainedSvm> trained(kept.size());
    TrainingOptions job_options = options.training;
    const unsigned workers =
        std::max(1u, std::min<unsigned>(options.training.threads, static_cast<unsigned>(kept.size())));
    job_options.smo.cache_bytes = options.training.smo.cache_bytes / workers;
    parallel_for(kept.size(), workers,
                 [&](std::size_t m) { trained[m] = train_svm(pair_data[m], inherited, job_options); });

    ModelEnsemble ensemble;
    ensemble.rule = options.voting;
    std::vector<std::size_t> support;
    for (std::size_t m = 0; m < kept.size(); ++m) {
        const auto [i, j] = kept[m];
        EnsembleMember member;
        member.model = std::move(trained[m].model);
        const auto ci = pos_parts.centroids.row(i);
        const auto cj = neg_parts.centroids.row(j);
        member.positive_centroid.assign(ci.begin(), ci.end());
        member.negative_centroid.assign(cj.begin(), cj.end());
        member.positive_volume = pos_parts.volumes[i];
        member.negative_volume = neg_parts.volumes[j];
        member.midpoint = weighted_midpoint(ci, cj, member.positive_volume, member.negative_volume);
        ensemble.members.push_back(std::move(member));
        support.insert(support.end(), trained[m].support_ids.begin(), trained[m].support_ids.end());
    }

    LevelOutcome out{std::move(ensemble), inherited, true, true, kept.size(), {}, {}, {}};
    out.validation = evaluate_predictor(out.predictor, split.validate);
    split_support(support, positive, negative, out);
    return out;
}

}  // namespace mlsvm
