#include "mlsvm/driver.hpp"

#include "mlsvm/error.hpp"
#include "mlsvm/graph_cache.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace mlsvm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t level_seed(std::uint64_t seed, std::size_t level) {
    return seed + 0x9e3779b97f4a7c15ULL * (level + 1);
}

void require(bool ok, std::string_view what) {
    if (!ok) {
        throw InvalidArgument(std::string(what));
    }
}

void recommend(bool ok, bool force, std::string_view what) {
    if (!ok && !force) {
        throw InvalidArgument(fmt::format("{} (pass force to override)", what));
    }
}

std::string_view to_string(CoarseningMode mode) {
    switch (mode) {
        case CoarseningMode::amg:
            return "amg";
        case CoarseningMode::iis:
            return "iis";
        case CoarseningMode::sparse_amg:
            return "sparse_amg";
    }
    return "unknown";
}

std::string_view to_string(WeightScheme scheme) {
    switch (scheme) {
        case WeightScheme::uniform:
            return "uniform";
        case WeightScheme::per_class:
            return "per_class";
        case WeightScheme::per_point:
            return "per_point";
    }
    return "unknown";
}

}  // namespace

void Config::validate() const {
    const auto& c = coarsening;
    require(c.Q > 0.0 && c.Q < 1.0, "Q must lie in (0, 1)");
    require(c.eta > 0.0, "eta must be positive");
    require(c.caliber >= 1, "interpolation order r must be at least 1");
    require(c.theta >= 0.0 && c.theta < 1.0, "theta must lie in [0, 1)");
    require(c.k_nn >= 1, "k_nn must be at least 1");
    require(c.max_positive >= 1 && c.max_negative >= 1, "M+ and M- must be positive");
    require(c.coarsest_size >= 1, "coarsest size must be positive");
    require(qt >= 1 && part_size >= 1, "Q_t and part size must be positive");
    require(val_fraction > 0.0 && val_fraction <= 0.5, "validation fraction must lie in (0, 0.5]");
    require(val_folds >= 2, "validation folds must be at least 2");
    require(disaggregation.distance >= 1 && disaggregation.distance <= kMaxNeighborDistance,
            "k_distant neighbor distance must be 1 or 2");
    require(disaggregation.budget >= 1, "sampling budget must be positive");
    require(threads >= 1, "thread count must be positive");

    recommend(c.caliber <= 4, force, "r outside the recommended range [1, 4]");
    recommend(c.theta >= 0.001 && c.theta <= 0.05, force, "theta outside the recommended range [0.001, 0.05]");
    recommend(c.Q >= 0.4 && c.Q <= 0.6, force, "Q outside the recommended range [0.4, 0.6]");
    recommend(qt >= 3000 && qt <= 5000, force, "Q_t outside the recommended range [3000, 5000]");
    recommend(c.eta == 2.0, force, "eta differs from the recommended value 2");
    recommend(c.max_positive == 300 && c.max_negative == 300, force, "M+ and M- differ from the recommended 300");
    recommend(c.coarsest_size == 500, force, "coarsest size differs from the recommended 500");
}

nlohmann::json config_to_json(const Config& c) {
    const auto& k = c.coarsening;
    return {
        {"coarsening",
         {{"mode", to_string(k.mode)},
          {"Q", k.Q},
          {"eta", k.eta},
          {"r", k.caliber},
          {"theta", k.theta},
          {"k_nn", k.k_nn},
          {"M_positive", k.max_positive},
          {"M_negative", k.max_negative},
          {"coarsest_size", k.coarsest_size}}},
        {"qt", c.qt},
        {"part_size", c.part_size},
        {"validation", c.validation ? nlohmann::json(to_string(*c.validation)) : nlohmann::json("auto")},
        {"val_fraction", c.val_fraction},
        {"val_folds", c.val_folds},
        {"disaggregation",
         {{"mode", to_string(c.disaggregation.mode)},
          {"distance", c.disaggregation.distance},
          {"budget", c.disaggregation.budget}}},
        {"iis_neighbors", c.iis_neighbors},
        {"rule", c.rule ? nlohmann::json(to_string(*c.rule)) : nlohmann::json("auto")},
        {"voting", to_string(c.voting)},
        {"weights", to_string(c.weights)},
        {"smo", {{"tolerance", c.smo.tolerance}, {"max_iterations", c.smo.max_iterations}}},
        {"seed", c.seed},
        {"force", c.force},
    };
}

namespace {

// Finest-level dataset row represented by each point of each level and class.
class Representatives {
public:
    explicit Representatives(const Hierarchy& h) {
        for (const int label : {1, -1}) {
            auto& per_level = label > 0 ? positive_ : negative_;
            const auto rows = h.rows_of(label);
            per_level.emplace_back(rows.begin(), rows.end());
            for (std::size_t l = 1; l < h.depth(); ++l) {
                const auto& finer = per_level.back();
                std::vector<std::size_t> here;
                for (const auto f : h.levels[l].of(label).finer_index) {
                    here.push_back(finer[f]);
                }
                per_level.push_back(std::move(here));
            }
        }
    }

    [[nodiscard]] std::size_t row(int label, std::size_t level, std::size_t index) const {
        return (label > 0 ? positive_ : negative_)[level][index];
    }

private:
    std::vector<std::vector<std::size_t>> positive_;
    std::vector<std::vector<std::size_t>> negative_;
};

ClassSet class_set(const ClassLevel& c, std::vector<std::size_t> nodes) {
    ClassSet s;
    s.points = c.points.select_rows(nodes);
    s.graph = c.graph.induced(nodes);
    const auto volumes = c.graph.volumes();
    for (const auto v : nodes) {
        s.volumes.push_back(volumes[v]);
    }
    s.level_index = std::move(nodes);
    return s;
}

std::vector<std::size_t> all_nodes(const ClassLevel& c) {
    std::vector<std::size_t> nodes(c.size());
    std::iota(nodes.begin(), nodes.end(), std::size_t{0});
    return nodes;
}

// Fine-level nodes of one class that the support vectors of the coarser level expand to.
std::vector<std::size_t> expand_support(const ClassLevel& coarse, const ClassLevel& fine,
                                        std::span<const std::size_t> support, const Config& cfg) {
    if (coarse.copied_from_finer) {
        std::vector<std::size_t> out;
        for (const auto s : support) {
            out.push_back(coarse.finer_index[s]);
        }
        std::sort(out.begin(), out.end());
        return out;
    }
    if (coarse.interpolation) {
        return uncoarsen_amg(support, *coarse.interpolation, cfg.disaggregation, &fine.graph);
    }
    std::vector<std::size_t> mapped;
    for (const auto s : support) {
        mapped.push_back(coarse.finer_index[s]);
    }
    return uncoarsen_iis(mapped, fine.graph, cfg.iis_neighbors);
}

void notify(const RowObserver& observer, std::string_view use, std::size_t level, const Representatives& reps,
            const ClassSet& positive, const ClassSet& negative) {
    if (!observer) {
        return;
    }
    std::vector<std::size_t> rows;
    for (const auto i : positive.level_index) {
        rows.push_back(reps.row(1, level, i));
    }
    for (const auto i : negative.level_index) {
        rows.push_back(reps.row(-1, level, i));
    }
    observer(use, level, rows);
}

ProximityGraph class_graph(const Matrix& points, const Config& cfg) {
    KnnOptions knn = cfg.coarsening.knn;
    knn.seed = cfg.seed;
    knn.threads = cfg.threads;
    const std::size_t k = std::min(cfg.coarsening.k_nn, points.rows() > 0 ? points.rows() - 1 : 0);
    if (k == 0) {
        return ProximityGraph(points.rows(), {});
    }
    if (cfg.cache_dir.empty()) {
        return build_knn_graph(points, k, knn);
    }
    return cached_knn_graph(points, k, knn, cfg.cache_dir);
}

LevelRecord make_record(std::size_t level, const ClassSet& positive, const ClassSet& negative,
                        const LevelOutcome& outcome, MetricRule rule, double seconds) {
    LevelRecord r;
    r.level = level;
    r.positive_size = positive.size();
    r.negative_size = negative.size();
    r.training_size = positive.size() + negative.size();
    r.params = outcome.params;
    r.ensemble = outcome.ensemble;
    r.retrained = outcome.retrained;
    r.models = outcome.ensemble ? std::get<ModelEnsemble>(outcome.predictor).members.size() : 1;
    r.support_vectors = support_vector_count(outcome.predictor);
    r.trainings = outcome.trainings;
    r.rule = rule;
    r.validation = outcome.validation;
    r.validation.level = level;
    r.seconds = seconds;
    return r;
}

}  // namespace

TrainedClassifier mlsvm_train(const Dataset& d, const Config& cfg, const RowObserver& observer) {
    const auto start = Clock::now();
    cfg.validate();
    d.validate();
    if (d.count(1) == 0 || d.count(-1) == 0) {
        throw InvalidArgument("training data must contain both classes");
    }

    TrainedClassifier out;
    out.config = cfg;
    const Dataset nd = zscore_normalize(d);
    out.normalization = nd.normalization;

    const ValidationStrategy strategy =
        cfg.validation.value_or(d.size() <= kFullValidationLimit ? ValidationStrategy::ff : ValidationStrategy::fs);
    const MetricRule finest_rule = cfg.rule.value_or(MetricRule::gmean);
    const MetricRule coarse_rule = cfg.rule.value_or(MetricRule::gmean_then_sn);
    const TrainingOptions training{cfg.weights, cfg.smo, cfg.threads};
    const TrainingData finest{nd.points, nd.labels, {}, {}};
    if (observer) {
        std::vector<std::size_t> rows(d.size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        observer("validate", 0, rows);
    }

    Hierarchy h;
    {
        const auto t0 = Clock::now();
        std::vector<ProximityGraph> graphs;
        for (const int label : {1, -1}) {
            graphs.push_back(class_graph(nd.points.select_rows(nd.indices_of(label)), cfg));
        }
        out.timings.graph = seconds_since(t0);

        const auto t1 = Clock::now();
        CoarseningParams params = cfg.coarsening;
        params.seed = cfg.seed;
        params.knn.seed = cfg.seed;
        params.knn.threads = cfg.threads;
        if (d.size() <= cfg.coarsening.max_positive + cfg.coarsening.max_negative) {
            // small problems are solved directly on the finest level
            params.max_positive = std::max(params.max_positive, d.size());
            params.max_negative = std::max(params.max_negative, d.size());
        }
        h = build_hierarchy(nd, std::move(graphs[0]), std::move(graphs[1]), params);
        out.timings.coarsening = seconds_since(t1);
    }
    out.depth = h.depth();
    out.hierarchy = hierarchy_summary(h);
    const Representatives reps(h);

    std::vector<Predictor> predictors;
    const std::size_t coarsest = h.depth() - 1;
    ParamPoint inherited;
    std::vector<std::size_t> positive_support;
    std::vector<std::size_t> negative_support;
    {
        const auto t0 = Clock::now();
        const Level& level = h.levels[coarsest];
        const ClassSet positive = class_set(level.positive, all_nodes(level.positive));
        const ClassSet negative = class_set(level.negative, all_nodes(level.negative));
        notify(observer, "train", coarsest, reps, positive, negative);

        TrainingData data;
        data.points = positive.points;
        for (std::size_t i = 0; i < negative.size(); ++i) {
            data.points.append_row(negative.points.row(i));
        }
        data.labels.assign(positive.size(), 1);
        data.labels.resize(positive.size() + negative.size(), -1);
        data.volumes = positive.volumes;
        data.volumes.insert(data.volumes.end(), negative.volumes.begin(), negative.volumes.end());

        const MetricRule rule = coarsest == 0 ? finest_rule : coarse_rule;
        const auto plan = make_validation_set(strategy, data, finest, cfg.val_fraction, cfg.val_folds,
                                              level_seed(cfg.seed, coarsest));
        auto nud = nud_search(plan, std::nullopt, rule, training);
        inherited = nud.best;
        for (const auto id : nud.support_ids) {
            (id < positive.size() ? positive_support : negative_support)
                .push_back(id < positive.size() ? id : id - positive.size());
        }
        LevelOutcome outcome{std::move(nud.model), nud.best, false, true, nud.trainings, nud.report, {}, {}};
        out.timings.coarsest = seconds_since(t0);
        out.levels.push_back(make_record(coarsest, positive, negative, outcome, rule, out.timings.coarsest));
        predictors.push_back(std::move(outcome.predictor));
    }

    const auto refinement_start = Clock::now();
    for (std::size_t l = coarsest; l-- > 0;) {
        const auto t0 = Clock::now();
        const Level& fine = h.levels[l];
        const Level& coarse = h.levels[l + 1];
        const ClassSet positive =
            class_set(fine.positive, expand_support(coarse.positive, fine.positive, positive_support, cfg));
        const ClassSet negative =
            class_set(fine.negative, expand_support(coarse.negative, fine.negative, negative_support, cfg));
        notify(observer, "train", l, reps, positive, negative);

        RefineOptions options;
        options.qt = cfg.qt;
        options.part_size = cfg.part_size;
        options.rule = l == 0 ? finest_rule : coarse_rule;
        options.voting = cfg.voting;
        options.training = training;
        options.validation = {strategy, cfg.val_fraction, cfg.val_folds, level_seed(cfg.seed, l), &finest};
        options.seed = level_seed(cfg.seed, l);

        auto outcome = refine_level(positive, negative, inherited, predictors.back(), options);
        if (!outcome.ensemble && outcome.retrained) {
            inherited = outcome.params;
        }
        if (outcome.retrained) {
            positive_support = std::move(outcome.positive_support);
            negative_support = std::move(outcome.negative_support);
        } else {
            positive_support = positive.level_index;
            negative_support = negative.level_index;
        }
        out.levels.push_back(make_record(l, positive, negative, outcome, options.rule, seconds_since(t0)));
        predictors.push_back(std::move(outcome.predictor));
    }
    out.timings.refinement = seconds_since(refinement_start);

    std::vector<ModelCandidate> candidates;
    for (const auto& r : out.levels) {
        candidates.push_back({r.validation, r.support_vectors, r.level});
    }
    const std::size_t best = select_best(candidates, cfg.rule.value_or(MetricRule::gmean_then_sn));
    out.chosen_level = out.levels[best].level;
    out.predictor = std::move(predictors[best]);

    const double elapsed = seconds_since(start);
    out.timings.other =
        std::max(0.0, elapsed - (out.timings.graph + out.timings.coarsening + out.timings.coarsest +
                                 out.timings.refinement));
    return out;
}

std::size_t precompute_class_graphs(const Dataset& d, const Config& cfg) {
    if (cfg.cache_dir.empty()) {
        throw InvalidArgument("no cache directory given");
    }
    d.validate();
    const Dataset nd = zscore_normalize(d);
    std::size_t written = 0;
    for (const int label : {1, -1}) {
        const auto rows = nd.indices_of(label);
        if (rows.size() >= 2) {
            static_cast<void>(class_graph(nd.points.select_rows(rows), cfg));
            ++written;
        }
    }
    return written;
}

Predictions mlsvm_predict(const TrainedClassifier& c, const Matrix& points) {
    Matrix normalized = points;
    if (c.normalization) {
        if (points.cols() != c.normalization->mean.size()) {
            throw InvalidArgument(fmt::format("points have {} features, the classifier expects {}", points.cols(),
                                              c.normalization->mean.size()));
        }
        c.normalization->apply(normalized);
    }
    Predictions out;
    out.decisions.resize(points.rows());
    out.labels.resize(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        out.decisions[i] = predictor_decision(c.predictor, normalized.row(i));
        out.labels[i] = out.decisions[i] >= 0.0 ? 1 : -1;
    }
    return out;
}

namespace {

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) {
        return s;
    }
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.stddev = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

}  // namespace

CrossValidationReport cross_validate(const Dataset& d, const Config& cfg, std::size_t k, std::size_t repeats,
                                     const RowObserver& observer) {
    if (k < 2) {
        throw InvalidArgument("cross-validation needs at least 2 folds");
    }
    if (repeats < 1) {
        throw InvalidArgument("cross-validation needs at least one repeat");
    }
    CrossValidationReport report;
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto folds = kfold_split(d, k, cfg.seed + r);
        for (std::size_t f = 0; f < k; ++f) {
            const auto train_rows = folds.train_indices(f);
            const auto test_rows = folds.test_indices(f);
            RowObserver mapped;
            if (observer) {
                mapped = [&](std::string_view use, std::size_t level, std::span<const std::size_t> rows) {
                    std::vector<std::size_t> original;
                    original.reserve(rows.size());
                    for (const auto row : rows) {
                        original.push_back(train_rows[row]);
                    }
                    observer(use, level, original);
                };
            }
            const auto classifier = mlsvm_train(d.subset(train_rows), cfg, mapped);
            const Dataset test = d.subset(test_rows);
            const auto predicted = mlsvm_predict(classifier, test.points);
            FoldResult result;
            result.repeat = r;
            result.fold = f;
            result.test = compute_metrics(predicted.labels, test.labels);
            result.test.level = classifier.chosen_level;
            result.depth = classifier.depth;
            result.chosen_level = classifier.chosen_level;
            result.timings = classifier.timings;
            spdlog::debug("repeat {} fold {}: gmean {:.4f} depth {}", r, f, result.test.gmean, result.depth);
            report.folds.push_back(result);
        }
    }
    auto collect = [&](auto field) {
        std::vector<double> values;
        for (const auto& f : report.folds) {
            values.push_back(field(f));
        }
        return summarize(values);
    };
    report.sn = collect([](const FoldResult& f) { return f.test.sn; });
    report.sp = collect([](const FoldResult& f) { return f.test.sp; });
    report.gmean = collect([](const FoldResult& f) { return f.test.gmean; });
    report.acc = collect([](const FoldResult& f) { return f.test.acc; });
    report.ppv = collect([](const FoldResult& f) { return f.test.ppv; });
    report.f1 = collect([](const FoldResult& f) { return f.test.f1; });
    report.depth = collect([](const FoldResult& f) { return static_cast<double>(f.depth); });
    return report;
}

}  // namespace mlsvm
