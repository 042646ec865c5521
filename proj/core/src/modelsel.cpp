#include "mlsvm/modelsel.hpp"

#include "mlsvm/data.hpp"
#include "mlsvm/error.hpp"
#include "mlsvm/parallel.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace mlsvm {

std::vector<ParamPoint> uniform_design(std::size_t count, const ParamBox& box) {
    constexpr double kGolden = 0.6180339887;
    std::vector<ParamPoint> points;
    points.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        const double u = (static_cast<double>(t) + 0.5) / static_cast<double>(count);
        const double scaled = static_cast<double>(t) * kGolden;
        const double v = scaled - std::floor(scaled);
        points.push_back({box.c_low + u * (box.c_high - box.c_low),
                          box.gamma_low + v * (box.gamma_high - box.gamma_low)});
    }
    return points;
}

ParamBox refinement_box(const ParamPoint& center, double half_width, const ParamBox& bounds) {
    if (!(half_width > 0.0)) {
        throw InvalidArgument("refinement half-width must be positive");
    }
    return {std::clamp(center.log2_c - half_width, bounds.c_low, bounds.c_high),
            std::clamp(center.log2_c + half_width, bounds.c_low, bounds.c_high),
            std::clamp(center.log2_gamma - half_width, bounds.gamma_low, bounds.gamma_high),
            std::clamp(center.log2_gamma + half_width, bounds.gamma_low, bounds.gamma_high)};
}

std::optional<MetricRule> parse_metric_rule(std::string_view name) {
    if (name == "gmean") {
        return MetricRule::gmean;
    }
    if (name == "gmean_then_sn") {
        return MetricRule::gmean_then_sn;
    }
    if (name == "acc") {
        return MetricRule::acc;
    }
    return std::nullopt;
}

std::optional<ValidationStrategy> parse_validation_strategy(std::string_view name) {
    if (name == "cs") {
        return ValidationStrategy::cs;
    }
    if (name == "cckf") {
        return ValidationStrategy::cckf;
    }
    if (name == "ff") {
        return ValidationStrategy::ff;
    }
    if (name == "fs") {
        return ValidationStrategy::fs;
    }
    return std::nullopt;
}

std::string_view to_string(MetricRule rule) {
    switch (rule) {
        case MetricRule::gmean:
            return "gmean";
        case MetricRule::gmean_then_sn:
            return "gmean_then_sn";
        case MetricRule::acc:
            return "acc";
    }
    return "unknown";
}

std::string_view to_string(ValidationStrategy strategy) {
    switch (strategy) {
        case ValidationStrategy::cs:
            return "cs";
        case ValidationStrategy::cckf:
            return "cckf";
        case ValidationStrategy::ff:
            return "ff";
        case ValidationStrategy::fs:
            return "fs";
    }
    return "unknown";
}

std::size_t TrainingData::count(int label) const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<double> TrainingData::volumes_or_ones() const {
    return volumes.empty() ? std::vector<double>(labels.size(), 1.0) : volumes;
}

TrainingData TrainingData::subset(std::span<const std::size_t> rows) const {
    TrainingData out;
    out.points = points.select_rows(rows);
    out.labels.reserve(rows.size());
    for (const auto r : rows) {
        out.labels.push_back(labels[r]);
    }
    if (!volumes.empty()) {
        out.volumes.reserve(rows.size());
        for (const auto r : rows) {
            out.volumes.push_back(volumes[r]);
        }
    }
    out.ids.reserve(rows.size());
    for (const auto r : rows) {
        out.ids.push_back(id(r));
    }
    return out;
}

namespace {

// Per class: shuffle, then hold out round(fraction * size), at least one.
// `keep_one` leaves at least one point of each class outside the sample.
std::vector<bool> stratified_sample(std::span<const int> labels, double fraction, std::uint64_t seed, bool keep_one) {
    std::vector<bool> chosen(labels.size(), false);
    std::mt19937_64 rng(seed);
    for (const int label : {1, -1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == label) {
                members.push_back(i);
            }
        }
        if (members.empty()) {
            continue;
        }
        std::shuffle(members.begin(), members.end(), rng);
        auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        take = std::max<std::size_t>(take, 1);
        if (keep_one) {
            take = std::min(take, members.size() - 1);
        }
        take = std::min(take, members.size());
        for (std::size_t p = 0; p < take; ++p) {
            chosen[members[p]] = true;
        }
    }
    return chosen;
}

void split_by_mask(const TrainingData& data, const std::vector<bool>& mask, TrainingData& selected,
                   TrainingData& rest) {
    std::vector<std::size_t> in;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        (mask[i] ? in : out).push_back(i);
    }
    selected = data.subset(in);
    rest = data.subset(out);
}

void require_two_per_class(const TrainingData& data, ValidationStrategy strategy) {
    for (const int label : {1, -1}) {
        if (data.count(label) < 2) {
            throw InvalidArgument(fmt::format("level data has {} points of class {}; {} needs at least 2",
                                              data.count(label), label, to_string(strategy)));
        }
    }
}

}  // namespace

ValidationPlan make_validation_set(ValidationStrategy strategy, const TrainingData& level_data,
                                   const TrainingData& finest_train, double fraction, std::size_t folds,
                                   std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 0.5)) {
        throw InvalidArgument(fmt::format("validation fraction {} is outside (0, 0.5]", fraction));
    }
    ValidationPlan plan;
    plan.strategy = strategy;
    plan.full = level_data;
    switch (strategy) {
        case ValidationStrategy::cs: {
            require_two_per_class(level_data, strategy);
            ValidationSplit split;
            split_by_mask(level_data, stratified_sample(level_data.labels, fraction, seed, true), split.validate,
                          split.train);
            plan.splits.push_back(std::move(split));
            break;
        }
        case ValidationStrategy::cckf: {
            require_two_per_class(level_data, strategy);
            const std::size_t smallest = std::min(level_data.count(1), level_data.count(-1));
            const std::size_t k = std::min(folds, smallest);
            const auto assignment = kfold_split(std::span<const int>(level_data.labels), k, seed);
            for (std::size_t f = 0; f < k; ++f) {
                const auto test = assignment.test_indices(f);
                const auto train = assignment.train_indices(f);
                plan.splits.push_back({level_data.subset(train), level_data.subset(test)});
            }
            break;
        }
        case ValidationStrategy::ff:
            plan.splits.push_back({level_data, finest_train});
            break;
        case ValidationStrategy::fs: {
            ValidationSplit split;
            split.train = level_data;
            TrainingData unused;
            split_by_mask(finest_train, stratified_sample(finest_train.labels, fraction, seed, false), split.validate,
                          unused);
            plan.splits.push_back(std::move(split));
            break;
        }
    }
    return plan;
}

TrainedSvm train_svm(const TrainingData& data, const ParamPoint& params, const TrainingOptions& options) {
    const auto volumes = data.volumes_or_ones();
    const auto raw = class_weights(data.labels, volumes, options.weights);
    const auto weights = penalty_scale(raw);
    auto result = smo_train(data.points, data.labels, params.C(), weights, params.gamma(), options.smo);
    auto& model = result.model;
    // class-level penalties for the record: mean scaled weight of each class
    double wp = 0.0;
    double wn = 0.0;
    std::size_t np = 0;
    std::size_t nn = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (data.labels[i] > 0) {
            wp += weights[i];
            ++np;
        } else {
            wn += weights[i];
            ++nn;
        }
    }
    model.weight_positive = np > 0 ? wp / static_cast<double>(np) : 0.0;
    model.weight_negative = nn > 0 ? wn / static_cast<double>(nn) : 0.0;
    TrainedSvm out{std::move(result.model), {}};
    out.support_ids.reserve(result.support_indices.size());
    for (const auto i : result.support_indices) {
        out.support_ids.push_back(data.id(i));
    }
    std::sort(out.support_ids.begin(), out.support_ids.end());
    return out;
}

PerformanceReport evaluate(const SvmModel& model, const TrainingData& data) {
    std::vector<int> predicted(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        predicted[i] = model.predict(data.points.row(i));
    }
    return compute_metrics(predicted, data.labels);
}

bool ranks_above(const ModelCandidate& a, const ModelCandidate& b, MetricRule rule) {
    const double oa = rule == MetricRule::acc ? a.report.acc : a.report.gmean;
    const double ob = rule == MetricRule::acc ? b.report.acc : b.report.gmean;
    if (oa != ob) {
        return oa > ob;
    }
    if (rule == MetricRule::gmean_then_sn && a.report.sn != b.report.sn) {
        return a.report.sn > b.report.sn;
    }
    if (a.support_vectors != b.support_vectors) {
        return a.support_vectors < b.support_vectors;
    }
    return a.level > b.level;
}

std::size_t select_best(std::span<const ModelCandidate> candidates, MetricRule rule) {
    if (candidates.empty()) {
        throw InvalidArgument("select_best needs at least one candidate");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (ranks_above(candidates[i], candidates[best], rule)) {
            best = i;
        }
    }
    return best;
}

namespace {

struct StageOutcome {
    std::vector<NudCandidate> candidates;
    std::vector<TrainedSvm> models;  // one per candidate when the plan has a single split
};

StageOutcome run_stage(const ValidationPlan& plan, const std::vector<ParamPoint>& points,
                       const TrainingOptions& options) {
    const std::size_t splits = plan.splits.size();
    const std::size_t jobs = points.size() * splits;
    std::vector<TrainedSvm> models(jobs);
    std::vector<PerformanceReport> reports(jobs);

    TrainingOptions job_options = options;
    const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(jobs)));
    job_options.smo.cache_bytes = options.smo.cache_bytes / workers;

    parallel_for(jobs, workers, [&](std::size_t job) {
        const auto& split = plan.splits[job % splits];
        models[job] = train_svm(split.train, points[job / splits], job_options);
        reports[job] = evaluate(models[job].model, split.validate);
    });

    StageOutcome out;
    for (std::size_t c = 0; c < points.size(); ++c) {
        std::size_t tp = 0;
        std::size_t tn = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        std::size_t svs = 0;
        for (std::size_t s = 0; s < splits; ++s) {
            const auto& r = reports[c * splits + s];
            tp += r.tp;
            tn += r.tn;
            fp += r.fp;
            fn += r.fn;
            svs += models[c * splits + s].model.support_vector_count();
        }
        out.candidates.push_back({points[c], metrics_from_counts(tp, tn, fp, fn), svs / splits});
    }
    if (splits == 1) {
        out.models = std::move(models);
    }
    return out;
}

}  // namespace

NudResult nud_search(const ValidationPlan& plan, const std::optional<ParamPoint>& center, MetricRule rule,
                     const TrainingOptions& options) {
    if (plan.splits.empty()) {
        throw InvalidArgument("validation plan has no splits");
    }
    bool degenerate = false;
    for (const auto& split : plan.splits) {
        if (split.train.count(1) == 0 || split.train.count(-1) == 0) {
            throw InvalidArgument("training split must contain both classes");
        }
        if (split.validate.size() == 0) {
            throw InvalidArgument("validation split is empty");
        }
        degenerate = degenerate || split.validate.count(1) == 0 || split.validate.count(-1) == 0;
    }
    NudResult result;
    if (degenerate && rule != MetricRule::acc) {
        spdlog::warn("validation data holds a single class; selecting parameters by accuracy");
        rule = MetricRule::acc;
        result.accuracy_fallback = true;
    }

    std::vector<TrainedSvm> models;
    auto run = [&](const std::vector<ParamPoint>& points) {
        auto stage = run_stage(plan, points, options);
        result.trainings += points.size() * plan.splits.size();
        result.evaluated.insert(result.evaluated.end(), stage.candidates.begin(), stage.candidates.end());
        models.insert(models.end(), std::make_move_iterator(stage.models.begin()),
                      std::make_move_iterator(stage.models.end()));
    };
    auto best_index = [&] {
        std::vector<ModelCandidate> ranked;
        ranked.reserve(result.evaluated.size());
        for (const auto& c : result.evaluated) {
            ranked.push_back({c.report, c.support_vectors, 0});
        }
        return select_best(ranked, rule);
    };

    ParamPoint stage_center;
    if (center) {
        stage_center = {std::clamp(center->log2_c, kSearchBounds.c_low, kSearchBounds.c_high),
                        std::clamp(center->log2_gamma, kSearchBounds.gamma_low, kSearchBounds.gamma_high)};
    } else {
        run(uniform_design(kFirstStagePoints, kSearchBounds));
        stage_center = result.evaluated[best_index()].params;
    }
    run(uniform_design(kSecondStagePoints, refinement_box(stage_center)));

    const std::size_t best = best_index();
    result.best = result.evaluated[best].params;
    result.report = result.evaluated[best].report;
    TrainedSvm winner =
        plan.splits.size() == 1 ? std::move(models[best]) : train_svm(plan.full, result.best, options);
    if (plan.splits.size() != 1) {
        ++result.trainings;
    }
    result.model = std::move(winner.model);
    result.support_ids = std::move(winner.support_ids);
    return result;
}

}  // namespace mlsvm
