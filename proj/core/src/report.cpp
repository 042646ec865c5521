#include "mlsvm/report.hpp"

namespace mlsvm {

namespace {

nlohmann::json summary_to_json(const MetricSummary& s) {
    return {{"mean", s.mean}, {"std", s.stddev}};
}

nlohmann::json level_to_json(const LevelRecord& r) {
    return {{"level", r.level},
            {"positive", r.positive_size},
            {"negative", r.negative_size},
            {"training_size", r.training_size},
            {"log2_c", r.params.log2_c},
            {"log2_gamma", r.params.log2_gamma},
            {"ensemble", r.ensemble},
            {"retrained", r.retrained},
            {"models", r.models},
            {"support_vectors", r.support_vectors},
            {"trainings", r.trainings},
            {"rule", to_string(r.rule)},
            {"validation", r.validation}};
}

}  // namespace

nlohmann::json dataset_summary(const Dataset& d) {
    return {{"points", d.size()}, {"features", d.dims()}, {"positive", d.count(1)}, {"negative", d.count(-1)}};
}

nlohmann::json timings_to_json(const PhaseTimings& t, std::size_t points, std::size_t features) {
    const double micros = t.total() * 1e6;
    const double per_point = points > 0 ? micros / static_cast<double>(points) : 0.0;
    const double per_value = points > 0 && features > 0 ? per_point / static_cast<double>(features) : 0.0;
    return {{"graph", t.graph},
            {"coarsening", t.coarsening},
            {"coarsest", t.coarsest},
            {"refinement", t.refinement},
            {"other", t.other},
            {"total", t.total()},
            {"us_per_point", per_point},
            {"us_per_value", per_value}};
}

nlohmann::json make_train_report(const TrainedClassifier& c, const Dataset& d,
                                 const std::optional<PerformanceReport>& final_metrics) {
    nlohmann::json levels = nlohmann::json::array();
    nlohmann::json level_seconds = nlohmann::json::array();
    for (const auto& r : c.levels) {
        levels.push_back(level_to_json(r));
        level_seconds.push_back({{"level", r.level}, {"seconds", r.seconds}});
    }
    nlohmann::json report{{"kind", "train"},
                          {"config", config_to_json(c.config)},
                          {"dataset", dataset_summary(d)},
                          {"depth", c.depth},
                          {"chosen_level", c.chosen_level},
                          {"hierarchy", c.hierarchy},
                          {"levels", std::move(levels)}};
    if (final_metrics) {
        report["final"] = *final_metrics;
    }
    nlohmann::json runtime{{"threads", c.config.threads},
                           {"seconds", timings_to_json(c.timings, d.size(), d.dims())},
                           {"levels", std::move(level_seconds)}};
    return {{"report", std::move(report)}, {"runtime", std::move(runtime)}};
}

nlohmann::json make_cv_report(const CrossValidationReport& cv, const Config& cfg, const Dataset& d,
                              std::size_t folds, std::size_t repeats) {
    nlohmann::json per_fold = nlohmann::json::array();
    nlohmann::json fold_seconds = nlohmann::json::array();
    PhaseTimings total;
    std::size_t trained_points = 0;
    for (const auto& f : cv.folds) {
        per_fold.push_back({{"repeat", f.repeat},
                            {"fold", f.fold},
                            {"depth", f.depth},
                            {"chosen_level", f.chosen_level},
                            {"test", f.test}});
        fold_seconds.push_back({{"repeat", f.repeat}, {"fold", f.fold}, {"seconds", f.timings.total()}});
        total.graph += f.timings.graph;
        total.coarsening += f.timings.coarsening;
        total.coarsest += f.timings.coarsest;
        total.refinement += f.timings.refinement;
        total.other += f.timings.other;
        trained_points += d.size() - f.test.total();
    }
    nlohmann::json mean{{"sn", cv.sn.mean},   {"sp", cv.sp.mean},   {"gmean", cv.gmean.mean}, {"acc", cv.acc.mean},
                        {"ppv", cv.ppv.mean}, {"f1", cv.f1.mean},   {"depth", cv.depth.mean}};
    nlohmann::json stddev{{"sn", cv.sn.stddev},   {"sp", cv.sp.stddev}, {"gmean", cv.gmean.stddev},
                          {"acc", cv.acc.stddev}, {"ppv", cv.ppv.stddev}, {"f1", cv.f1.stddev},
                          {"depth", cv.depth.stddev}};
    nlohmann::json report{{"kind", "cv"},
                          {"config", config_to_json(cfg)},
                          {"dataset", dataset_summary(d)},
                          {"folds", folds},
                          {"repeats", repeats},
                          {"gmean", summary_to_json(cv.gmean)},
                          {"mean", std::move(mean)},
                          {"std", std::move(stddev)},
                          {"per_fold", std::move(per_fold)}};
    nlohmann::json runtime{{"threads", cfg.threads},
                           {"seconds", timings_to_json(total, trained_points, d.dims())},
                           {"folds", std::move(fold_seconds)}};
    return {{"report", std::move(report)}, {"runtime", std::move(runtime)}};
}

nlohmann::json deterministic_part(const nlohmann::json& report) {
    nlohmann::json out = report;
    out.erase("runtime");
    return out;
}

}  // namespace mlsvm
