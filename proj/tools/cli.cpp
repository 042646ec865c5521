#include "cli.hpp"

#include "mlsvm/data.hpp"
#include "mlsvm/driver.hpp"
#include "mlsvm/error.hpp"
#include "mlsvm/model_io.hpp"
#include "mlsvm/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>

namespace mlsvm::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Routes library logging to `err` for the duration of one command.
class LogScope {
public:
    LogScope(std::ostream& err, const std::string& level) : previous_(spdlog::default_logger()) {
        auto logger = std::make_shared<spdlog::logger>("mlsvm", std::make_shared<spdlog::sinks::ostream_sink_mt>(err));
        logger->set_pattern("[%l] %v");
        logger->set_level(spdlog::level::from_str(level));
        spdlog::set_default_logger(std::move(logger));
    }
    ~LogScope() { spdlog::set_default_logger(previous_); }
    LogScope(const LogScope&) = delete;
    LogScope& operator=(const LogScope&) = delete;

private:
    std::shared_ptr<spdlog::logger> previous_;
};

struct DataFlags {
    std::string path;
    int label_col = -1;
    bool no_header = false;

    void add(CLI::App* app) {
        app->add_option("--data", path, "Input CSV file")->required();
        app->add_option("--label-col", label_col, "Label column; negative counts from the end")
            ->capture_default_str();
        app->add_flag("--no-header", no_header, "The CSV has no header row");
    }

    [[nodiscard]] Dataset load() const { return load_csv(path, label_col, !no_header); }
};

struct ConfigFlags {
    Config cfg;
    std::string coarsening = "amg";
    std::string validation = "auto";
    std::string rule = "auto";
    std::string disaggregation = "full";
    std::string voting = "distance_weighted";
    std::string weights = "per_point";
    CLI::Option* val_fraction = nullptr;

    void add(CLI::App* app, bool seed_required) {
        auto& c = cfg.coarsening;
        app->add_option("--coarsening", coarsening, "Coarsening scheme")
            ->check(CLI::IsMember({"amg", "iis", "sparse_amg"}))
            ->capture_default_str();
        app->add_option("--Q", c.Q, "Coarsening ratio")->capture_default_str();
        app->add_option("--eta", c.eta, "Future-volume factor for immediate seeds")->capture_default_str();
        app->add_option("--r", c.caliber, "Interpolation order")->capture_default_str();
        app->add_option("--theta", c.theta, "Weak-edge filter threshold")->capture_default_str();
        app->add_option("--knn", c.k_nn, "Neighbors per point in the proximity graph")->capture_default_str();
        app->add_option("--m-pos", c.max_positive, "Positive class size that stops coarsening")
            ->capture_default_str();
        app->add_option("--m-neg", c.max_negative, "Negative class size that stops coarsening")
            ->capture_default_str();
        app->add_option("--coarsest", c.coarsest_size, "Coarsest level size")->capture_default_str();
        app->add_option("--qt", cfg.qt, "Training set size that triggers partitioning")->capture_default_str();
        app->add_option("--part-size", cfg.part_size, "Target points per part")->capture_default_str();
        app->add_option("--validation", validation, "Validation strategy")
            ->check(CLI::IsMember({"auto", "cs", "cckf", "ff", "fs"}))
            ->capture_default_str();
        val_fraction =
            app->add_option("--val-fraction", cfg.val_fraction, "Held-out fraction for cs and fs")->capture_default_str();
        app->add_option("--val-folds", cfg.val_folds, "Folds for cckf")->capture_default_str();
        app->add_option("--disaggregation", disaggregation, "Support vector uncoarsening")
            ->check(CLI::IsMember({"full", "k_distant", "sampled"}))
            ->capture_default_str();
        app->add_option("--distance", cfg.disaggregation.distance, "Graph hops added in k_distant mode")
            ->capture_default_str();
        app->add_option("--budget", cfg.disaggregation.budget, "Points per aggregate in sampled mode")
            ->capture_default_str();
        app->add_option("--iis-neighbors", cfg.iis_neighbors, "Neighbors added per support vector for iis")
            ->capture_default_str();
        app->add_option("--rule", rule, "Model selection rule")
            ->check(CLI::IsMember({"auto", "gmean", "gmean_then_sn", "acc"}))
            ->capture_default_str();
        app->add_option("--voting", voting, "Ensemble voting")
            ->check(CLI::IsMember({"distance_weighted", "majority"}))
            ->capture_default_str();
        app->add_option("--weights", weights, "Penalty weighting")
            ->check(CLI::IsMember({"uniform", "per_class", "per_point"}))
            ->capture_default_str();
        auto* seed = app->add_option("--seed", cfg.seed, "Random seed");
        if (seed_required) {
            seed->required();
        } else {
            seed->capture_default_str();
        }
        app->add_option("--threads", cfg.threads, "Worker threads")->capture_default_str();
        app->add_flag("--force", cfg.force, "Allow parameters outside the recommended ranges");
    }

    [[nodiscard]] Config resolve() {
        if (validation == "cckf" && val_fraction->count() > 0) {
            throw UsageError("--val-fraction does not apply to --validation cckf");
        }
        if (coarsening == "iis") {
            cfg.coarsening.mode = CoarseningMode::iis;
        } else if (coarsening == "sparse_amg") {
            cfg.coarsening.mode = CoarseningMode::sparse_amg;
        }
        cfg.validation = parse_validation_strategy(validation);
        cfg.rule = parse_metric_rule(rule);
        cfg.disaggregation.mode = *parse_disaggregation(disaggregation);
        cfg.voting = *parse_voting_rule(voting);
        cfg.weights = weights == "uniform"     ? WeightScheme::uniform
                      : weights == "per_class" ? WeightScheme::per_class
                                               : WeightScheme::per_point;
        if (const char* dir = std::getenv("MLSVM_CACHE_DIR"); dir != nullptr && *dir != '\0') {
            cfg.cache_dir = dir;
        }
        try {
            cfg.validate();
        } catch (const InvalidArgument& e) {
            throw UsageError(e.what());
        }
        return cfg;
    }
};

void emit(const nlohmann::json& j, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << j.dump(2) << '\n';
        return;
    }
    std::ofstream file(path);
    if (!file) {
        throw Error(fmt::format("cannot write '{}'", path));
    }
    file << j.dump(2) << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multilevel weighted SVM training and evaluation", "mlsvm"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
        ->capture_default_str();

    auto* train = app.add_subcommand("train", "Train a classifier and save it");
    DataFlags train_data;
    ConfigFlags train_cfg;
    std::string model_out;
    std::string train_report;
    std::string dump_hierarchy;
    train_data.add(train);
    train_cfg.add(train, false);
    train->add_option("--model-out", model_out, "Model file to write")->required();
    train->add_option("--report", train_report, "Report JSON file (default: standard output)");
    train->add_option("--dump-hierarchy", dump_hierarchy, "Write per-level hierarchy statistics as JSON");

    auto* predict = app.add_subcommand("predict", "Label a CSV with a saved classifier");
    DataFlags predict_data;
    std::string model_in;
    std::string predictions_out;
    std::string predict_report;
    predict_data.add(predict);
    predict->add_option("--model", model_in, "Model file")->required();
    predict->add_option("--out", predictions_out, "CSV of label,decision per row")->required();
    predict->add_option("--report", predict_report, "Metrics JSON file (default: standard output)");

    auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
    DataFlags cv_data;
    ConfigFlags cv_cfg;
    std::size_t folds = 10;
    std::size_t repeats = 1;
    std::string cv_report;
    cv_data.add(cv);
    cv_cfg.add(cv, true);
    cv->add_option("--folds", folds, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000));
    cv->add_option("--repeats", repeats, "Repetitions with shifted seeds")
        ->capture_default_str()
        ->check(CLI::Range(1, 1000));
    cv->add_option("--report", cv_report, "Report JSON file (default: standard output)");

    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    std::string kind;
    std::size_t gen_n = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    double minority = 0.05;
    std::size_t gen_dims = 10;
    double separation = 2.5;
    gen->add_option("--kind", kind, "twonorm, ringnorm or mixture")
        ->required()
        ->check(CLI::IsMember({"twonorm", "ringnorm", "mixture"}));
    gen->add_option("--n", gen_n, "Number of points")->required()->check(CLI::Range(std::size_t{2}, SIZE_MAX));
    gen->add_option("--seed", gen_seed, "Random seed")->required();
    gen->add_option("--out", gen_out, "CSV file to write")->required();
    gen->add_option("--minority", minority, "Minority fraction (mixture)")->capture_default_str();
    gen->add_option("--dims", gen_dims, "Dimensions (mixture)")->capture_default_str();
    gen->add_option("--separation", separation, "Distance between class means (mixture)")->capture_default_str();

    auto* knn = app.add_subcommand("knn", "Precompute the per-class k-NN graph cache");
    DataFlags knn_data;
    std::size_t knn_k = 10;
    std::string cache_out;
    std::uint64_t knn_seed = 0;
    knn_data.add(knn);
    knn->add_option("--k", knn_k, "Neighbors per point")->capture_default_str()->check(CLI::Range(1, 10000));
    knn->add_option("--cache-out", cache_out, "Cache directory")->required();
    knn->add_option("--seed", knn_seed, "Random seed of the approximate search")->capture_default_str();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    const LogScope log_scope(err, log_level);
    try {
        if (train->parsed()) {
            const Config cfg = train_cfg.resolve();
            const Dataset d = train_data.load();
            const auto classifier = mlsvm_train(d, cfg);
            save_classifier(model_out, classifier);
            const auto fitted = mlsvm_predict(classifier, d.points);
            auto final_metrics = compute_metrics(fitted.labels, d.labels);
            final_metrics.level = classifier.chosen_level;
            emit(make_train_report(classifier, d, final_metrics), train_report, out);
            if (!dump_hierarchy.empty()) {
                emit(classifier.hierarchy, dump_hierarchy, out);
            }
        } else if (predict->parsed()) {
            const auto classifier = load_classifier(model_in);
            const Dataset d = predict_data.load();
            const auto predicted = mlsvm_predict(classifier, d.points);
            std::ofstream file(predictions_out);
            if (!file) {
                throw Error(fmt::format("cannot write '{}'", predictions_out));
            }
            file << "label,decision\n";
            for (std::size_t i = 0; i < predicted.labels.size(); ++i) {
                file << fmt::format("{},{}\n", predicted.labels[i], predicted.decisions[i]);
            }
            auto metrics = compute_metrics(predicted.labels, d.labels);
            metrics.level = classifier.chosen_level;
            emit({{"report", {{"kind", "predict"}, {"metrics", metrics}}}}, predict_report, out);
        } else if (cv->parsed()) {
            const Config cfg = cv_cfg.resolve();
            const Dataset d = cv_data.load();
            const auto result = cross_validate(d, cfg, folds, repeats);
            emit(make_cv_report(result, cfg, d, folds, repeats), cv_report, out);
        } else if (gen->parsed()) {
            Dataset d;
            if (kind == "mixture") {
                d = gen_gaussian_mixture(gen_n, minority, gen_dims, separation, gen_seed);
            } else {
                d = gen_synthetic(*parse_synthetic_kind(kind), gen_n, gen_seed);
            }
            write_csv(d, gen_out);
        } else if (knn->parsed()) {
            Config cfg;
            cfg.coarsening.k_nn = knn_k;
            cfg.seed = knn_seed;
            cfg.cache_dir = cache_out;
            const auto written = precompute_class_graphs(knn_data.load(), cfg);
            out << fmt::format("wrote {} class graph(s) to {}\n", written, cache_out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace mlsvm::cli
