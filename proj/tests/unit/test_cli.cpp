#include "cli.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;
using mlsvm::cli::run_cli;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "mlsvm");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mlsvm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    [[nodiscard]] std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

TEST_F(CliTest, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, mlsvm::cli::kExitOk);
    EXPECT_NE(r.out.find("train"), std::string::npos);
}

TEST_F(CliTest, MissingDataIsUsageError) {
    const auto r = run({"train", "--model-out", path("m.txt")});
    EXPECT_EQ(r.code, mlsvm::cli::kExitUsage);
    EXPECT_NE(r.err.find("--data"), std::string::npos);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(CliTest, UnknownFlagAndSubcommandAreUsageErrors) {
    EXPECT_EQ(run({"train", "--data", "x.csv", "--model-out", "m", "--bogus"}).code, mlsvm::cli::kExitUsage);
    EXPECT_EQ(run({"fit"}).code, mlsvm::cli::kExitUsage);
    EXPECT_EQ(run({}).code, mlsvm::cli::kExitUsage);
}

TEST_F(CliTest, CrossFoldValidationWithFractionIsUsageError) {
    ASSERT_EQ(run({"gen", "--kind", "twonorm", "--n", "200", "--seed", "1", "--out", path("t.csv")}).code, 0);
    const auto r = run({"cv", "--data", path("t.csv"), "--seed", "1", "--validation", "cckf", "--val-fraction",
                        "0.2"});
    EXPECT_EQ(r.code, mlsvm::cli::kExitUsage);
}

TEST_F(CliTest, OutOfRangeParameterNeedsForce) {
    ASSERT_EQ(run({"gen", "--kind", "twonorm", "--n", "200", "--seed", "1", "--out", path("t.csv")}).code, 0);
    EXPECT_EQ(run({"train", "--data", path("t.csv"), "--model-out", path("m.txt"), "--Q", "0.3"}).code,
              mlsvm::cli::kExitUsage);
    EXPECT_EQ(run({"train", "--data", path("t.csv"), "--model-out", path("m.txt"), "--Q", "0.3", "--force",
                   "--report", path("r.json")})
                  .code,
              mlsvm::cli::kExitOk);
}

TEST_F(CliTest, CrossValidationNeedsSeed) {
    ASSERT_EQ(run({"gen", "--kind", "twonorm", "--n", "200", "--seed", "1", "--out", path("t.csv")}).code, 0);
    EXPECT_EQ(run({"cv", "--data", path("t.csv")}).code, mlsvm::cli::kExitUsage);
}

TEST_F(CliTest, MissingFileIsRuntimeError) {
    const auto r = run({"train", "--data", path("absent.csv"), "--model-out", path("m.txt")});
    EXPECT_EQ(r.code, mlsvm::cli::kExitRuntime);
    EXPECT_NE(r.err.find("absent.csv"), std::string::npos);
}

TEST_F(CliTest, TrainThenPredict) {
    ASSERT_EQ(run({"gen", "--kind", "ringnorm", "--n", "800", "--seed", "3", "--out", path("r.csv")}).code, 0);
    const auto train = run({"train", "--data", path("r.csv"), "--model-out", path("m.txt"), "--report",
                            path("train.json"), "--dump-hierarchy", path("h.json")});
    ASSERT_EQ(train.code, 0) << train.err;
    const auto report = read_json(path("train.json"));
    EXPECT_EQ(report["report"]["kind"], "train");
    EXPECT_TRUE(report["report"]["final"].contains("gmean"));
    EXPECT_TRUE(read_json(path("h.json")).contains("levels"));

    const auto predict = run({"predict", "--model", path("m.txt"), "--data", path("r.csv"), "--out",
                              path("p.csv"), "--report", path("predict.json")});
    ASSERT_EQ(predict.code, 0) << predict.err;
    EXPECT_GE(read_json(path("predict.json"))["report"]["metrics"]["acc"].get<double>(), 0.5);
    std::ifstream in(path("p.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "label,decision");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        ASSERT_NE(comma, std::string::npos);
        const int label = std::stoi(line.substr(0, comma));
        EXPECT_TRUE(label == 1 || label == -1);
        EXPECT_TRUE(std::isfinite(std::stod(line.substr(comma + 1))));
        ++rows;
    }
    EXPECT_EQ(rows, 800u);
}

TEST_F(CliTest, CrossValidationReportIsReproducible) {
    ASSERT_EQ(run({"gen", "--kind", "twonorm", "--n", "600", "--seed", "1", "--out", path("t.csv")}).code, 0);
    const std::vector<std::string> args{"cv", "--data", path("t.csv"), "--folds", "3", "--seed", "4", "--report"};
    auto first = args;
    first.push_back(path("a.json"));
    auto second = args;
    second.push_back(path("b.json"));
    second.insert(second.end(), {"--threads", "3"});
    ASSERT_EQ(run(first).code, 0);
    ASSERT_EQ(run(second).code, 0);
    const auto a = read_json(path("a.json"));
    const auto b = read_json(path("b.json"));
    EXPECT_TRUE(a["report"]["gmean"].contains("mean"));
    EXPECT_EQ(a["report"]["per_fold"].size(), 3u);
    EXPECT_EQ(a["report"].dump(), b["report"].dump());
}

TEST_F(CliTest, MixtureAndKnnCache) {
    ASSERT_EQ(run({"gen", "--kind", "mixture", "--n", "400", "--seed", "2", "--minority", "0.1", "--dims", "3",
                   "--out", path("m.csv")})
                  .code,
              0);
    const auto r = run({"knn", "--data", path("m.csv"), "--k", "5", "--cache-out", path("cache")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("wrote 2"), std::string::npos);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(path("cache"))) {
        ++files;
    }
    EXPECT_EQ(files, 2u);
}

}  // namespace
