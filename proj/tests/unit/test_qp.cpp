#include "generators.hpp"
#include "qp_oracle.hpp"

#include "mlsvm/error.hpp"
#include "mlsvm/kernel.hpp"
#include "mlsvm/svm.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace {

using namespace mlsvm;
namespace gen = mlsvm::testing;

const double kTwoPointAlpha = 1.0 / (1.0 - std::exp(-1.0));

SmoOptions tight() {
    SmoOptions o;
    o.tolerance = 1e-9;
    return o;
}

double label_sum(std::span<const double> alpha, std::span<const int> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        s += alpha[i] * y[i];
    }
    return s;
}

struct Instance {
    Matrix points;
    std::vector<int> labels;
    std::vector<double> bounds;
    double gamma;
};

Instance random_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + rng() % 11;
    const std::size_t d = 1 + rng() % 4;
    Instance in;
    in.points = gen::random_points(rng, n, d, 2.0);
    in.labels = gen::random_labels(rng, n);
    in.bounds = gen::random_positive(rng, n, 0.05, 5.0);
    in.gamma = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    return in;
}

TEST(RbfKernel, HandValues) {
    const std::vector<double> a{0.0};
    const std::vector<double> b{1.0};
    EXPECT_EQ(rbf_kernel(a, a, 1.0), 1.0);
    EXPECT_NEAR(rbf_kernel(a, b, 1.0), 0.36787944117144233, 1e-15);
}

TEST(RbfKernel, DecreasesWithGamma) {
    const std::vector<double> a{0.0, 1.0};
    const std::vector<double> b{0.5, -1.0};
    double previous = 1.0;
    for (const double gamma : {0.1, 1.0, 10.0, 100.0}) {
        const double k = rbf_kernel(a, b, gamma);
        EXPECT_LT(k, previous);
        previous = k;
    }
    EXPECT_LT(previous, 1e-100);
}

TEST(RbfKernel, SymmetricAndPositiveOnRandomPairs) {
    std::mt19937_64 rng(51);
    for (int t = 0; t < 200; ++t) {
        const auto p = gen::random_points(rng, 2, 1 + t % 6, 3.0);
        const double gamma = 0.01 + static_cast<double>(t % 10);
        const double k1 = rbf_kernel(p.row(0), p.row(1), gamma);
        EXPECT_EQ(k1, rbf_kernel(p.row(1), p.row(0), gamma));
        EXPECT_GT(k1, 0.0);
        EXPECT_LE(k1, 1.0);
    }
}

TEST(RbfKernel, RejectsBadArguments) {
    const std::vector<double> a{0.0};
    const std::vector<double> b{1.0, 2.0};
    EXPECT_THROW(static_cast<void>(rbf_kernel(a, b, 1.0)), InvalidArgument);
    EXPECT_THROW(static_cast<void>(rbf_kernel(a, a, 0.0)), InvalidArgument);
}

TEST(KernelCache, RowsMatchKernelWithTinyBudget) {
    std::mt19937_64 rng(52);
    const auto p = gen::random_points(rng, 20, 3);
    KernelCache cache(p, 0.7, 1);
    for (const std::size_t i : {0u, 5u, 0u, 19u, 5u}) {
        const auto row = cache.row(i);
        for (std::size_t j = 0; j < 20; ++j) {
            EXPECT_EQ(row[j], rbf_kernel(p.row(i), p.row(j), 0.7));
        }
    }
}

TEST(Smo, TwoPointClosedForm) {
    const Matrix x(2, 1, std::vector<double>{0.0, 1.0});
    const std::vector<int> y{1, -1};
    const std::vector<double> w{1.0, 1.0};
    const auto r = smo_train(x, y, 10.0, w, 1.0, tight());
    ASSERT_EQ(r.alpha.size(), 2u);
    EXPECT_NEAR(r.alpha[0], kTwoPointAlpha, 1e-6);
    EXPECT_NEAR(r.alpha[1], kTwoPointAlpha, 1e-6);
    EXPECT_NEAR(r.model.bias, 0.0, 1e-6);
    EXPECT_TRUE(r.model.converged);
}

TEST(Smo, TwoPointDecisionValues) {
    const Matrix x(2, 1, std::vector<double>{0.0, 1.0});
    const std::vector<int> y{1, -1};
    const std::vector<double> w{1.0, 1.0};
    const auto m = smo_train(x, y, 10.0, w, 1.0, tight()).model;
    const std::vector<double> at0{0.0};
    const std::vector<double> mid{0.5};
    EXPECT_NEAR(m.decision(at0), 1.0, 1e-6);
    EXPECT_EQ(m.predict(at0), 1);
    EXPECT_NEAR(m.decision(mid), 0.0, 1e-9);
    SvmModel symmetric = m;
    symmetric.bias = 0.0;
    symmetric.coefficients = {kTwoPointAlpha, -kTwoPointAlpha};
    EXPECT_EQ(symmetric.decision(mid), 0.0);
    EXPECT_EQ(symmetric.predict(mid), 1);
}

TEST(Smo, EmptyModelReturnsBias) {
    SvmModel m;
    m.support_vectors = Matrix(0, 2);
    m.bias = -0.25;
    const std::vector<double> x{3.0, 4.0};
    EXPECT_EQ(m.decision(x), -0.25);
    EXPECT_EQ(m.predict(x), -1);
    const std::vector<double> wrong{1.0};
    EXPECT_THROW(static_cast<void>(m.decision(wrong)), InvalidArgument);
}

TEST(Smo, SeparableSquareHasNoTrainingError) {
    const Matrix x(4, 2, std::vector<double>{0, 0, 0, 1, 1, 0, 1, 1});
    const std::vector<int> y{1, 1, -1, -1};
    const std::vector<double> w(4, 1.0);
    const auto m = smo_train(x, y, 1e6, w, 1.0, tight()).model;
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(m.predict(x.row(i)), y[i]);
    }
}

TEST(Smo, MatchesOracleOnRandomInstances) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto in = random_instance(seed);
        const auto r = smo_train(in.points, in.labels, 1.0, in.bounds, in.gamma, tight());
        const auto oracle = gen::qp_oracle(in.points, in.labels, in.bounds, in.gamma);
        const double smo_obj = dual_objective(in.points, in.labels, r.alpha, in.gamma);
        EXPECT_NEAR(smo_obj, oracle.objective, 1e-6) << "seed " << seed;
        EXPECT_GE(smo_obj, oracle.objective - 1e-6) << "seed " << seed;
        EXPECT_NEAR(label_sum(r.alpha, in.labels), 0.0, 1e-8) << "seed " << seed;
        for (std::size_t i = 0; i < r.alpha.size(); ++i) {
            EXPECT_GE(r.alpha[i], 0.0);
            EXPECT_LE(r.alpha[i], in.bounds[i]);
        }
        EXPECT_LE(r.kkt_violation, 1e-9) << "seed " << seed;
    }
}

TEST(Smo, StoresOnlyPositiveAlphas) {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto in = random_instance(seed);
        const auto r = smo_train(in.points, in.labels, 1.0, in.bounds, in.gamma, tight());
        std::size_t positive = 0;
        for (std::size_t i = 0; i < r.alpha.size(); ++i) {
            if (r.alpha[i] > 0.0) {
                ++positive;
            }
        }
        EXPECT_EQ(r.model.support_vector_count(), positive);
        EXPECT_EQ(r.support_indices.size(), positive);
        for (std::size_t k = 0; k < r.support_indices.size(); ++k) {
            const auto i = r.support_indices[k];
            EXPECT_DOUBLE_EQ(r.model.coefficients[k], r.alpha[i] * in.labels[i]);
        }
    }
}

TEST(Smo, PermutationInvariantDecisions) {
    std::mt19937_64 rng(53);
    for (std::uint64_t seed = 200; seed < 230; ++seed) {
        const auto in = random_instance(seed);
        std::vector<std::size_t> order(in.labels.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> y2;
        std::vector<double> b2;
        for (const auto i : order) {
            y2.push_back(in.labels[i]);
            b2.push_back(in.bounds[i]);
        }
        const auto m1 = smo_train(in.points, in.labels, 1.0, in.bounds, in.gamma, tight()).model;
        const auto m2 = smo_train(in.points.select_rows(order), y2, 1.0, b2, in.gamma, tight()).model;
        const auto probes = gen::random_points(rng, 20, in.points.cols(), 2.0);
        for (std::size_t p = 0; p < probes.rows(); ++p) {
            EXPECT_NEAR(m1.decision(probes.row(p)), m2.decision(probes.row(p)), 1e-8) << "seed " << seed;
        }
    }
}

TEST(Smo, ThreadedDecisionValuesMatchSerial) {
    std::mt19937_64 rng(54);
    const auto in = random_instance(7);
    const auto m = smo_train(in.points, in.labels, 1.0, in.bounds, in.gamma).model;
    const auto probes = gen::random_points(rng, 101, in.points.cols());
    EXPECT_EQ(decision_values(m, probes, 1), decision_values(m, probes, 4));
}

TEST(Smo, IterationCapFlagsNonConvergence) {
    const auto in = random_instance(3);
    SmoOptions o = tight();
    o.max_iterations = 1;
    const auto r = smo_train(in.points, in.labels, 1.0, in.bounds, in.gamma, o);
    if (r.model.iterations >= 1 && r.kkt_violation > o.tolerance) {
        EXPECT_FALSE(r.model.converged);
    }
}

TEST(QpOracle, TwoPointClosedForm) {
    const Matrix x(2, 1, std::vector<double>{0.0, 1.0});
    const std::vector<int> y{1, -1};
    const std::vector<double> bounds{10.0, 10.0};
    const auto s = gen::qp_oracle(x, y, bounds, 1.0);
    EXPECT_NEAR(s.alpha[0], kTwoPointAlpha, 1e-6);
    EXPECT_NEAR(s.alpha[1], kTwoPointAlpha, 1e-6);
}

TEST(QpOracle, CollapsedBoxGivesZero) {
    const auto in = random_instance(9);
    const std::vector<double> bounds(in.labels.size(), 0.0);
    const auto s = gen::qp_oracle(in.points, in.labels, bounds, in.gamma);
    for (const double a : s.alpha) {
        EXPECT_EQ(a, 0.0);
    }
}

TEST(QpOracle, RejectsLargeProblems) {
    std::mt19937_64 rng(55);
    const std::size_t n = gen::kQpOracleMaxPoints + 1;
    const auto p = gen::random_points(rng, n, 2);
    const auto y = gen::random_labels(rng, n);
    const std::vector<double> bounds(n, 1.0);
    EXPECT_THROW(static_cast<void>(gen::qp_oracle(p, y, bounds, 1.0)), InvalidArgument);
}

TEST(QpOracle, ProjectionIsFeasible) {
    std::mt19937_64 rng(56);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng() % 20;
        const auto y = gen::random_labels(rng, n);
        const auto bounds = gen::random_positive(rng, n, 0.1, 2.0);
        std::vector<double> v(n);
        for (auto& x : v) {
            x = g(rng);
        }
        const auto a = gen::project_feasible(v, y, bounds);
        EXPECT_NEAR(label_sum(a, y), 0.0, 1e-10);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_GE(a[i], 0.0);
            EXPECT_LE(a[i], bounds[i]);
        }
    }
}

TEST(ClassWeights, PerPointHandValues) {
    const std::vector<int> y{1, 1};
    const std::vector<double> v{1.0, 3.0};
    const auto w = class_weights(y, v, WeightScheme::per_point);
    EXPECT_DOUBLE_EQ(w[0], 0.0625);
    EXPECT_DOUBLE_EQ(w[1], 0.1875);
    EXPECT_DOUBLE_EQ(w[0] + w[1], 0.25);
}

TEST(ClassWeights, UnitVolumesPerPointIsInverseSquare) {
    const std::vector<int> y{1, 1, 1, 1, -1, -1};
    const std::vector<double> v(6, 1.0);
    const auto w = class_weights(y, v, WeightScheme::per_point);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(w[i], 1.0 / 16.0);
    }
    EXPECT_DOUBLE_EQ(w[4], 0.25);
    EXPECT_DOUBLE_EQ(w[5], 0.25);
}

TEST(ClassWeights, PerClassReducesToInverseCounts) {
    const std::vector<int> y{1, -1, -1, -1};
    const std::vector<double> v(4, 1.0);
    const auto w = class_weights(y, v, WeightScheme::per_class);
    EXPECT_DOUBLE_EQ(w[0], 1.0);
    EXPECT_DOUBLE_EQ(w[1], 1.0 / 3.0);
    const auto u = class_weights(y, v, WeightScheme::uniform);
    EXPECT_EQ(u, std::vector<double>(4, 1.0));
}

TEST(ClassWeights, PerPointSumsToClassWeight) {
    std::mt19937_64 rng(57);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng() % 200;
        const auto y = gen::random_labels(rng, n);
        const auto v = gen::random_positive(rng, n, 0.01, 100.0);
        const auto w = class_weights(y, v, WeightScheme::per_point);
        for (const int label : {1, -1}) {
            double volume = 0.0;
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (y[i] == label) {
                    volume += v[i];
                    sum += w[i];
                }
            }
            EXPECT_NEAR(sum, 1.0 / volume, 1e-12);
        }
    }
}

TEST(PenaltyScale, MeanOneAndProportional) {
    const std::vector<double> w{0.5, 1.5, 4.0};
    const auto s = penalty_scale(w);
    EXPECT_DOUBLE_EQ((s[0] + s[1] + s[2]) / 3.0, 1.0);
    EXPECT_DOUBLE_EQ(s[1] / s[0], 3.0);
}

}  // namespace
