#include "generators.hpp"

#include "mlsvm/coarsen.hpp"
#include "mlsvm/error.hpp"
#include "mlsvm/refine.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace {

using namespace mlsvm;
namespace gen = mlsvm::testing;

ProximityGraph path3() { return ProximityGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

// A model whose label is constant: no support vectors, bias +-1.
SvmModel constant_model(int label, std::size_t dims) {
    SvmModel m;
    m.support_vectors = Matrix(0, dims);
    m.bias = label;
    return m;
}

EnsembleMember member_at(int label, std::vector<double> midpoint) {
    EnsembleMember m;
    m.model = constant_model(label, midpoint.size());
    m.midpoint = std::move(midpoint);
    return m;
}

TEST(Names, RoundTrip) {
    for (const auto d : {Disaggregation::full, Disaggregation::k_distant, Disaggregation::sampled}) {
        EXPECT_EQ(parse_disaggregation(to_string(d)), d);
    }
    for (const auto v : {VotingRule::distance_weighted, VotingRule::majority}) {
        EXPECT_EQ(parse_voting_rule(to_string(v)), v);
    }
    EXPECT_FALSE(parse_disaggregation("all").has_value());
}

TEST(UncoarsenIis, ZeroNeighborsKeepsSupport) {
    const std::vector<std::size_t> sv{2, 0};
    EXPECT_EQ(uncoarsen_iis(sv, path3(), 0), (std::vector<std::size_t>{0, 2}));
}

TEST(UncoarsenIis, SmallNeighborhoodTakesAll) {
    const ProximityGraph star(5, {{0, 1, 1.0}, {0, 2, 2.0}, {0, 3, 3.0}});
    const std::vector<std::size_t> sv{0};
    EXPECT_EQ(uncoarsen_iis(sv, star, 5), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(UncoarsenIis, PicksNearestNeighbor) {
    // weights are inverse distances: b is closer to c than to a
    const ProximityGraph path(3, {{0, 1, 1.0}, {1, 2, 2.0}});
    const std::vector<std::size_t> sv{1};
    EXPECT_EQ(uncoarsen_iis(sv, path, 1), (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(uncoarsen_iis(sv, path3(), 1), (std::vector<std::size_t>{0, 1}));
}

TEST(UncoarsenAmg, FullModeTakesColumnSupport) {
    const std::vector<std::size_t> seeds{1};
    const auto p = build_interpolation(path3(), seeds, 1);
    const std::vector<std::size_t> sv{0};
    EXPECT_EQ(uncoarsen_amg(sv, p, {}), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(UncoarsenAmg, SampledBudgetOneKeepsSeed) {
    const std::vector<std::size_t> seeds{1};
    const auto p = build_interpolation(path3(), seeds, 1);
    DisaggregationOptions o;
    o.mode = Disaggregation::sampled;
    o.budget = 1;
    const std::vector<std::size_t> sv{0};
    EXPECT_EQ(uncoarsen_amg(sv, p, o), (std::vector<std::size_t>{1}));
}

TEST(UncoarsenAmg, SampledPrefersSmallEntries) {
    // aggregate seeded at 0 with members 1 (0.3) and 2 (0.7)
    const InterpolationMatrix p({{{0, 1.0}}, {{0, 0.3}, {1, 0.7}}, {{0, 0.7}, {1, 0.3}}, {{1, 1.0}}}, {0, 3});
    DisaggregationOptions o;
    o.mode = Disaggregation::sampled;
    o.budget = 2;
    const std::vector<std::size_t> sv{0};
    EXPECT_EQ(uncoarsen_amg(sv, p, o), (std::vector<std::size_t>{0, 1}));
}

TEST(UncoarsenAmg, DistantAddsGraphNeighbors) {
    const ProximityGraph path5(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
    const InterpolationMatrix p({{{0, 1.0}}, {{1, 1.0}}, {{2, 1.0}}, {{3, 1.0}}, {{4, 1.0}}}, {0, 1, 2, 3, 4});
    DisaggregationOptions o;
    o.mode = Disaggregation::k_distant;
    const std::vector<std::size_t> sv{2};
    EXPECT_EQ(uncoarsen_amg(sv, p, o, &path5), (std::vector<std::size_t>{1, 2, 3}));
    o.distance = 2;
    EXPECT_EQ(uncoarsen_amg(sv, p, o, &path5), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    o.distance = 3;
    EXPECT_THROW(static_cast<void>(uncoarsen_amg(sv, p, o, &path5)), InvalidArgument);
}

TEST(UncoarsenAmg, FullModeEqualsUnionOfColumnsOnRandomHierarchies) {
    std::mt19937_64 rng(91);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 20 + rng() % 200;
        const auto g = gen::random_graph(rng, n, 4.0 / double(n));
        const auto s = select_seeds(g, future_volumes(g), 0.5, 2.0);
        const auto p = build_interpolation(g, s.seeds, 1 + rng() % 3);
        std::vector<std::size_t> sv;
        for (std::size_t q = 0; q < p.cols(); ++q) {
            if (rng() % 3 == 0) {
                sv.push_back(q);
            }
        }
        std::set<std::size_t> expected;
        for (std::size_t i = 0; i < p.rows(); ++i) {
            for (const auto q : sv) {
                if (p.at(i, q) != 0.0) {
                    expected.insert(i);
                }
            }
        }
        const auto got = uncoarsen_amg(sv, p, {});
        EXPECT_EQ(got, std::vector<std::size_t>(expected.begin(), expected.end()));
    }
}

TEST(Midpoint, HandValues) {
    const std::vector<double> a{0.0, 0.0};
    const std::vector<double> b{2.0, 0.0};
    EXPECT_EQ(weighted_midpoint(a, b, 1.0, 3.0), (std::vector<double>{1.5, 0.0}));
    EXPECT_EQ(weighted_midpoint(a, b, 2.0, 2.0), (std::vector<double>{1.0, 0.0}));
    const auto near_a = weighted_midpoint(a, b, 1e9, 1.0);
    EXPECT_NEAR(near_a[0], 0.0, 1e-8);
    EXPECT_THROW(static_cast<void>(weighted_midpoint(a, b, 1.0, 0.0)), InvalidArgument);
}

TEST(Midpoint, LiesOnSegment) {
    std::mt19937_64 rng(92);
    for (int t = 0; t < 200; ++t) {
        const auto c = gen::random_points(rng, 2, 3, 5.0);
        const auto v = gen::random_positive(rng, 2, 0.01, 10.0);
        const auto x = weighted_midpoint(c.row(0), c.row(1), v[0], v[1]);
        const double lambda = v[1] / (v[0] + v[1]);
        for (std::size_t d = 0; d < 3; ++d) {
            EXPECT_NEAR(x[d], c(0, d) + lambda * (c(1, d) - c(0, d)), 1e-12);
        }
    }
}

TEST(Voting, DistanceWeightedHandExample) {
    ModelEnsemble e;
    e.members = {member_at(1, {1.0}), member_at(-1, {-3.0})};
    const std::vector<double> t{0.0};
    EXPECT_NEAR(ensemble_vote(e, t, VotingRule::distance_weighted), (1.0 - 1.0 / 3.0) / (1.0 + 1.0 / 3.0), 1e-15);
    EXPECT_EQ(ensemble_predict(e, t, VotingRule::distance_weighted), 1);
    EXPECT_EQ(ensemble_predict(e, t, VotingRule::majority), 1);
}

TEST(Voting, UnanimousEnsemble) {
    ModelEnsemble e;
    e.members = {member_at(-1, {0.0, 1.0}), member_at(-1, {2.0, 1.0}), member_at(-1, {5.0, -1.0})};
    const std::vector<double> t{0.3, 0.3};
    EXPECT_EQ(ensemble_predict(e, t, VotingRule::distance_weighted), -1);
    EXPECT_EQ(ensemble_predict(e, t, VotingRule::majority), -1);
}

TEST(Voting, ExactHitReturnsThatLabel) {
    ModelEnsemble e;
    e.members = {member_at(1, {1.0}), member_at(-1, {0.0}), member_at(1, {0.5})};
    const std::vector<double> t{0.0};
    EXPECT_EQ(ensemble_vote(e, t, VotingRule::distance_weighted), -1.0);
}

TEST(Voting, SingleModelReducesToItsLabel) {
    std::mt19937_64 rng(93);
    std::mt19937_64 data_rng(94);
    for (int t = 0; t < 50; ++t) {
        const auto pts = gen::random_points(data_rng, 12, 2);
        const auto y = gen::random_labels(data_rng, 12);
        const auto m = smo_train(pts, y, 1.0, std::vector<double>(12, 1.0), 1.0).model;
        ModelEnsemble e;
        EnsembleMember member;
        member.model = m;
        member.midpoint = {0.0, 0.0};
        e.members.push_back(member);
        const auto probe = gen::random_points(rng, 1, 2);
        for (const auto rule : {VotingRule::distance_weighted, VotingRule::majority}) {
            EXPECT_EQ(ensemble_predict(e, probe.row(0), rule), m.predict(probe.row(0)));
        }
    }
}

TEST(Voting, InvariantUnderPermutation) {
    std::mt19937_64 rng(95);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int t = 0; t < 500; ++t) {
        ModelEnsemble e;
        const std::size_t k = 1 + rng() % 6;
        const auto mids = gen::random_points(rng, k, 2, 3.0);
        for (std::size_t m = 0; m < k; ++m) {
            e.members.push_back(member_at(coin(rng) ? 1 : -1, {mids(m, 0), mids(m, 1)}));
        }
        const auto probe = gen::random_points(rng, 1, 2, 3.0);
        const int before = ensemble_predict(e, probe.row(0), VotingRule::distance_weighted);
        const int majority = ensemble_predict(e, probe.row(0), VotingRule::majority);
        std::shuffle(e.members.begin(), e.members.end(), rng);
        EXPECT_EQ(ensemble_predict(e, probe.row(0), VotingRule::distance_weighted), before);
        EXPECT_EQ(ensemble_predict(e, probe.row(0), VotingRule::majority), majority);
    }
}

TEST(Voting, Errors) {
    ModelEnsemble e;
    const std::vector<double> t{0.0};
    EXPECT_THROW(static_cast<void>(ensemble_vote(e, t, VotingRule::majority)), InvalidArgument);
    e.members = {member_at(1, {0.0, 0.0})};
    EXPECT_THROW(static_cast<void>(ensemble_vote(e, t, VotingRule::distance_weighted)), InvalidArgument);
}

TEST(Predictor, DelegatesToModelOrEnsemble) {
    const Predictor single = constant_model(-1, 1);
    const std::vector<double> t{0.0};
    EXPECT_EQ(predictor_label(single, t), -1);
    EXPECT_EQ(predictor_decision(single, t), -1.0);
    ModelEnsemble e;
    e.rule = VotingRule::majority;
    e.members = {member_at(1, {0.0}), member_at(1, {1.0}), member_at(-1, {2.0})};
    const Predictor ensemble = e;
    EXPECT_NEAR(predictor_decision(ensemble, t), 1.0 / 3.0, 1e-15);
    EXPECT_EQ(support_vector_count(ensemble), 0u);
}

TEST(Pairs, SymmetricLayoutGivesTwoPairs) {
    const Matrix pos(2, 2, std::vector<double>{0, 0, 0, 10});
    const Matrix neg(2, 2, std::vector<double>{3, 0, 3, 10});
    const auto pairs = nearest_part_pairs(pos, neg);
    EXPECT_EQ(pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
}

TEST(Pairs, AtMostSumOfParts) {
    std::mt19937_64 rng(96);
    for (int t = 0; t < 200; ++t) {
        const std::size_t a = 1 + rng() % 6;
        const std::size_t b = 1 + rng() % 6;
        const auto pairs = nearest_part_pairs(gen::random_points(rng, a, 2), gen::random_points(rng, b, 2));
        EXPECT_LE(pairs.size(), a + b);
        EXPECT_GE(pairs.size(), std::max(a, b));
        EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end()));
        EXPECT_EQ(std::adjacent_find(pairs.begin(), pairs.end()), pairs.end());
    }
}

TEST(Pairs, PartCount) {
    EXPECT_EQ(part_count(12000, 1000), 12u);
    EXPECT_EQ(part_count(1200, 1000), 2u);
    EXPECT_EQ(part_count(3, 1000), 2u);
    EXPECT_EQ(part_count(1, 1000), 1u);
    EXPECT_EQ(part_count(2600, 1000), 3u);
}

struct Layout {
    ClassSet positive;
    ClassSet negative;
    TrainingData finest;
};

ClassSet class_set(const Matrix& points) {
    ClassSet c;
    c.points = points;
    c.volumes.assign(points.rows(), 1.0);
    c.graph = build_knn_graph(points, 5);
    c.level_index.resize(points.rows());
    std::iota(c.level_index.begin(), c.level_index.end(), std::size_t{0});
    return c;
}

// Per class, clusters centered at (x, y) for every y in `rows`.
Layout clustered_layout(std::uint64_t seed, std::size_t per_cluster, const std::vector<double>& rows) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.5);
    Matrix pos, neg;
    for (const double y : rows) {
        for (std::size_t i = 0; i < per_cluster; ++i) {
            pos.append_row(std::vector<double>{g(rng), y + g(rng)});
            neg.append_row(std::vector<double>{3.0 + g(rng), y + g(rng)});
        }
    }
    Layout l{class_set(pos), class_set(neg), {}};
    for (const auto* m : {&pos, &neg}) {
        for (std::size_t i = 0; i < m->rows(); ++i) {
            l.finest.points.append_row(m->row(i));
            l.finest.labels.push_back(m == &pos ? 1 : -1);
        }
    }
    return l;
}

TEST(RefineLevel, SmallSetRunsSecondSearchStage) {
    const auto l = clustered_layout(97, 50, {0.0});
    RefineOptions o;
    o.validation.finest = &l.finest;
    const auto out = refine_level(l.positive, l.negative, ParamPoint{0.0, 0.0}, Predictor{}, o);
    EXPECT_FALSE(out.ensemble);
    EXPECT_TRUE(out.retrained);
    EXPECT_EQ(out.trainings, 13u);
    EXPECT_TRUE(std::holds_alternative<SvmModel>(out.predictor));
    EXPECT_GT(out.validation.gmean, 0.9);
    EXPECT_LE(std::abs(out.params.log2_c), 2.0);
    EXPECT_FALSE(out.positive_support.empty());
    EXPECT_FALSE(out.negative_support.empty());
}

TEST(RefineLevel, LargeSetTrainsOneModelPerPair) {
    const auto l = clustered_layout(98, 40, {0.0, 10.0});
    RefineOptions o;
    o.qt = 100;
    o.part_size = 40;
    o.validation.finest = &l.finest;
    const ParamPoint inherited{1.0, -1.0};
    const auto out = refine_level(l.positive, l.negative, inherited, Predictor{}, o);
    ASSERT_TRUE(out.ensemble);
    const auto& e = std::get<ModelEnsemble>(out.predictor);
    EXPECT_EQ(e.members.size(), 2u);
    EXPECT_EQ(out.trainings, e.members.size());
    EXPECT_EQ(out.params, inherited);
    for (const auto& m : e.members) {
        EXPECT_DOUBLE_EQ(m.model.C, inherited.C());
        EXPECT_DOUBLE_EQ(m.model.gamma, inherited.gamma());
        // each pair sits in one row of clusters
        EXPECT_NEAR(m.positive_centroid[1], m.negative_centroid[1], 1.0);
        EXPECT_NEAR(m.midpoint[0], 1.5, 0.5);
    }
    EXPECT_GT(out.validation.gmean, 0.9);
}

TEST(RefineLevel, LargeSetIsThreadIndependent) {
    const auto l = clustered_layout(99, 40, {0.0, 10.0, 20.0});
    RefineOptions o;
    o.qt = 100;
    o.part_size = 40;
    o.validation.finest = &l.finest;
    const auto serial = refine_level(l.positive, l.negative, ParamPoint{0.0, 0.0}, Predictor{}, o);
    o.training.threads = 4;
    const auto threaded = refine_level(l.positive, l.negative, ParamPoint{0.0, 0.0}, Predictor{}, o);
    EXPECT_EQ(std::get<ModelEnsemble>(serial.predictor), std::get<ModelEnsemble>(threaded.predictor));
    EXPECT_EQ(serial.positive_support, threaded.positive_support);
}

TEST(RefineLevel, MissingClassKeepsFallback) {
    const auto l = clustered_layout(100, 20, {0.0});
    RefineOptions o;
    o.validation.finest = &l.finest;
    const Predictor fallback = constant_model(1, 2);
    const auto out = refine_level(l.positive, ClassSet{}, ParamPoint{0.0, 0.0}, fallback, o);
    EXPECT_FALSE(out.retrained);
    EXPECT_EQ(out.trainings, 0u);
    EXPECT_EQ(std::get<SvmModel>(out.predictor), std::get<SvmModel>(fallback));
}

}  // namespace
