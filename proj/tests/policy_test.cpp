#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "netmarl/policy.hpp"
#include "netmarl/rollout.hpp"
#include "netmarl/warehouse.hpp"
#include "test_util.hpp"

using namespace netmarl;
using namespace netmarl::testing;

namespace {

RbfCenters single_center(std::vector<double> c) {
    RbfCenters rc;
    rc.count = 1;
    rc.dim = c.size();
    rc.points = std::move(c);
    return rc;
}

}  // namespace

TEST(ParamLayout, DimensionsFollowStateGraph) {
    DirectedGraph s(3, {{0, 1}, {0, 2}, {1, 2}});
    ParamLayout layout(s, 8);
    EXPECT_EQ(layout.dim(0), 3u * 8u);
    EXPECT_EQ(layout.dim(1), 2u * 8u);
    EXPECT_EQ(layout.dim(2), 1u * 8u);
    EXPECT_EQ(layout.total_dim(), 48u);
    EXPECT_EQ(layout.offset(2), 40u);
    EXPECT_THROW(ParamLayout(s, 0), std::invalid_argument);
    std::vector<double> theta(48);
    EXPECT_EQ(layout.slice(std::span<const double>(theta), 1).size(), 16u);
    std::vector<double> wrong(47);
    EXPECT_THROW(layout.slice(std::span<const double>(wrong), 1), std::invalid_argument);
}

TEST(RbfScores, ZeroParametersGiveZeroScores) {
    auto centers = RbfCenters::halton(8, 3, ObservationRange{});
    std::vector<double> obs{0.3, 1.2, -0.4}, theta(16, 0.0);
    for (double z : rbf_scores(obs, centers, theta)) EXPECT_EQ(z, 0.0);
}

TEST(RbfScores, ObservationAtSingleCenterGivesZero) {
    auto centers = single_center({0.5, -0.2});
    std::vector<double> obs{0.5, -0.2}, theta{3.0, -7.0, 11.0};
    for (double z : rbf_scores(obs, centers, theta)) EXPECT_EQ(z, 0.0);
}

TEST(RbfScores, MatchesTwoLoopOracle) {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t dim = 1 + trial % 4, count = 1 + trial % 9, dest = 1 + trial % 3;
        auto centers = RbfCenters::halton(count, dim, ObservationRange{});
        std::vector<double> obs(dim), theta(dest * count);
        for (auto& x : obs) x = normal(gen);
        for (auto& x : theta) x = normal(gen);
        auto z = rbf_scores(obs, centers, theta);
        for (std::size_t j = 0; j < dest; ++j) {
            double expected = 0.0;
            for (std::size_t k = 0; k < count; ++k) {
                double sq = 0.0;
                for (std::size_t a = 0; a < dim; ++a) {
                    const double diff = obs[a] - centers.points[k * dim + a];
                    sq += diff * diff;
                }
                expected += sq * theta[j * count + k];
            }
            ASSERT_NEAR(z[j], expected, 1e-12 * (1.0 + std::abs(expected)));
        }
    }
}

TEST(RbfScores, DimensionMismatch) {
    auto centers = RbfCenters::halton(4, 2, ObservationRange{});
    std::vector<double> obs{0.0, 0.0, 0.0}, theta(8);
    EXPECT_THROW(rbf_scores(obs, centers, theta), std::invalid_argument);
    std::vector<double> obs2{0.0, 0.0}, theta2(7);
    EXPECT_THROW(rbf_scores(obs2, centers, theta2), std::invalid_argument);
}

TEST(RbfCenters, HaltonPointsInsideRange) {
    ObservationRange range;
    auto c = RbfCenters::halton(64, 3, range);
    for (std::size_t k = 0; k < 64; ++k) {
        auto p = c.center(k);
        for (std::size_t a = 0; a + 1 < 3; ++a) {
            EXPECT_GE(p[a], range.stock_lo);
            EXPECT_LE(p[a], range.stock_hi);
        }
        EXPECT_GE(p[2], range.exo_lo);
        EXPECT_LE(p[2], range.exo_hi);
    }
}

TEST(Softmax, EqualScoresGiveUniform) {
    std::vector<double> z(4, 1.7);
    for (double b : softmax_allocation(z)) EXPECT_DOUBLE_EQ(b, 0.25);
}

TEST(Softmax, KnownTwoPointValue) {
    std::vector<double> z{0.0, std::log(3.0)};
    auto b = softmax_allocation(z);
    EXPECT_NEAR(b[0], 0.75, 1e-15);
    EXPECT_NEAR(b[1], 0.25, 1e-15);
}

TEST(Softmax, ShiftInvariantAndOnSimplex) {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> normal(0.0, 30.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> z(1 + trial % 6);
        // dyadic scores keep the shifted copy exact
        for (auto& x : z) x = std::round(normal(gen) * 64.0) / 64.0;
        auto b = softmax_allocation(z);
        auto shifted = z;
        for (auto& x : shifted) x += 123.25;
        auto b2 = softmax_allocation(shifted);
        double total = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
            ASSERT_NEAR(b[j], b2[j], 1e-15);
            ASSERT_GE(b[j], 0.0);
            total += b[j];
        }
        ASSERT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Policy, ActionsStayOnSimplex) {
    auto cfg = example_config("warehouse9");
    auto cg = cfg.graphs();
    for (bool retain : {true, false}) {
        RbfSoftmaxPolicy policy(cg, 8, ObservationRange{}, retain);
        std::mt19937_64 gen(5);
        std::normal_distribution<double> normal(0.0, 0.3);
        std::vector<double> theta(policy.layout().total_dim());
        for (auto& x : theta) x = normal(gen);
        std::vector<double> action;
        for (AgentId i = 0; i < 9; ++i) {
            std::vector<double> obs(cg.observed(i).size() + 1);
            for (auto& x : obs) x = normal(gen);
            policy.act(i, obs, policy.layout().slice(std::span<const double>(theta), i), action);
            ASSERT_EQ(action.size(), cg.state().out_neighbors(i).size());
            double total = 0.0;
            for (double b : action) {
                ASSERT_GT(b, 0.0);
                total += b;
            }
            if (retain) {
                ASSERT_LT(total, 1.0);
            } else if (!action.empty()) {
                ASSERT_NEAR(total, 1.0, 1e-12);
            }
        }
    }
}

TEST(Policy, ActionDependsOnOwnParametersOnly) {
    auto cfg = example_config("warehouse9");
    auto cg = cfg.graphs();
    WarehouseEnv env(cg, cfg.env);
    RbfSoftmaxPolicy policy(cg, 8, ObservationRange{});
    const auto& layout = policy.layout();
    std::vector<double> theta(layout.total_dim(), 0.2);
    Rng rng(6);
    auto s = env.reset(rng);
    std::vector<double> obs, a1, a2;
    for (AgentId i = 0; i < 9; ++i) {
        env.observe(s, i, obs);
        policy.act(i, obs, layout.slice(std::span<const double>(theta), i), a1);
        auto other = theta;
        for (AgentId j = 0; j < 9; ++j)
            if (j != i)
                for (auto& x : layout.slice(std::span<double>(other), j)) x = -5.0;
        policy.act(i, obs, layout.slice(std::span<const double>(other), i), a2);
        ASSERT_EQ(a1, a2);
    }
}

TEST(Perturb, ZeroRadiusReturnsTheta) {
    std::vector<double> theta{1.0, -2.0, 3.5};
    Rng rng(7);
    auto [out, sample] = perturb(theta, 0.0, rng);
    EXPECT_EQ(out, theta);
    EXPECT_EQ(sample.u.size(), 3u);
    EXPECT_THROW(perturb(theta, -1.0, rng), std::invalid_argument);
}

TEST(Perturb, SampleMeanNearZero) {
    Rng rng(8);
    const std::size_t draws = 100000, dim = 6;
    std::vector<double> mean(dim, 0.0);
    std::vector<double> theta(dim, 0.0);
    for (std::size_t k = 0; k < draws; ++k) {
        auto [out, sample] = perturb(theta, 1.0, rng);
        for (std::size_t c = 0; c < dim; ++c) mean[c] += sample.u[c] / draws;
    }
    for (double m : mean) EXPECT_LT(std::abs(m), 3.0 / std::sqrt(static_cast<double>(draws)));
}

TEST(Perturb, SlicesPartitionTheSample) {
    DirectedGraph s(4, {{0, 1}, {1, 2}, {1, 3}});
    ParamLayout layout(s, 3);
    Rng rng(9);
    auto sample = sample_direction(layout.total_dim(), rng);
    std::vector<double> joined;
    for (AgentId i = 0; i < 4; ++i) {
        auto sl = sample.slice(layout, i);
        joined.insert(joined.end(), sl.begin(), sl.end());
    }
    EXPECT_EQ(joined, sample.u);
}

TEST(Perturb, PooledSlicesPassChiSquaredFit) {
    // pooled coordinates binned into 10 equiprobable standard-normal bins
    const double edges[] = {-1.2815515655446004, -0.8416212335729143, -0.5244005127080407,
                            -0.2533471031357997, 0.0, 0.2533471031357997, 0.5244005127080407,
                            0.8416212335729143, 1.2815515655446004};
    DirectedGraph s(3, {{0, 1}, {1, 2}});
    ParamLayout layout(s, 4);
    Rng rng(10);
    std::vector<double> counts(10, 0.0);
    std::size_t total = 0;
    for (int k = 0; k < 5000; ++k) {
        auto sample = sample_direction(layout.total_dim(), rng);
        for (AgentId i = 0; i < 3; ++i)
            for (double x : sample.slice(layout, i)) {
                counts[std::upper_bound(std::begin(edges), std::end(edges), x) - std::begin(edges)] += 1.0;
                ++total;
            }
    }
    const double expected = static_cast<double>(total) / 10.0;
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    EXPECT_LT(stat, 21.666);  // 99% quantile of chi-squared with 9 degrees of freedom
}
