#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "netmarl/verify.hpp"
#include "netmarl/warehouse.hpp"
#include "test_util.hpp"

using namespace netmarl;
using namespace netmarl::testing;

namespace {

// Returns that ignore θ entirely: each agent's per-tick reward is drawn once at reset.
struct NoiseEnv {
    struct State {
        std::vector<double> level;
    };
    std::size_t n;
    std::size_t agent_count() const { return n; }
    State reset(Rng& rng) const {
        std::normal_distribution<double> normal(-1.0, 0.5);
        State s;
        for (std::size_t i = 0; i < n; ++i) s.level.push_back(normal(rng));
        return s;
    }
    void observe(const State&, AgentId, std::vector<double>& out) const { out.assign(1, 0.0); }
    double reward(const State& s, AgentId i) const { return s.level[i]; }
    void step(State&, const ActionProfile&, Rng&) const {}
};

struct ScalarPolicy {
    ParamLayout layout_;
    explicit ScalarPolicy(std::size_t n) : layout_(DirectedGraph(n), 1) {}
    const ParamLayout& layout() const { return layout_; }
    void act(AgentId, std::span<const double>, std::span<const double> theta_i, std::vector<double>& action) const {
        action.assign(1, theta_i[0]);
    }
};

struct WarehouseInstance {
    RunConfig cfg;
    CouplingGraphs graphs;
    LearningStructure ls;
    WarehouseEnv env;
    RbfSoftmaxPolicy policy;
    std::vector<double> theta;

    explicit WarehouseInstance(const std::string& name)
        : cfg(example_config(name)), graphs(cfg.graphs()), ls(learning_sets(graphs, cfg.clustering(graphs))),
          env(graphs, cfg.env), policy(graphs, cfg.policy.centers, cfg.policy.range, cfg.policy.retain_self),
          theta(policy.layout().total_dim(), 0.0) {}
};

}  // namespace

TEST(SmoothedGradient, ConstantObjectiveAntitheticIsZero) {
    ScalarEvaluator constant = [](std::span<const double>, std::uint64_t) { return 4.2; };
    std::vector<double> theta{0.5, -1.0, 2.0};
    McSettings s;
    s.samples = 500;
    s.antithetic = true;
    auto e = mc_smoothed_gradient(constant, theta, s);
    for (double m : e.mean) EXPECT_EQ(m, 0.0);
}

TEST(SmoothedGradient, LinearObjectiveRecoversCoefficients) {
    const std::vector<double> c{1.0, -0.5, 2.0};
    ScalarEvaluator linear = [&c](std::span<const double> t, std::uint64_t) {
        double v = 0.0;
        for (std::size_t a = 0; a < c.size(); ++a) v += c[a] * t[a];
        return v;
    };
    std::vector<double> theta{0.3, 0.2, -0.1};
    McSettings s;
    s.samples = 20000;
    s.delta = 0.5;
    s.seed = 3;
    auto e = mc_smoothed_gradient(linear, theta, s);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_LT(std::abs(e.mean[a] - c[a]), 3.0 * e.std_error[a]);
}

TEST(SmoothedGradient, SquaredNormAtOriginIsZero) {
    ScalarEvaluator sq = [](std::span<const double> t, std::uint64_t) {
        double v = 0.0;
        for (double x : t) v += x * x;
        return v;
    };
    std::vector<double> theta(4, 0.0);
    McSettings s;
    s.samples = 20000;
    s.seed = 4;
    auto e = mc_smoothed_gradient(sq, theta, s);
    for (std::size_t a = 0; a < 4; ++a) EXPECT_LT(std::abs(e.mean[a]), 3.0 * e.std_error[a]);
    s.antithetic = true;
    auto anti = mc_smoothed_gradient(sq, theta, s);
    for (double m : anti.mean) EXPECT_EQ(m, 0.0);
}

TEST(SmoothedGradient, StandardErrorShrinksWithSamples) {
    ScalarEvaluator linear = [](std::span<const double> t, std::uint64_t) { return 2.0 * t[0] - t[1] + 1.0; };
    std::vector<double> theta{0.0, 0.0};
    McSettings s;
    s.seed = 5;
    s.samples = 4000;
    auto a = mc_smoothed_gradient(linear, theta, s);
    s.samples = 16000;
    auto b = mc_smoothed_gradient(linear, theta, s);
    for (std::size_t c = 0; c < 2; ++c) {
        EXPECT_TRUE(std::isfinite(a.std_error[c]));
        EXPECT_NEAR(b.std_error[c] / a.std_error[c], 0.5, 0.1);
    }
}

TEST(SmoothedGradient, RejectsBadSettings) {
    ScalarEvaluator f = [](std::span<const double>, std::uint64_t) { return 0.0; };
    std::vector<double> theta{0.0};
    McSettings s;
    s.delta = 0.0;
    EXPECT_THROW(mc_smoothed_gradient(f, theta, s), std::invalid_argument);
    s.delta = 1.0;
    s.samples = 0;
    EXPECT_THROW(mc_smoothed_gradient(f, theta, s), std::invalid_argument);
}

TEST(GradientEquality, ChainDownstreamAgent) {
    WarehouseInstance inst("chain3");
    auto eval = rollout_evaluator(inst.env, inst.policy, 10, inst.cfg.gamma);
    McSettings s;
    s.delta = 2.0;
    s.samples = 20000;
    s.seed = 6;
    auto r = check_gradient_equality(eval, inst.theta, inst.policy.layout(), inst.ls, 2, s);
    EXPECT_TRUE(r.pass) << r.measured;
}

TEST(GradientEquality, WarehouseAgentOne) {
    WarehouseInstance inst("warehouse9");
    auto eval = rollout_evaluator(inst.env, inst.policy, 10, inst.cfg.gamma);
    McSettings s;
    s.delta = 2.0;
    s.samples = 20000;
    s.seed = 7;
    auto r = check_gradient_equality(eval, inst.theta, inst.policy.layout(), inst.ls, 0, s);
    EXPECT_TRUE(r.pass) << r.measured;
}

TEST(GradientEquality, FullLearningSetIsExact) {
    WarehouseInstance inst("ring100");
    auto eval = rollout_evaluator(inst.env, inst.policy, 3, inst.cfg.gamma);
    auto ls = learning_sets(inst.graphs);  // maximal clustering: I_i^L = V
    McSettings s;
    s.samples = 50;
    auto r = check_gradient_equality(eval, inst.theta, inst.policy.layout(), ls, 0, s);
    EXPECT_EQ(r.measured, 0.0);
    EXPECT_TRUE(r.pass);
}

TEST(ReturnBounds, ZeroRewards) {
    auto b = return_bounds(0.0, 0.0, 0.9, 10);
    EXPECT_EQ(b.lower, 0.0);
    EXPECT_EQ(b.upper, 0.0);
    EXPECT_EQ(b.scale, 0.0);
    EXPECT_EQ(b.group_tail(5), 0.0);
}

TEST(ReturnBounds, UnitRewardsHalfDiscount) {
    auto b = return_bounds(1.0, 1.0, 0.5, 3);
    EXPECT_DOUBLE_EQ(b.lower, 2.0);
    EXPECT_DOUBLE_EQ(b.upper, 2.0);
    EXPECT_DOUBLE_EQ(b.agent_tail, 0.25);
    EXPECT_DOUBLE_EQ(b.group_tail(4), 1.0);
    EXPECT_THROW(return_bounds(1.0, 0.0, 0.5, 3), std::invalid_argument);
    EXPECT_THROW(return_bounds(0.0, 1.0, 1.0, 3), std::invalid_argument);
}

TEST(ReturnBounds, WarehouseTailWithinBound) {
    WarehouseInstance inst("warehouse9");
    auto r = check_evaluation_tail(inst.env, inst.policy, inst.theta, inst.ls.cluster_sets, 10, 200,
                                   inst.cfg.gamma, 2000, 8);
    EXPECT_TRUE(r.pass) << r.measured << " vs " << r.claimed;
    EXPECT_THROW(check_evaluation_tail(inst.env, inst.policy, inst.theta, inst.ls.cluster_sets, 10, 10,
                                       inst.cfg.gamma, 10, 8),
                 std::invalid_argument);
}

TEST(VarianceCheck, DoublingDeltaQuartersBoundAndMeasurement) {
    NoiseEnv env{3};
    ScalarPolicy policy(3);
    std::vector<double> theta(3, 0.0);
    auto agg = ReturnAggregator::centralized(3);
    auto a = empirical_variance_check(env, policy, theta, agg, 5, 1, 0.9, 1.0, 2000, 500, 9);
    auto b = empirical_variance_check(env, policy, theta, agg, 5, 1, 0.9, 2.0, 2000, 500, 9);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(b.second_moment[i] / a.second_moment[i], 0.25, 1e-12);
        EXPECT_NEAR(b.bound[i] / a.bound[i], 0.25, 1e-12);
        EXPECT_TRUE(a.reports[i].pass);
    }
}

TEST(VarianceCheck, SingleGroupMatchesCentralized) {
    DirectedGraph s(2, {{0, 1}, {1, 0}});
    CouplingGraphs cg(s, DirectedGraph(2), DirectedGraph(2), s);
    auto ls = learning_sets(cg);
    auto agg = make_aggregator(Variant::DistributedLvf, cg, ls);
    NoiseEnv env{2};
    ScalarPolicy policy(2);
    std::vector<double> theta(2, 0.0);
    auto v = empirical_variance_check(env, policy, theta, agg, 5, 10, 0.9, 1.0, 2000, 200, 10);
    for (std::size_t i = 0; i < 2; ++i)
        EXPECT_NEAR(v.second_moment[i], v.centralized_second_moment[i], 1e-9 * v.centralized_second_moment[i]);
    EXPECT_TRUE(variance_ordering_reports(v, agg, 10).empty());
}

TEST(VarianceCheck, WarehouseLocalBelowGlobal) {
    WarehouseInstance inst("warehouse9");
    auto agg = make_aggregator(Variant::DistributedLvf, inst.graphs, inst.ls);
    auto v = empirical_variance_check(inst.env, inst.policy, inst.theta, agg, 10, 10, inst.cfg.gamma, 2.0, 3000,
                                      500, 11);
    for (const auto& r : v.reports) EXPECT_TRUE(r.pass) << r.check;
    auto ordering = variance_ordering_reports(v, agg, 11);
    EXPECT_EQ(ordering.size(), 6u);  // agents 7-9 see every agent
    for (const auto& r : ordering) EXPECT_TRUE(r.pass) << r.check << " " << r.measured << " vs " << r.claimed;
}

TEST(Lipschitz, ConstantEvaluatorIsZero) {
    ScalarEvaluator f = [](std::span<const double>, std::uint64_t) { return 3.0; };
    EXPECT_EQ(estimate_lipschitz(f, {{0.0, 1.0}}, 50, 0.1, 1), 0.0);
}

TEST(Lipschitz, LinearApproachesNorm) {
    const std::vector<double> c{3.0, -4.0};
    ScalarEvaluator f = [&c](std::span<const double> t, std::uint64_t) { return c[0] * t[0] + c[1] * t[1]; };
    const double few = estimate_lipschitz(f, {{0.0, 0.0}}, 5, 0.1, 2);
    const double many = estimate_lipschitz(f, {{0.0, 0.0}}, 2000, 0.1, 2);
    EXPECT_LE(few, 5.0 + 1e-12);
    EXPECT_LE(many, 5.0 + 1e-12);
    EXPECT_GE(many, few);
    EXPECT_GT(many, 4.99);
}

TEST(Lipschitz, IdenticalPairsSkipped) {
    ScalarEvaluator f = [](std::span<const double> t, std::uint64_t) { return t[0]; };
    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs{{{1.0}, {1.0}}, {{0.0}, {2.0}}};
    EXPECT_DOUBLE_EQ(estimate_lipschitz_pairs(f, pairs, 3), 1.0);
    std::vector<std::pair<std::vector<double>, std::vector<double>>> same{{{1.0}, {1.0}}};
    EXPECT_EQ(estimate_lipschitz_pairs(f, same, 3), 0.0);
    EXPECT_EQ(estimate_lipschitz(f, {{1.0}}, 10, 0.0, 3), 0.0);
    EXPECT_THROW(estimate_lipschitz(f, {{1.0}}, 0, 0.1, 3), std::invalid_argument);
}

TEST(TruncationGap, PathDecaysAndVanishes) {
    WarehouseInstance inst("path6");
    auto eval = rollout_evaluator(inst.env, inst.policy, 10, inst.cfg.gamma);
    auto dist = distances(inst.graphs, inst.ls);
    McSettings s;
    s.delta = 2.0;
    s.samples = 20000;
    s.seed = 12;
    auto lips = estimate_lipschitz_outputs(eval, inst.theta, 50, 0.2, 13);
    auto res = truncation_gap(eval, inst.theta, inst.policy.layout(), dist, inst.ls, 0, {0, 1, 2, 3, 4, 5}, lips,
                              inst.cfg.gamma, s);
    EXPECT_EQ(res.max_distance, 5u);
    ASSERT_EQ(res.rows.size(), 6u);
    EXPECT_LE(res.rows[2].gap, res.rows[0].gap + 2.0 * std::hypot(res.rows[0].std_error, res.rows[2].std_error));
    for (const auto& r : res.reports) EXPECT_TRUE(r.pass) << r.check;
    EXPECT_EQ(res.rows[5].gap, 0.0);  // nothing left outside the truncated set
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(res.rows[k].excluded, 5u - k);
}

TEST(TruncationGap, ResidualFactorAnchor) {
    auto r = residual_factor_report(0.6, 6, 0.028, 0);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.measured, 0.0279936, 1e-12);
    auto strict = residual_factor_report(0.6, 5, 0.028, 0);
    EXPECT_FALSE(strict.pass);
}

TEST(BoundReports, InequalitySlack) {
    EXPECT_TRUE(inequality_report("x", "y", 1.0, 1.04, 0.05, 0).pass);
    EXPECT_FALSE(inequality_report("x", "y", 1.0, 1.06, 0.05, 0).pass);
    EXPECT_FALSE(inequality_report("x", "y", 1.0, std::nan(""), 0.05, 0).pass);
}
