#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "netmarl/policy.hpp"
#include "netmarl/warehouse.hpp"

namespace netmarl {

struct TrajectoryRow {
    std::size_t t = 0;
    AgentId agent = 0;
    double stock = 0.0;
    double exo = 0.0;
    std::vector<double> action;  // fractions to out(agent), ascending
    double reward = 0.0;
};

/// Per-agent discounted partial returns W_i = Σ_{t<T_e} γ^t r_i(t).
struct RolloutResult {
    std::vector<double> returns;
    double reward_min = std::numeric_limits<double>::infinity();
    double reward_max = -std::numeric_limits<double>::infinity();
    std::size_t out_of_range_observations = 0;
    std::vector<TrajectoryRow> trajectory;

    double total() const {
        double s = 0.0;
        for (double w : returns) s += w;
        return s;
    }
    bool finite() const {
        return std::all_of(returns.begin(), returns.end(), [](double w) { return std::isfinite(w); });
    }
};

/**
 * @brief Simulates `horizon` ticks from a fresh initial state.
 *
 * Tick order: observe, act, collect reward on the current state, transition.
 * Agent i acts from (o_i, θ_i) only.
 */
template <NetworkedEnvironment Env, LocalPolicy Policy>
RolloutResult rollout(const Env& env, const Policy& policy, std::span<const double> theta,
                      std::size_t horizon, double gamma, Rng& rng, bool record = false) {
    if (horizon == 0) throw std::invalid_argument("rollout: T_e must be at least 1");
    const auto n = env.agent_count();
    const auto& layout = policy.layout();
    if (layout.agent_count() != n) throw std::invalid_argument("rollout: policy/environment agent count mismatch");
    layout.check(theta.size());

    RolloutResult result;
    result.returns.assign(n, 0.0);
    auto state = env.reset(rng);
    ActionProfile actions(n);
    std::vector<double> obs;
    double discount = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        for (AgentId i = 0; i < n; ++i) {
            env.observe(state, i, obs);
            if constexpr (requires { policy.in_range(std::span<const double>(obs)); }) {
                if (!policy.in_range(obs)) ++result.out_of_range_observations;
            }
            policy.act(i, obs, layout.slice(theta, i), actions[i]);
        }
        for (AgentId i = 0; i < n; ++i) {
            double r = env.reward(state, i);
            result.reward_min = std::min(result.reward_min, r);
            result.reward_max = std::max(result.reward_max, r);
            result.returns[i] += discount * r;
            if (record) {
                if constexpr (requires { state.stock; state.exo; })
                    result.trajectory.push_back({t, i, state.stock[i], state.exo[i], actions[i], r});
            }
        }
        env.step(state, actions, rng);
        discount *= gamma;
    }
    return result;
}

}  // namespace netmarl
