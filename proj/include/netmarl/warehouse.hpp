#pragma once

/**
 * @file warehouse.hpp
 * @brief Multi-warehouse resource-transfer environment.
 *
 * Each warehouse i holds stock m_i and sees a net exogenous inflow z_i. At
 * every tick it ships fractions b_ij of its stock to its state-graph
 * out-neighbours and receives shipments from its in-neighbours:
 *
 *   m_i(t+1) = m_i(t) - sum_{j in out(i)} b_ij m_i(t) + sum_{j in in(i)} b_ji m_j(t) + z_i(t)
 *
 * Rewards penalise shortages: r_i = sum_{j in I_i^R} tau_j with
 * tau_j = -m_j^2 when m_j < 0 and 0 otherwise.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "netmarl/learning.hpp"
#include "netmarl/random.hpp"

namespace netmarl {

/// Per-agent shipment fractions, one entry per state-graph out-neighbour (sorted).
using ActionProfile = std::vector<std::vector<double>>;

/**
 * @brief Environment contract for the rollout harness.
 *
 * The environment definition is immutable; all mutable data lives in `State`.
 */
template <class E>
concept NetworkedEnvironment = requires(const E& env, typename E::State& s, const typename E::State& cs,
                                        const ActionProfile& a, Rng& rng, AgentId i,
                                        std::vector<double>& buf) {
    { env.agent_count() } -> std::convertible_to<std::size_t>;
    { env.reset(rng) } -> std::same_as<typename E::State>;
    { env.observe(cs, i, buf) };
    { env.reward(cs, i) } -> std::convertible_to<double>;
    { env.step(s, a, rng) };
};

enum class SignalMode { FixedSin, Sinusoid };

struct WarehouseParams {
    double init_stock = 1.0;
    double chi_sd = 0.1;     // variance 0.01
    double chi_clip = 0.01;
    SignalMode signal = SignalMode::FixedSin;
    double fixed_amplitude = 0.5;  // z_i(t) = 0.5 sin t
    // sinusoid mode: z_i(t) = A_i sin(w_i t + phi_i) + omega_i
    std::vector<double> amplitude;  // per agent; a single entry broadcasts
    std::vector<double> phase;
    double freq_mean = 0.0;
    double freq_sd = 0.1;
    double freq_clip = 0.01;
    double omega_sd = 0.1;
    double omega_clip = 0.01;
    std::optional<double> reward_floor;
};

struct WarehouseState {
    std::vector<double> stock;  // m_i
    std::vector<double> exo;    // z_i(t)
    std::vector<double> freq;   // w_i (sinusoid mode)
    std::vector<double> offset; // omega_i (sinusoid mode)
    std::size_t time = 0;
};

class WarehouseEnv {
public:
    using State = WarehouseState;

    WarehouseEnv(const CouplingGraphs& graphs, WarehouseParams params)
        : params_(std::move(params)) {
        const auto n = graphs.agent_count();
        senders_.resize(n);
        receivers_.resize(n);
        observed_.resize(n);
        reward_inputs_.resize(n);
        for (AgentId i = 0; i < n; ++i) {
            senders_[i] = graphs.state().in_neighbors(i);
            receivers_[i] = graphs.state().out_neighbors(i);
            observed_[i] = graphs.observed(i);
            reward_inputs_[i] = graphs.reward_inputs(i);
        }
        if (params_.signal == SignalMode::Sinusoid) {
            broadcast(params_.amplitude, n, "amplitude");
            broadcast(params_.phase, n, "phase");
            for (AgentId i = 0; i < n; ++i)
                if (!(params_.amplitude[i] > 0.0 && params_.amplitude[i] < params_.init_stock - params_.chi_clip))
                    throw std::invalid_argument("sinusoid amplitude must satisfy 0 < A_i < m_i(0)");
        }
    }

    std::size_t agent_count() const { return receivers_.size(); }
    const WarehouseParams& params() const { return params_; }
    const VertexSet& receivers(AgentId i) const { return receivers_[i]; }
    const VertexSet& observed(AgentId i) const { return observed_[i]; }
    const VertexSet& reward_inputs(AgentId i) const { return reward_inputs_[i]; }
    std::size_t observation_dim(AgentId i) const { return observed_[i].size() + 1; }

    State reset(Rng& rng) const {
        const auto n = agent_count();
        State s;
        s.stock.resize(n);
        for (AgentId i = 0; i < n; ++i)
            s.stock[i] = truncated_normal(rng, params_.init_stock, params_.chi_sd, params_.chi_clip);
        if (params_.signal == SignalMode::Sinusoid) {
            s.freq.resize(n);
            s.offset.resize(n);
            for (AgentId i = 0; i < n; ++i) {
                s.freq[i] = truncated_normal(rng, params_.freq_mean, params_.freq_sd, params_.freq_clip);
                s.offset[i] = truncated_normal(rng, 0.0, params_.omega_sd, params_.omega_clip);
            }
        }
        s.exo.resize(n);
        refresh_signal(s);
        return s;
    }

    /// o_i = (m_j for j in I_i^O ascending, z_i).
    void observe(const State& s, AgentId i, std::vector<double>& out) const {
        out.clear();
        for (AgentId j : observed_[i]) out.push_back(s.stock[j]);
        out.push_back(s.exo[i]);
    }

    double reward(const State& s, AgentId i) const {
        double r = 0.0;
        for (AgentId j : reward_inputs_[i]) r += shortage(s.stock[j]);
        if (params_.reward_floor) r = std::max(r, *params_.reward_floor);
        return r;
    }

    static double shortage(double m) { return m >= 0.0 ? 0.0 : -m * m; }

    /// Applies shipments and the exogenous inflow, then advances the signal.
    void step(State& s, const ActionProfile& actions, Rng& /*rng*/) const {
        const auto n = agent_count();
        if (actions.size() != n || s.stock.size() != n)
            throw std::invalid_argument("warehouse_step: dimension mismatch");
        for (AgentId i = 0; i < n; ++i) {
            if (actions[i].size() != receivers_[i].size())
                throw std::invalid_argument("warehouse_step: agent " + std::to_string(i + 1) +
                                            " action has wrong size");
            double total = 0.0;
            for (double b : actions[i]) {
                if (!(b >= 0.0 && b <= 1.0))
                    throw std::invalid_argument("warehouse_step: allocation outside [0,1]");
                total += b;
            }
            if (total > 1.0 + 1e-12)
                throw std::invalid_argument("warehouse_step: allocations sum above 1");
        }
        std::vector<double> next(n);
        for (AgentId i = 0; i < n; ++i) {
            double sent = 0.0;
            for (double b : actions[i]) sent += b;
            double received = 0.0;
            for (AgentId j : senders_[i]) received += fraction_to(actions[j], j, i) * s.stock[j];
            next[i] = s.stock[i] - sent * s.stock[i] + received + s.exo[i];
        }
        s.stock = std::move(next);
        ++s.time;
        refresh_signal(s);
    }

private:
    double fraction_to(const std::vector<double>& action, AgentId from, AgentId to) const {
        const auto& dest = receivers_[from];
        auto it = std::lower_bound(dest.begin(), dest.end(), to);
        return action[static_cast<std::size_t>(it - dest.begin())];
    }

    void refresh_signal(State& s) const {
        const double t = static_cast<double>(s.time);
        for (AgentId i = 0; i < agent_count(); ++i) {
            if (params_.signal == SignalMode::FixedSin)
                s.exo[i] = params_.fixed_amplitude * std::sin(t);
            else
                s.exo[i] = params_.amplitude[i] * std::sin(s.freq[i] * t + params_.phase[i]) + s.offset[i];
        }
    }

    static void broadcast(std::vector<double>& v, std::size_t n, const char* name) {
        if (v.size() == 1) v.assign(n, v.front());
        if (v.size() != n)
            throw std::invalid_argument(std::string("sinusoid ") + name + " needs 1 or N entries");
    }

    WarehouseParams params_;
    std::vector<VertexSet> senders_;    // N_i^S
    std::vector<VertexSet> receivers_;  // N_i^{S+}
    std::vector<VertexSet> observed_;
    std::vector<VertexSet> reward_inputs_;
};

static_assert(NetworkedEnvironment<WarehouseEnv>);

}  // namespace netmarl
