#pragma once

/**
 * @file zoo.hpp
 * @brief Zeroth-order gradient oracles, the cluster-consensus training loop
 *        and the theoretical parameter schedules.
 *
 * Three aggregation variants share one loop:
 *  - centralized: every agent scales its perturbation by the exact global sum Σ_j W_j;
 *  - distributed-lvf: agents in cluster l agree on Σ_{j∈I_l^cl} W_j by local consensus;
 *  - distributed-tlvf: the same over the distance-limited sets I_l^κ.
 */

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "netmarl/consensus.hpp"
#include "netmarl/learning.hpp"
#include "netmarl/policy.hpp"
#include "netmarl/random.hpp"
#include "netmarl/rollout.hpp"

namespace netmarl {

struct AssumptionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Variant { Centralized, DistributedLvf, DistributedTlvf };
enum class Feedback { OnePoint, TwoPoint };

inline std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::Centralized: return "centralized";
        case Variant::DistributedLvf: return "distributed-lvf";
        case Variant::DistributedTlvf: return "distributed-tlvf";
    }
    return "?";
}
inline std::string_view to_string(Feedback f) { return f == Feedback::OnePoint ? "one-point" : "two-point"; }

inline Variant parse_variant(std::string_view s) {
    if (s == "centralized") return Variant::Centralized;
    if (s == "distributed-lvf") return Variant::DistributedLvf;
    if (s == "distributed-tlvf") return Variant::DistributedTlvf;
    throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}
inline Feedback parse_feedback(std::string_view s) {
    if (s == "one-point") return Feedback::OnePoint;
    if (s == "two-point") return Feedback::TwoPoint;
    throw std::invalid_argument("unknown feedback '" + std::string(s) + "'");
}

struct TrainerConfig {
    Variant variant = Variant::DistributedLvf;
    Feedback feedback = Feedback::OnePoint;
    std::size_t episodes = 600;        // K
    std::size_t horizon = 10;          // T_e
    std::size_t consensus_iters = 10;  // T_c
    double step = 0.01;                // η
    double delta = 2.0;                // δ
    std::size_t kappa = 1;             // tlvf only
    double gamma = 0.9;
    std::optional<double> grad_clip;   // norm cap; off by default
    bool timing = false;

    void validate() const {
        if (episodes < 1 || horizon < 1 || consensus_iters < 1)
            throw std::invalid_argument("trainer: K, T_e and T_c must be at least 1");
        if (!(delta > 0.0)) throw std::invalid_argument("trainer: δ must be positive");
        if (!(step >= 0.0)) throw std::invalid_argument("trainer: η must be non-negative");
        if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("trainer: γ must lie in (0,1)");
    }
};

/// g_i = (n_l μ_i / δ) u_i.
inline std::vector<double> one_point_gradient(double mu, std::size_t group_size, std::span<const double> u_i,
                                              double delta) {
    if (delta == 0.0) throw std::invalid_argument("one_point_gradient: δ must be non-zero");
    const double scale = static_cast<double>(group_size) * mu / delta;
    std::vector<double> g(u_i.size());
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = scale * u_i[c];
    return g;
}

/// g_i = ((μ_i − ν_i) n_l / δ) u_i.
inline std::vector<double> two_point_gradient(double mu, std::optional<double> nu, std::size_t group_size,
                                              std::span<const double> u_i, double delta) {
    if (!nu) throw std::invalid_argument("two_point_gradient: missing baseline consensus value");
    if (delta == 0.0) throw std::invalid_argument("two_point_gradient: δ must be non-zero");
    const double scale = (mu - *nu) * static_cast<double>(group_size) / delta;
    std::vector<double> g(u_i.size());
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = scale * u_i[c];
    return g;
}

/**
 * @brief Turns per-agent returns into per-agent objective estimates.
 *
 * For the distributed variants each cluster runs its own consensus over its
 * member set; agent i reads n_l μ_i(T_c) from its cluster's run.
 */
class ReturnAggregator {
public:
    /// Centralized aggregation over N agents.
    static ReturnAggregator centralized(std::size_t agents) {
        ReturnAggregator a;
        a.agents_ = agents;
        return a;
    }

    /// One consensus group per cluster over `member_sets[l]`.
    static ReturnAggregator distributed(const DirectedGraph& comm, const Clustering& clustering,
                                        const std::vector<VertexSet>& member_sets) {
        ReturnAggregator a;
        a.agents_ = comm.size();
        a.cluster_of_ = clustering.cluster_of;
        if (!comm.is_symmetric()) throw AssumptionViolation("communication graph is not undirected");
        for (std::size_t l = 0; l < member_sets.size(); ++l) {
            if (!induced_weakly_connected(comm, member_sets[l]))
                throw AssumptionViolation("members of cluster " + std::to_string(l + 1) +
                                          " are not connected in the communication graph");
            a.matrices_.push_back(metropolis_weights(comm, member_sets[l]));
        }
        return a;
    }

    bool is_centralized() const { return matrices_.empty(); }
    const std::vector<WeightMatrix>& matrices() const { return matrices_; }
    std::size_t agent_count() const { return agents_; }

    /// Group size n_l used for agent i (N when centralized).
    std::size_t group_size(AgentId i) const {
        return is_centralized() ? agents_ : matrices_[cluster_of_[i]].size();
    }

    /**
     * @brief Per-agent estimates of its objective's return sum.
     * @param residual  receives max_i |n_l μ_i(T_c) − Σ_{j∈I_l} W_j|
     */
    std::vector<double> estimate(std::span<const double> returns, std::size_t consensus_iters,
                                 double* residual = nullptr) const {
        if (returns.size() != agents_) throw std::invalid_argument("aggregator: returns dimension mismatch");
        std::vector<double> out(agents_, 0.0);
        double worst = 0.0;
        if (is_centralized()) {
            double total = 0.0;
            for (double w : returns) total += w;
            std::fill(out.begin(), out.end(), total);
        } else {
            std::vector<double> mu, scratch;
            for (std::size_t l = 0; l < matrices_.size(); ++l) {
                const auto& w = matrices_[l];
                mu.resize(w.size());
                double exact = 0.0;
                for (std::size_t r = 0; r < w.size(); ++r) {
                    mu[r] = returns[w.members()[r]];
                    exact += mu[r];
                }
                for (std::size_t v = 0; v < consensus_iters; ++v) consensus_step(w, mu, scratch);
                const double n_l = static_cast<double>(w.size());
                for (std::size_t r = 0; r < w.size(); ++r) {
                    const AgentId i = w.members()[r];
                    if (cluster_of_[i] != l) continue;
                    out[i] = n_l * mu[r];
                    worst = std::max(worst, std::abs(out[i] - exact));
                }
            }
        }
        if (residual) *residual = worst;
        return out;
    }

private:
    std::size_t agents_ = 0;
    std::vector<std::size_t> cluster_of_;
    std::vector<WeightMatrix> matrices_;
};

/// Builds the aggregator a variant calls for, validating its communication assumption.
inline ReturnAggregator make_aggregator(Variant variant, const CouplingGraphs& cg, const LearningStructure& ls,
                                        const TruncationStructure* truncation = nullptr) {
    switch (variant) {
        case Variant::Centralized: return ReturnAggregator::centralized(cg.agent_count());
        case Variant::DistributedLvf: return ReturnAggregator::distributed(cg.comm(), ls.clustering, ls.cluster_sets);
        case Variant::DistributedTlvf:
            if (!truncation) throw std::invalid_argument("tlvf variant needs a truncation structure");
            return ReturnAggregator::distributed(cg.comm(), ls.clustering, truncation->member_sets);
    }
    throw std::logic_error("unreachable");
}

struct EpisodeRecord {
    std::size_t episode = 0;
    double global_return = 0.0;
    double grad_norm = 0.0;
    double consensus_residual = 0.0;
    double wallclock_ms = 0.0;
};

struct TrainTrace {
    std::vector<EpisodeRecord> episodes;
    std::vector<double> theta;  // θ^K
    bool diverged = false;
    double reward_min = std::numeric_limits<double>::infinity();
    double reward_max = -std::numeric_limits<double>::infinity();
    std::size_t out_of_range_observations = 0;
};

/// Independent random streams of one seed; identical across variants.
struct SeedStreams {
    Rng perturbation;
    Rng initial_state;
    Rng baseline;

    static SeedStreams derive(std::uint64_t master, std::uint64_t seed_index) {
        return {Rng(derive_seed(master, {seed_index, 1})), Rng(derive_seed(master, {seed_index, 2})),
                Rng(derive_seed(master, {seed_index, 3}))};
    }
};

/**
 * @brief The episode loop: perturb, roll out, aggregate, estimate, ascend.
 *
 * The perturbation u^k and initial states come from `streams`, so runs of
 * different variants with the same streams see the same u^k and s_0^k.
 */
template <NetworkedEnvironment Env, LocalPolicy Policy>
TrainTrace train(const TrainerConfig& config, const Env& env, const Policy& policy,
                 const ReturnAggregator& aggregator, std::vector<double> theta, SeedStreams streams) {
    config.validate();
    const auto& layout = policy.layout();
    layout.check(theta.size());
    const auto n = env.agent_count();
    if (aggregator.agent_count() != n) throw std::invalid_argument("train: aggregator agent count mismatch");

    TrainTrace trace;
    std::vector<double> perturbed(theta.size()), grad(theta.size());
    for (std::size_t k = 0; k < config.episodes; ++k) {
        const auto started = std::chrono::steady_clock::now();
        auto u = sample_direction(theta.size(), streams.perturbation);
        for (std::size_t c = 0; c < theta.size(); ++c) perturbed[c] = theta[c] + config.delta * u.u[c];

        auto res = rollout(env, policy, perturbed, config.horizon, config.gamma, streams.initial_state);
        trace.reward_min = std::min(trace.reward_min, res.reward_min);
        trace.reward_max = std::max(trace.reward_max, res.reward_max);
        trace.out_of_range_observations += res.out_of_range_observations;

        EpisodeRecord rec;
        rec.episode = k;
        rec.global_return = res.total();
        if (!res.finite()) {
            rec.global_return = std::numeric_limits<double>::quiet_NaN();
            trace.episodes.push_back(rec);
            trace.diverged = true;
            break;
        }
        double residual = 0.0;
        auto estimate = aggregator.estimate(res.returns, config.consensus_iters, &residual);
        if (config.feedback == Feedback::TwoPoint) {
            auto base = rollout(env, policy, theta, config.horizon, config.gamma, streams.baseline);
            if (!base.finite()) {
                rec.global_return = std::numeric_limits<double>::quiet_NaN();
                trace.episodes.push_back(rec);
                trace.diverged = true;
                break;
            }
            double base_residual = 0.0;
            auto baseline = aggregator.estimate(base.returns, config.consensus_iters, &base_residual);
            for (AgentId i = 0; i < n; ++i) estimate[i] -= baseline[i];
            residual = std::max(residual, base_residual);
        }
        // estimate[i] already carries the n_l factor: g_i = estimate[i] / δ · u_i
        double norm2 = 0.0;
        for (AgentId i = 0; i < n; ++i) {
            const double scale = estimate[i] / config.delta;
            for (std::size_t c = layout.offset(i); c < layout.offset(i) + layout.dim(i); ++c) {
                grad[c] = scale * u.u[c];
                norm2 += grad[c] * grad[c];
            }
        }
        rec.grad_norm = std::sqrt(norm2);
        double factor = config.step;
        if (config.grad_clip && rec.grad_norm > *config.grad_clip) factor *= *config.grad_clip / rec.grad_norm;
        for (std::size_t c = 0; c < theta.size(); ++c) theta[c] += factor * grad[c];
        rec.consensus_residual = residual;
        if (config.timing)
            rec.wallclock_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        trace.episodes.push_back(rec);
    }
    trace.theta = std::move(theta);
    return trace;
}

/// A lower bound of the form T ≥ log_base(argument).
struct LogBound {
    double value = 0.0;     // log_base(argument); meaningful only when !vacuous
    double argument = 0.0;
    bool vacuous = false;   // argument ≥ 1: every T ≥ 0 satisfies the bound
    std::size_t steps() const { return vacuous ? 0 : static_cast<std::size_t>(std::ceil(value)); }
};

struct ScheduleInputs {
    double epsilon = 0.1;
    double dim = 1.0;            // d
    double lipschitz = 1.0;      // L
    double gamma = 0.9;
    double rho0 = 0.5;           // max_l ρ_l
    double group_size = 1.0;     // n_0 (or n_0^κ)
    double value_lo = -1.0;      // J_l
    double value_hi = 0.0;       // J_u
    double sigma0 = 0.0;
    double agents = 1.0;         // N
    double smoothed_initial = 0.0;  // J^δ(θ^0)
    std::optional<double> episodes;  // K for η; K_min when absent
    // truncated variant
    std::optional<std::size_t> kappa;
    double max_excluded = 0.0;   // max_l |V̄_l^κ|
    double lipschitz_max = 0.0;  // L_0
    double agent_dim_max = 0.0;  // d_0
};

struct ScheduleBounds {
    double delta = 0.0;
    double step = 0.0;
    double value_scale = 0.0;  // J_0
    double b_constant = 0.0;   // B
    double episodes_min = 0.0; // K_min
    LogBound horizon_min;      // T_e
    LogBound consensus_min;    // T_c
    std::optional<double> residual_factor;  // γ^{κ+1}
    std::optional<double> residual;         // γ^{κ+1} max|V̄| L_0 √(d d_0)
};

/**
 * @brief Step size, smoothing radius and minimum K, T_e, T_c that make the
 *        averaged squared smoothed gradient fall below ε.
 *
 * With `kappa` set, the truncated-variant constants are used (factor 4
 * instead of 2√2 in the logarithms) and the truncation residual is added.
 */
inline ScheduleBounds theoretical_schedule(const ScheduleInputs& in) {
    if (!(in.epsilon > 0.0 && in.epsilon < 1.0)) throw std::invalid_argument("schedule: ε must lie in (0,1)");
    if (!(in.gamma > 0.0 && in.gamma < 1.0)) throw std::invalid_argument("schedule: γ must lie in (0,1)");
    if (!(in.rho0 > 0.0 && in.rho0 < 1.0)) throw std::invalid_argument("schedule: ρ_0 must lie in (0,1)");
    if (!(in.dim > 0.0 && in.lipschitz > 0.0 && in.group_size > 0.0))
        throw std::invalid_argument("schedule: d, L and n_0 must be positive");
    ScheduleBounds out;
    const double eps15 = std::pow(in.epsilon, 1.5);
    const double n0sq = in.group_size * in.group_size;
    const double j0 = std::max(std::abs(in.value_lo), std::abs(in.value_hi));
    out.value_scale = j0;
    out.delta = in.epsilon / (in.lipschitz * std::sqrt(in.dim));
    const double factor = in.kappa ? 4.0 : 2.0 * std::sqrt(2.0);

    auto log_bound = [](double argument, double base) {
        LogBound b;
        b.argument = argument;
        b.vacuous = !(argument < 1.0);
        b.value = std::log(argument) / std::log(base);
        return b;
    };
    out.horizon_min = log_bound(eps15 / (factor * n0sq * in.lipschitz * in.dim * j0), in.gamma);
    out.consensus_min = log_bound(
        eps15 / (factor * n0sq * in.lipschitz * in.dim * (in.value_hi - in.value_lo + j0)), in.rho0);

    const double te = static_cast<double>(out.horizon_min.steps());
    const double tail = 1.0 + std::pow(in.gamma, te);
    const double l4 = std::pow(in.lipschitz, 4.0);
    out.b_constant = 2.0 * (in.agents * in.value_hi - in.smoothed_initial) +
                     l4 * n0sq * (in.sigma0 * in.sigma0 + tail * tail * j0 * j0);
    out.episodes_min = std::pow(in.dim, 3.0) * out.b_constant * out.b_constant / std::pow(in.epsilon, 5.0);
    const double k = in.episodes.value_or(out.episodes_min);
    out.step = eps15 / (std::pow(in.dim, 1.5) * std::sqrt(k));
    if (in.kappa) {
        out.residual_factor = std::pow(in.gamma, static_cast<double>(*in.kappa + 1));
        out.residual = *out.residual_factor * in.max_excluded * in.lipschitz_max * std::sqrt(in.dim * in.agent_dim_max);
    }
    return out;
}

}  // namespace netmarl
