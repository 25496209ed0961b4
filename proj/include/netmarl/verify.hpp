#pragma once

/**
 * @file verify.hpp
 * @brief Monte-Carlo oracles and statistical bound checks.
 *
 * Evaluators map (θ, sample seed) to a vector of per-agent returns. Two
 * calls with the same seed see the same initial state, which is how every
 * paired comparison here gets its common random numbers.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "netmarl/consensus.hpp"
#include "netmarl/learning.hpp"
#include "netmarl/policy.hpp"
#include "netmarl/random.hpp"
#include "netmarl/rollout.hpp"
#include "netmarl/zoo.hpp"

namespace netmarl {

using ReturnEvaluator = std::function<std::vector<double>(std::span<const double>, std::uint64_t)>;
using ScalarEvaluator = std::function<double(std::span<const double>, std::uint64_t)>;

/// Per-agent T-step returns from a fresh rollout seeded by the sample seed.
template <NetworkedEnvironment Env, LocalPolicy Policy>
ReturnEvaluator rollout_evaluator(const Env& env, const Policy& policy, std::size_t horizon, double gamma) {
    return [&env, &policy, horizon, gamma](std::span<const double> theta, std::uint64_t seed) {
        Rng rng(seed);
        return rollout(env, policy, theta, horizon, gamma, rng).returns;
    };
}

struct SmoothedGradientEstimate {
    std::vector<double> mean;
    std::vector<double> std_error;
    std::size_t samples = 0;
};

struct McSettings {
    double delta = 1.0;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    bool antithetic = false;
    std::size_t begin = 0;  // coordinate slice [begin, end)
    std::size_t end = std::numeric_limits<std::size_t>::max();
};

namespace detail {

struct RunningMoments {
    std::vector<double> mean, m2;
    std::size_t count = 0;

    explicit RunningMoments(std::size_t dim) : mean(dim, 0.0), m2(dim, 0.0) {}

    template <class F>
    void add(F&& value_at) {
        ++count;
        const double n = static_cast<double>(count);
        for (std::size_t c = 0; c < mean.size(); ++c) {
            const double x = value_at(c);
            const double d = x - mean[c];
            mean[c] += d / n;
            m2[c] += d * (x - mean[c]);
        }
    }

    SmoothedGradientEstimate finish() const {
        SmoothedGradientEstimate e{mean, std::vector<double>(mean.size(), 0.0), count};
        if (count > 1)
            for (std::size_t c = 0; c < mean.size(); ++c)
                e.std_error[c] = std::sqrt(m2[c] / static_cast<double>(count - 1) / static_cast<double>(count));
        return e;
    }
};

}  // namespace detail

/**
 * @brief (1/M) Σ_m F_o(θ + δu_m) u_m / δ for several objectives at once.
 *
 * Objective o is Σ_j weights[o][j] · W_j. All objectives share u_m and the
 * evaluation seed of sample m. In antithetic mode each sample is
 * (F_o(θ+δu) − F_o(θ−δu)) u / (2δ) with one seed for both evaluations.
 */
inline std::vector<SmoothedGradientEstimate> mc_smoothed_gradients(const ReturnEvaluator& evaluate,
                                                                   std::span<const double> theta,
                                                                   const std::vector<std::vector<double>>& weights,
                                                                   const McSettings& s) {
    if (!(s.delta > 0.0)) throw std::invalid_argument("mc_smoothed_gradient: δ must be positive");
    if (s.samples < 1) throw std::invalid_argument("mc_smoothed_gradient: M must be at least 1");
    const std::size_t end = std::min(s.end, theta.size());
    if (s.begin > end) throw std::invalid_argument("mc_smoothed_gradient: empty coordinate range");
    const std::size_t dim = end - s.begin;

    std::vector<detail::RunningMoments> acc(weights.size(), detail::RunningMoments(dim));
    std::vector<double> plus(theta.size()), minus(theta.size());
    auto objective = [](const std::vector<double>& w, const std::vector<double>& returns) {
        if (w.size() != returns.size()) throw std::invalid_argument("mc_smoothed_gradient: weight size mismatch");
        double v = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) v += w[j] * returns[j];
        return v;
    };
    for (std::size_t m = 0; m < s.samples; ++m) {
        Rng dir_rng(derive_seed(s.seed, {m, 0}));
        const auto u = sample_direction(theta.size(), dir_rng).u;
        const auto eval_seed = derive_seed(s.seed, {m, 1});
        for (std::size_t c = 0; c < theta.size(); ++c) {
            plus[c] = theta[c] + s.delta * u[c];
            minus[c] = theta[c] - s.delta * u[c];
        }
        const auto up = evaluate(plus, eval_seed);
        std::vector<double> down;
        if (s.antithetic) down = evaluate(minus, eval_seed);
        for (std::size_t o = 0; o < weights.size(); ++o) {
            const double value = s.antithetic
                                     ? (objective(weights[o], up) - objective(weights[o], down)) / (2.0 * s.delta)
                                     : objective(weights[o], up) / s.delta;
            acc[o].add([&](std::size_t c) { return value * u[s.begin + c]; });
        }
    }
    std::vector<SmoothedGradientEstimate> out;
    for (const auto& a : acc) out.push_back(a.finish());
    return out;
}

/// Single-objective form over a scalar evaluator.
inline SmoothedGradientEstimate mc_smoothed_gradient(const ScalarEvaluator& evaluate, std::span<const double> theta,
                                                     const McSettings& s) {
    ReturnEvaluator wrapped = [&evaluate](std::span<const double> t, std::uint64_t seed) {
        return std::vector<double>{evaluate(t, seed)};
    };
    return mc_smoothed_gradients(wrapped, theta, {{1.0}}, s).front();
}

/// One check result; `pass` iff measured ≤ claimed·(1 + tolerance) for inequalities.
struct BoundReport {
    std::string check;
    std::string lemma_ref;
    double claimed = 0.0;
    double measured = 0.0;
    bool pass = false;
    std::uint64_t seed = 0;
    std::string detail;
};

inline BoundReport inequality_report(std::string check, std::string ref, double claimed, double measured,
                                     double slack, std::uint64_t seed) {
    BoundReport r{std::move(check), std::move(ref), claimed, measured, false, seed, {}};
    r.pass = std::isfinite(measured) && measured <= claimed * (1.0 + slack) + 1e-12;
    return r;
}

struct Tolerances {
    double equality_se = 3.0;   // pooled standard errors for equality claims
    double inequality_slack = 0.05;
    double monotone_se = 2.0;
};

/// Indicator weights of a vertex set over N agents.
inline std::vector<double> indicator(std::size_t n, const VertexSet& members) {
    std::vector<double> w(n, 0.0);
    for (AgentId j : members) w.at(j) = 1.0;
    return w;
}

/**
 * @brief Compares the θ_i-slices of the smoothed gradients of the global
 *        objective and of agent i's local objective.
 *
 * measured = max_c |diff_c| / pooled_se_c; claimed = the SE multiple.
 */
inline BoundReport check_gradient_equality(const ReturnEvaluator& evaluate, std::span<const double> theta,
                                           const ParamLayout& layout, const LearningStructure& ls, AgentId agent,
                                           McSettings s, const Tolerances& tol = {}) {
    const auto n = ls.agent_count();
    s.begin = layout.offset(agent);
    s.end = s.begin + layout.dim(agent);
    auto est = mc_smoothed_gradients(evaluate, theta,
                                     {std::vector<double>(n, 1.0), indicator(n, ls.learning_sets[agent])}, s);
    double worst = 0.0;
    for (std::size_t c = 0; c < est[0].mean.size(); ++c) {
        const double pooled = std::hypot(est[0].std_error[c], est[1].std_error[c]);
        const double diff = std::abs(est[0].mean[c] - est[1].mean[c]);
        const double z = pooled > 0.0 ? diff / pooled : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        worst = std::max(worst, z);
    }
    BoundReport r{"gradient_equality_agent_" + std::to_string(agent + 1),
                  "local objective gradient equals global gradient", tol.equality_se, worst, worst <= tol.equality_se,
                  s.seed, {}};
    r.detail = "max |global − local| / pooled SE over " + std::to_string(est[0].mean.size()) + " coordinates, M=" +
               std::to_string(s.samples);
    return r;
}

struct ReturnBounds {
    double lower = 0.0;  // J_l
    double upper = 0.0;  // J_u
    double scale = 0.0;  // J_0
    double agent_tail = 0.0;  // γ^{T_e} J_0
    double group_tail(std::size_t n_l) const { return static_cast<double>(n_l) * agent_tail; }
};

inline ReturnBounds return_bounds(double r_lo, double r_hi, double gamma, std::size_t horizon) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("return_bounds: γ must lie in (0,1)");
    if (r_lo > r_hi) throw std::invalid_argument("return_bounds: r_l must not exceed r_u");
    ReturnBounds b;
    b.lower = r_lo / (1.0 - gamma);
    b.upper = r_hi / (1.0 - gamma);
    b.scale = std::max(std::abs(b.lower), std::abs(b.upper));
    b.agent_tail = std::pow(gamma, static_cast<double>(horizon)) * b.scale;
    return b;
}

/**
 * @brief Measured |Ĵ_i − mean Ŵ_i| against n_l γ^{T_e} J_0 for every cluster.
 *
 * Ĵ_i is approximated by rollouts of `long_horizon` steps sharing initial
 * states with the T_e-step ones; r_0 is the largest |r_i(t)| seen.
 */
template <NetworkedEnvironment Env, LocalPolicy Policy>
BoundReport check_evaluation_tail(const Env& env, const Policy& policy, std::span<const double> theta,
                                  const std::vector<VertexSet>& groups, std::size_t horizon, std::size_t long_horizon,
                                  double gamma, std::size_t draws, std::uint64_t seed, const Tolerances& tol = {}) {
    if (long_horizon <= horizon) throw std::invalid_argument("evaluation tail: long horizon must exceed T_e");
    const auto n = env.agent_count();
    std::vector<double> short_sum(groups.size(), 0.0), long_sum(groups.size(), 0.0);
    double r0 = 0.0;
    for (std::size_t m = 0; m < draws; ++m) {
        const auto s = derive_seed(seed, {m});
        Rng a(s), b(s);
        auto w_short = rollout(env, policy, theta, horizon, gamma, a);
        auto w_long = rollout(env, policy, theta, long_horizon, gamma, b);
        r0 = std::max({r0, std::abs(w_long.reward_min), std::abs(w_long.reward_max)});
        for (std::size_t l = 0; l < groups.size(); ++l)
            for (AgentId j : groups[l]) {
                if (j >= n) throw std::invalid_argument("evaluation tail: group member out of range");
                short_sum[l] += w_short.returns[j];
                long_sum[l] += w_long.returns[j];
            }
    }
    const auto bounds = return_bounds(-r0, r0, gamma, horizon);
    double worst_ratio = -1.0, claimed = 0.0, measured = 0.0;
    for (std::size_t l = 0; l < groups.size(); ++l) {
        const double gap = std::abs(long_sum[l] - short_sum[l]) / static_cast<double>(draws);
        const double bound = bounds.group_tail(groups[l].size());
        const double ratio = bound > 0.0 ? gap / bound : (gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            claimed = bound;
            measured = gap;
        }
    }
    auto r = inequality_report("evaluation_truncation_tail", "finite-horizon evaluation error of the local objective",
                               claimed, measured, tol.inequality_slack, seed);
    r.detail = "r_0=" + std::to_string(r0) + ", worst group of " + std::to_string(groups.size()) +
               ", draws=" + std::to_string(draws);
    return r;
}

struct VarianceMeasurement {
    std::vector<double> second_moment;              // E‖g_i‖² for the tested aggregator
    std::vector<double> centralized_second_moment;  // same draws, global-sum oracle
    std::vector<double> bound;                      // B_l^μ d_i / δ²
    double sigma0 = 0.0;
    double value_scale = 0.0;  // J_0
    std::vector<BoundReport> reports;
};

/**
 * @brief Empirical E‖g_i‖² of the one-point oracle against B_l^μ d_i/δ².
 *
 * σ_0 is the largest per-agent standard deviation of W_i at θ over
 * `noise_draws` initial states; J_0 = r_0/(1−γ) with r_0 the largest |r|
 * seen anywhere. The centralized oracle is evaluated on the same draws.
 */
template <NetworkedEnvironment Env, LocalPolicy Policy>
VarianceMeasurement empirical_variance_check(const Env& env, const Policy& policy, std::span<const double> theta,
                                             const ReturnAggregator& aggregator, std::size_t horizon,
                                             std::size_t consensus_iters, double gamma, double delta,
                                             std::size_t draws, std::size_t noise_draws, std::uint64_t seed,
                                             const Tolerances& tol = {}) {
    const auto n = env.agent_count();
    const auto& layout = policy.layout();
    VarianceMeasurement out;
    out.second_moment.assign(n, 0.0);
    out.centralized_second_moment.assign(n, 0.0);
    double r0 = 0.0;

    std::vector<double> mean(n, 0.0), m2(n, 0.0);
    for (std::size_t m = 0; m < noise_draws; ++m) {
        Rng rng(derive_seed(seed, {m, 7}));
        auto res = rollout(env, policy, theta, horizon, gamma, rng);
        r0 = std::max({r0, std::abs(res.reward_min), std::abs(res.reward_max)});
        for (AgentId i = 0; i < n; ++i) {
            const double d = res.returns[i] - mean[i];
            mean[i] += d / static_cast<double>(m + 1);
            m2[i] += d * (res.returns[i] - mean[i]);
        }
    }
    for (AgentId i = 0; i < n && noise_draws > 1; ++i)
        out.sigma0 = std::max(out.sigma0, std::sqrt(m2[i] / static_cast<double>(noise_draws - 1)));

    std::vector<double> perturbed(theta.size());
    const auto central = ReturnAggregator::centralized(n);
    for (std::size_t m = 0; m < draws; ++m) {
        Rng dir(derive_seed(seed, {m, 0}));
        const auto u = sample_direction(theta.size(), dir).u;
        for (std::size_t c = 0; c < theta.size(); ++c) perturbed[c] = theta[c] + delta * u[c];
        Rng rng(derive_seed(seed, {m, 1}));
        auto res = rollout(env, policy, perturbed, horizon, gamma, rng);
        r0 = std::max({r0, std::abs(res.reward_min), std::abs(res.reward_max)});
        const auto local = aggregator.estimate(res.returns, consensus_iters);
        const auto global = central.estimate(res.returns, consensus_iters);
        for (AgentId i = 0; i < n; ++i) {
            double uu = 0.0;
            for (std::size_t c = layout.offset(i); c < layout.offset(i) + layout.dim(i); ++c) uu += u[c] * u[c];
            out.second_moment[i] += local[i] * local[i] * uu / (delta * delta);
            out.centralized_second_moment[i] += global[i] * global[i] * uu / (delta * delta);
        }
    }
    out.value_scale = r0 / (1.0 - gamma);
    const double tail = 1.0 + std::pow(gamma, static_cast<double>(horizon));
    for (AgentId i = 0; i < n; ++i) {
        out.second_moment[i] /= static_cast<double>(draws);
        out.centralized_second_moment[i] /= static_cast<double>(draws);
        const double nl = static_cast<double>(aggregator.group_size(i));
        const double b_mu = nl * nl * (out.sigma0 * out.sigma0 + tail * tail * out.value_scale * out.value_scale);
        out.bound.push_back(b_mu * static_cast<double>(layout.dim(i)) / (delta * delta));
        auto r = inequality_report("oracle_second_moment_agent_" + std::to_string(i + 1),
                                   "second moment of the one-point oracle", out.bound[i], out.second_moment[i],
                                   tol.inequality_slack, seed);
        r.detail = "n_l=" + std::to_string(aggregator.group_size(i)) + ", d_i=" + std::to_string(layout.dim(i)) +
                   ", draws=" + std::to_string(draws);
        out.reports.push_back(std::move(r));
    }
    return out;
}

/// Agents whose group is smaller than N must have a smaller oracle second moment than the centralized one.
inline std::vector<BoundReport> variance_ordering_reports(const VarianceMeasurement& v,
                                                          const ReturnAggregator& aggregator, std::uint64_t seed) {
    std::vector<BoundReport> out;
    for (AgentId i = 0; i < v.second_moment.size(); ++i) {
        if (aggregator.group_size(i) >= aggregator.agent_count()) continue;
        BoundReport r{"local_below_global_second_moment_agent_" + std::to_string(i + 1),
                      "local evaluation lowers oracle variance", v.centralized_second_moment[i], v.second_moment[i],
                      v.second_moment[i] < v.centralized_second_moment[i], seed, {}};
        out.push_back(std::move(r));
    }
    return out;
}

/**
 * @brief max over sampled pairs of |F(θ) − F(θ′)| / ‖θ − θ′‖.
 *
 * Pair p is (θ_p, θ_p + scale·v) with θ_p cycling through `points` and v
 * Gaussian; both evaluations share one seed. Identical pairs are skipped.
 */
inline double estimate_lipschitz(const ScalarEvaluator& evaluate, const std::vector<std::vector<double>>& points,
                                 std::size_t pairs, double scale, std::uint64_t seed) {
    if (pairs < 1) throw std::invalid_argument("estimate_lipschitz: pair count must be at least 1");
    if (points.empty()) throw std::invalid_argument("estimate_lipschitz: no sample points");
    double best = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
        const auto& base = points[p % points.size()];
        Rng rng(derive_seed(seed, {p, 0}));
        auto v = sample_direction(base.size(), rng).u;
        std::vector<double> other(base.size());
        double dist2 = 0.0;
        for (std::size_t c = 0; c < base.size(); ++c) {
            other[c] = base[c] + scale * v[c];
            dist2 += (other[c] - base[c]) * (other[c] - base[c]);
        }
        if (dist2 == 0.0) continue;
        const auto s = derive_seed(seed, {p, 1});
        best = std::max(best, std::abs(evaluate(base, s) - evaluate(other, s)) / std::sqrt(dist2));
    }
    return best;
}

/// Pairs of explicit points; identical pairs are skipped.
inline double estimate_lipschitz_pairs(const ScalarEvaluator& evaluate,
                                       const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                                       std::uint64_t seed) {
    if (pairs.empty()) throw std::invalid_argument("estimate_lipschitz: pair count must be at least 1");
    double best = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& [a, b] = pairs[p];
        double dist2 = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) dist2 += (a[c] - b[c]) * (a[c] - b[c]);
        if (dist2 == 0.0) continue;
        const auto s = derive_seed(seed, {p});
        best = std::max(best, std::abs(evaluate(a, s) - evaluate(b, s)) / std::sqrt(dist2));
    }
    return best;
}

/// Per-output Lipschitz estimates from shared pairs (θ, θ + scale·v) around `theta`.
inline std::vector<double> estimate_lipschitz_outputs(const ReturnEvaluator& evaluate, std::span<const double> theta,
                                                      std::size_t pairs, double scale, std::uint64_t seed) {
    if (pairs < 1) throw std::invalid_argument("estimate_lipschitz: pair count must be at least 1");
    std::vector<double> best;
    std::vector<double> other(theta.size());
    for (std::size_t p = 0; p < pairs; ++p) {
        Rng rng(derive_seed(seed, {p, 0}));
        auto v = sample_direction(theta.size(), rng).u;
        double dist2 = 0.0;
        for (std::size_t c = 0; c < theta.size(); ++c) {
            other[c] = theta[c] + scale * v[c];
            dist2 += (other[c] - theta[c]) * (other[c] - theta[c]);
        }
        if (dist2 == 0.0) continue;
        const auto s = derive_seed(seed, {p, 1});
        const auto a = evaluate(theta, s);
        const auto b = evaluate(other, s);
        best.resize(a.size(), 0.0);
        for (std::size_t j = 0; j < a.size(); ++j) best[j] = std::max(best[j], std::abs(a[j] - b[j]) / std::sqrt(dist2));
    }
    return best;
}

struct TruncationGapRow {
    std::size_t kappa = 0;
    double gap = 0.0;       // ‖mean of the θ_i-slice difference‖
    double std_error = 0.0; // sqrt(Σ_c se_c²)
    std::size_t excluded = 0;  // |V̄_l^κ|
    double bound = 0.0;        // γ^{κ+1} Σ_{j∈V̄_l^κ} L_j √(d d_i)
};

struct TruncationGapResult {
    AgentId agent = 0;
    std::size_t max_distance = 0;  // D_l^*
    std::vector<TruncationGapRow> rows;
    std::vector<BoundReport> reports;
};

/**
 * @brief Monte-Carlo ‖∇_{θ_i} J̃_i^δ − ∇_{θ_i} J^δ‖ for each κ.
 *
 * Each κ uses the same samples; the difference objective is the sum of
 * returns outside I_l^κ, so the gap estimate is computed directly from it.
 */
inline TruncationGapResult truncation_gap(const ReturnEvaluator& evaluate, std::span<const double> theta,
                                          const ParamLayout& layout, const DistanceTable& dist,
                                          const LearningStructure& ls, AgentId agent,
                                          const std::vector<std::size_t>& kappas, const std::vector<double>& lipschitz,
                                          double gamma, McSettings s, const Tolerances& tol = {}) {
    if (kappas.empty()) throw std::invalid_argument("truncation_gap: κ list is empty");
    const auto n = ls.agent_count();
    const auto cluster = ls.clustering.cluster_of.at(agent);
    TruncationGapResult out;
    out.agent = agent;
    out.max_distance = dist.max_distance.at(cluster);

    std::vector<std::vector<double>> weights;
    std::vector<TruncationStructure> structures;
    for (auto kappa : kappas) {
        structures.push_back(truncated_sets(dist, ls, kappa));
        auto w = indicator(n, structures.back().member_sets[cluster]);
        for (double& x : w) x = 1.0 - x;  // global minus truncated
        weights.push_back(std::move(w));
    }
    s.begin = layout.offset(agent);
    s.end = s.begin + layout.dim(agent);
    auto est = mc_smoothed_gradients(evaluate, theta, weights, s);

    const double d = static_cast<double>(layout.total_dim());
    const double di = static_cast<double>(layout.dim(agent));
    for (std::size_t k = 0; k < kappas.size(); ++k) {
        TruncationGapRow row;
        row.kappa = kappas[k];
        double g2 = 0.0, se2 = 0.0;
        for (std::size_t c = 0; c < est[k].mean.size(); ++c) {
            g2 += est[k].mean[c] * est[k].mean[c];
            se2 += est[k].std_error[c] * est[k].std_error[c];
        }
        row.gap = std::sqrt(g2);
        row.std_error = std::sqrt(se2);
        double lsum = 0.0;
        const auto& beyond = structures[k].excluded[cluster];
        row.excluded = beyond.size();
        for (AgentId j : beyond) lsum += lipschitz.empty() ? 0.0 : lipschitz.at(j);
        row.bound = std::pow(gamma, static_cast<double>(kappas[k] + 1)) * lsum * std::sqrt(d * di);
        out.rows.push_back(row);
    }
    for (std::size_t k = 1; k < out.rows.size(); ++k) {
        const auto& prev = out.rows[k - 1];
        const auto& cur = out.rows[k];
        const double slack = tol.monotone_se * std::hypot(prev.std_error, cur.std_error);
        BoundReport r{"truncation_gap_monotone_kappa_" + std::to_string(cur.kappa),
                      "truncation gradient gap non-increasing in kappa", prev.gap + slack, cur.gap,
                      cur.gap <= prev.gap + slack, s.seed, {}};
        out.reports.push_back(std::move(r));
    }
    for (const auto& row : out.rows) {
        if (row.kappa < out.max_distance) continue;
        const double slack = tol.monotone_se * row.std_error;
        BoundReport r{"truncation_gap_zero_kappa_" + std::to_string(row.kappa),
                      "truncation gradient gap vanishes beyond the largest distance", slack, row.gap,
                      row.gap <= slack, s.seed, {}};
        out.reports.push_back(std::move(r));
    }
    return out;
}

/// Truncation residual factor γ^{κ+1} against a claimed decimal value.
inline BoundReport residual_factor_report(double gamma, std::size_t kappa, double claimed, std::uint64_t seed) {
    ScheduleInputs in;
    in.gamma = gamma;
    in.kappa = kappa;
    const auto b = theoretical_schedule(in);
    BoundReport r{"truncation_residual_factor", "truncation residual factor gamma^(kappa+1)", claimed,
                  *b.residual_factor, *b.residual_factor <= claimed, seed, {}};
    r.detail = "gamma=" + std::to_string(gamma) + ", kappa=" + std::to_string(kappa);
    return r;
}

}  // namespace netmarl
