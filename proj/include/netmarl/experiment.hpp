#pragma once

/**
 * @file experiment.hpp
 * @brief Builds a runnable instance from a RunConfig and drives batches of
 *        training runs, analysis reports, verification suites and κ sweeps.
 */

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "netmarl/config.hpp"
#include "netmarl/consensus.hpp"
#include "netmarl/learning.hpp"
#include "netmarl/policy.hpp"
#include "netmarl/rollout.hpp"
#include "netmarl/verify.hpp"
#include "netmarl/warehouse.hpp"
#include "netmarl/zoo.hpp"

namespace netmarl {

/// Everything derived from a configuration that runs share read-only.
struct Instance {
    CouplingGraphs graphs;
    LearningStructure ls;
    AssumptionReport assumptions;
    DistanceTable dist;
    WarehouseEnv env;
    RbfSoftmaxPolicy policy;
    std::vector<double> theta0;
    double gamma;

    explicit Instance(const RunConfig& cfg)
        : graphs(cfg.graphs()),
          ls(learning_sets(graphs, cfg.clustering(graphs))),
          assumptions(check_assumptions(graphs, ls)),
          dist(distances(graphs, ls)),
          env(graphs, cfg.env),
          policy(graphs, cfg.policy.centers, cfg.policy.range, cfg.policy.retain_self),
          theta0(policy.layout().total_dim(), 0.0),
          gamma(cfg.gamma) {
        if (cfg.policy.init_scale > 0.0) {
            Rng rng(derive_seed(cfg.policy.seed, {0x7e7aULL}));
            std::normal_distribution<double> normal(0.0, cfg.policy.init_scale);
            for (double& x : theta0) x = normal(rng);
        }
    }

    TruncationStructure truncation(std::size_t kappa) const { return truncated_sets(dist, ls, kappa); }

    /// Raises AssumptionViolation when the variant's communication requirement fails.
    ReturnAggregator aggregator(Variant v, std::optional<std::size_t> kappa = std::nullopt) const {
        if (v == Variant::DistributedTlvf) {
            if (!kappa) throw std::invalid_argument("tlvf run needs a truncation index");
            auto t = truncation(*kappa);
            return make_aggregator(v, graphs, ls, &t);
        }
        return make_aggregator(v, graphs, ls);
    }
};

struct RunJob {
    RunVariant run;
    std::optional<std::size_t> kappa;
    std::size_t seed_index = 0;

    std::string label() const {
        std::string s = std::string(to_string(run.variant)) + "_" + std::string(to_string(run.feedback));
        if (kappa) s += "_k" + std::to_string(*kappa);
        return s;
    }
    std::string file_name() const { return label() + "_seed" + std::to_string(seed_index) + ".csv"; }
};

/// Expands variants × κ (tlvf only) × seeds in a fixed order.
inline std::vector<RunJob> expand_jobs(const std::vector<RunVariant>& variants, const std::vector<std::size_t>& kappas,
                                       std::size_t seeds) {
    std::vector<RunJob> jobs;
    for (const auto& v : variants) {
        std::vector<std::optional<std::size_t>> ks;
        if (v.variant == Variant::DistributedTlvf)
            for (auto k : kappas) ks.emplace_back(k);
        else
            ks.emplace_back(std::nullopt);
        for (const auto& k : ks)
            for (std::size_t s = 0; s < seeds; ++s) jobs.push_back({v, k, s});
    }
    return jobs;
}

inline TrainTrace run_job(const Instance& inst, const RunConfig& cfg, const RunJob& job, std::uint64_t master,
                          bool timing = false) {
    auto tc = cfg.trainer.base(cfg.gamma);
    tc.variant = job.run.variant;
    tc.feedback = job.run.feedback;
    tc.kappa = job.kappa.value_or(0);
    tc.timing = timing;
    const auto agg = inst.aggregator(job.run.variant, job.kappa);
    return train(tc, inst.env, inst.policy, agg, inst.theta0, SeedStreams::derive(master, job.seed_index));
}

/**
 * @brief Runs `count` independent tasks on at most `workers` threads.
 *
 * Results land at their task index, so the output never depends on scheduling.
 * The first exception (lowest index) is rethrown after all workers finish.
 */
template <class Result>
std::vector<Result> parallel_map(std::size_t count, std::size_t workers, const std::function<Result(std::size_t)>& fn) {
    std::vector<Result> out(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < count;) {
            try {
                out[k] = fn(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Shortest round-trip decimal; "nan"/"inf" spelled out.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string header_line(const std::string& what, std::uint64_t config_hash, std::uint64_t seed) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
    return "# netmarl " + what + " config_hash=" + hash + " seed=" + std::to_string(seed);
}

inline void write_trace_csv(std::ostream& os, const std::string& header, const RunJob& job, const TrainTrace& trace) {
    os << header << '\n';
    os << "episode,seed,variant,feedback,global_return,grad_norm,consensus_residual,wallclock_ms\n";
    std::string variant(to_string(job.run.variant));
    if (job.kappa) variant += "(kappa=" + std::to_string(*job.kappa) + ")";
    for (const auto& r : trace.episodes)
        os << r.episode << ',' << job.seed_index << ',' << variant << ',' << to_string(job.run.feedback) << ','
           << format_number(r.global_return) << ',' << format_number(r.grad_norm) << ','
           << format_number(r.consensus_residual) << ',' << format_number(r.wallclock_ms) << '\n';
}

struct WindowStats {
    double mean = std::numeric_limits<double>::quiet_NaN();      // mean over seeds and window
    double variance = std::numeric_limits<double>::quiet_NaN();  // mean over window of across-seed variance
    std::size_t seeds = 0;
};

/// Statistics over episodes [begin, end) of the traces that reached `end`.
inline WindowStats window_stats(const std::vector<const TrainTrace*>& traces, std::size_t begin, std::size_t end) {
    WindowStats w;
    std::vector<const TrainTrace*> ok;
    for (auto* t : traces)
        if (!t->diverged && t->episodes.size() >= end) ok.push_back(t);
    w.seeds = ok.size();
    if (ok.empty() || end <= begin) return w;
    double total = 0.0, var = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        double m = 0.0;
        for (auto* t : ok) m += t->episodes[k].global_return;
        m /= static_cast<double>(ok.size());
        double v = 0.0;
        for (auto* t : ok) v += (t->episodes[k].global_return - m) * (t->episodes[k].global_return - m);
        if (ok.size() > 1) v /= static_cast<double>(ok.size() - 1);
        total += m;
        var += v;
    }
    const double span = static_cast<double>(end - begin);
    w.mean = total / span;
    w.variance = var / span;
    return w;
}

struct GroupSummary {
    std::string label;
    RunVariant run;
    std::optional<std::size_t> kappa;
    WindowStats initial;  // first min(50, K) episodes
    WindowStats final;    // last min(100, K) episodes
    std::size_t diverged = 0;
    std::size_t group_size_max = 0;  // n_0 or n_0^κ
};

inline constexpr std::size_t kInitialWindow = 50;
inline constexpr std::size_t kFinalWindow = 100;

/// One summary per (variant, feedback, κ) in first-appearance order.
inline std::vector<GroupSummary> summarize(const Instance& inst, const std::vector<RunJob>& jobs,
                                           const std::vector<TrainTrace>& traces, std::size_t episodes) {
    std::vector<GroupSummary> out;
    std::vector<std::vector<const TrainTrace*>> members;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const auto label = jobs[k].label();
        auto it = std::find_if(out.begin(), out.end(), [&](const GroupSummary& g) { return g.label == label; });
        if (it == out.end()) {
            GroupSummary g;
            g.label = label;
            g.run = jobs[k].run;
            g.kappa = jobs[k].kappa;
            if (jobs[k].run.variant == Variant::Centralized)
                g.group_size_max = inst.graphs.agent_count();
            else if (jobs[k].kappa)
                g.group_size_max = inst.truncation(*jobs[k].kappa).max_member_count();
            else
                g.group_size_max = *std::max_element(inst.ls.cluster_sizes.begin(), inst.ls.cluster_sizes.end());
            out.push_back(g);
            members.emplace_back();
            it = out.end() - 1;
        }
        members[static_cast<std::size_t>(it - out.begin())].push_back(&traces[k]);
        if (traces[k].diverged) ++it->diverged;
    }
    const std::size_t init_end = std::min(kInitialWindow, episodes);
    const std::size_t final_begin = episodes - std::min(kFinalWindow, episodes);
    for (std::size_t g = 0; g < out.size(); ++g) {
        out[g].initial = window_stats(members[g], 0, init_end);
        out[g].final = window_stats(members[g], final_begin, episodes);
    }
    return out;
}

inline nlohmann::json json_number(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(format_number(x));
}

inline nlohmann::json summary_json(const std::vector<GroupSummary>& groups, const RunConfig& cfg, std::uint64_t seed) {
    nlohmann::json j;
    j["header"] = header_line("summary", cfg.hash, seed);
    j["episodes"] = cfg.trainer.episodes;
    j["seeds"] = cfg.trainer.seeds;
    j["initial_window"] = std::min(kInitialWindow, cfg.trainer.episodes);
    j["final_window"] = std::min(kFinalWindow, cfg.trainer.episodes);
    auto& arr = j["runs"] = nlohmann::json::array();
    for (const auto& g : groups) {
        nlohmann::json r;
        r["variant"] = std::string(to_string(g.run.variant));
        r["feedback"] = std::string(to_string(g.run.feedback));
        r["kappa"] = g.kappa ? nlohmann::json(*g.kappa) : nlohmann::json(nullptr);
        r["group_size_max"] = g.group_size_max;
        r["initial_mean_return"] = json_number(g.initial.mean);
        r["final_mean_return"] = json_number(g.final.mean);
        r["final_across_seed_variance"] = json_number(g.final.variance);
        r["completed_seeds"] = g.final.seeds;
        r["diverged_seeds"] = g.diverged;
        arr.push_back(std::move(r));
    }
    return j;
}

inline nlohmann::json checkpoint_json(const ParamLayout& layout, const std::vector<double>& theta) {
    nlohmann::json j;
    j["offsets"] = layout.offsets();
    j["n_c"] = layout.centers();
    auto& values = j["theta"] = nlohmann::json::array();
    for (double x : theta) values.push_back(json_number(x));
    return j;
}

namespace detail {

inline nlohmann::json one_based(const VertexSet& s) {
    auto a = nlohmann::json::array();
    for (auto v : s) a.push_back(v + 1);
    return a;
}

inline nlohmann::json distance_value(std::size_t d) {
    return d == kInfiniteDistance ? nlohmann::json("inf") : nlohmann::json(d);
}

}  // namespace detail

/// Graph analysis report; distances of ∞ are written as "inf".
inline nlohmann::json analysis_json(const Instance& inst, const RunConfig& cfg, std::uint64_t seed,
                                    const std::vector<std::size_t>& kappas, bool self_pairs = false) {
    using detail::one_based;
    const auto n = inst.graphs.agent_count();
    nlohmann::json j;
    j["header"] = header_line("analyze", cfg.hash, seed);
    j["agents"] = n;
    auto& agents = j["learning_sets"] = nlohmann::json::array();
    for (AgentId i = 0; i < n; ++i)
        agents.push_back({{"agent", i + 1},
                          {"reach", one_based(inst.ls.reach[i])},
                          {"learning_set", one_based(inst.ls.learning_sets[i])}});
    auto& el = j["learning_edges"] = nlohmann::json::array();
    for (const auto& [from, to] : inst.ls.learning_edges(self_pairs)) el.push_back({from + 1, to + 1});
    j["learning_graph_complete"] = inst.ls.learning_graph.edge_count() == n * (n - 1);

    auto& clusters = j["clusters"] = nlohmann::json::array();
    for (std::size_t l = 0; l < inst.ls.clustering.count(); ++l) {
        nlohmann::json c;
        c["members"] = one_based(inst.ls.clustering.clusters[l]);
        c["learning_set"] = one_based(inst.ls.cluster_sets[l]);
        c["size"] = inst.ls.cluster_sizes[l];
        c["max_distance"] = inst.dist.max_distance[l];
        auto& row = c["distances"] = nlohmann::json::array();
        for (AgentId k = 0; k < n; ++k) row.push_back(detail::distance_value(inst.dist.cluster[l][k]));
        if (inst.assumptions.cluster_comm_connected[l] && inst.assumptions.comm_undirected)
            c["contraction_factor"] = contraction_factor(metropolis_weights(inst.graphs.comm(), inst.ls.cluster_sets[l]));
        else
            c["contraction_factor"] = nullptr;
        clusters.push_back(std::move(c));
    }
    auto& order = j["condensation_order"] = nlohmann::json::array();
    for (auto l : inst.ls.clustering.condensation_order) order.push_back(l + 1);

    auto& trunc = j["truncation"] = nlohmann::json::array();
    for (auto kappa : kappas) {
        const auto t = inst.truncation(kappa);
        nlohmann::json tk;
        tk["kappa"] = kappa;
        auto& rows = tk["clusters"] = nlohmann::json::array();
        for (std::size_t l = 0; l < t.member_sets.size(); ++l) {
            const bool connected = inst.assumptions.comm_undirected &&
                                   induced_weakly_connected(inst.graphs.comm(), t.member_sets[l]);
            rows.push_back({{"cluster", l + 1},
                            {"members", one_based(t.member_sets[l])},
                            {"member_count", t.member_counts[l]},
                            {"formula_size", t.formula_sizes[l]},
                            {"excluded", one_based(t.excluded[l])},
                            {"comm_connected", connected}});
        }
        tk["max_member_count"] = t.max_member_count();
        trunc.push_back(std::move(tk));
    }

    const auto& a = inst.assumptions;
    j["assumptions"] = {{"weakly_coupled", a.weakly_coupled},
                        {"so_scc_count", a.so_scc_count},
                        {"sor_scc_count", a.sor_scc_count},
                        {"sor_has_several_sccs", a.sufficient_indicator},
                        {"so_has_several_sccs", a.necessary_indicator},
                        {"comm_undirected", a.comm_undirected},
                        {"comm_contains_so", a.comm_sufficient},
                        {"clusters_comm_connected", a.cluster_comm_connected},
                        {"lvf_comm_ok", a.comm_ok()}};
    return j;
}

/// Verdict used by the analyze command: weak coupling and LVF communication.
inline bool analysis_passes(const Instance& inst) {
    return inst.assumptions.weakly_coupled && inst.assumptions.comm_ok();
}

struct VerifyResult {
    std::vector<BoundReport> reports;
    std::vector<TruncationGapRow> truncation_rows;
    nlohmann::json schedule;

    bool all_pass() const {
        return std::all_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.pass; });
    }
};

/// Default κ list for the truncation-gap check: 0..D_l^* of the tested agent's cluster.
inline std::vector<std::size_t> gap_kappas(const Instance& inst, const RunConfig& cfg, AgentId agent) {
    if (!cfg.verify.kappas.empty()) return cfg.verify.kappas;
    std::vector<std::size_t> ks;
    const auto dstar = inst.dist.max_distance[inst.ls.clustering.cluster_of[agent]];
    for (std::size_t k = 0; k <= dstar; ++k) ks.push_back(k);
    return ks;
}

inline TruncationGapResult run_truncation_gap(const Instance& inst, const RunConfig& cfg, std::uint64_t seed,
                                              AgentId agent, const std::vector<std::size_t>& kappas) {
    const auto eval = rollout_evaluator(inst.env, inst.policy, cfg.trainer.horizon, inst.gamma);
    const auto lip = estimate_lipschitz_outputs(eval, inst.theta0, cfg.verify.lipschitz_pairs, cfg.trainer.delta / 10.0,
                                                derive_seed(seed, {0x11b}));
    McSettings mc{cfg.trainer.delta, cfg.verify.samples, derive_seed(seed, {0x76a9}), false};
    return truncation_gap(eval, inst.theta0, inst.policy.layout(), inst.dist, inst.ls, agent, kappas, lip, inst.gamma,
                          mc);
}

/**
 * @brief The verification suite for one instance at θ^0.
 *
 * Checks that need a structure the instance lacks (e.g. the local
 * objective check on an instance without weak coupling) still run and
 * report, since equality then holds trivially.
 */
inline VerifyResult verify_suite(const Instance& inst, const RunConfig& cfg, std::uint64_t seed) {
    VerifyResult out;
    const auto& v = cfg.verify;
    const auto eval = rollout_evaluator(inst.env, inst.policy, cfg.trainer.horizon, inst.gamma);
    std::vector<AgentId> agents = v.agents.empty() ? std::vector<AgentId>{0} : v.agents;

    for (AgentId i : agents) {
        McSettings mc{cfg.trainer.delta, v.samples, derive_seed(seed, {0x1e2, i}), false};
        out.reports.push_back(check_gradient_equality(eval, inst.theta0, inst.policy.layout(), inst.ls, i, mc));
    }

    out.reports.push_back(check_evaluation_tail(inst.env, inst.policy, inst.theta0, inst.ls.cluster_sets,
                                                cfg.trainer.horizon, v.long_horizon, inst.gamma, v.draws,
                                                derive_seed(seed, {0x1e5})));

    const auto agg = inst.aggregator(Variant::DistributedLvf);
    auto var = empirical_variance_check(inst.env, inst.policy, inst.theta0, agg, cfg.trainer.horizon,
                                        cfg.trainer.consensus_iters, inst.gamma, cfg.trainer.delta, v.draws,
                                        v.noise_draws, derive_seed(seed, {0x1e7}));
    for (auto& r : var.reports) out.reports.push_back(std::move(r));
    for (auto& r : variance_ordering_reports(var, agg, derive_seed(seed, {0x1e7}))) out.reports.push_back(std::move(r));

    const AgentId gap_agent = agents.front();
    auto gap = run_truncation_gap(inst, cfg, seed, gap_agent, gap_kappas(inst, cfg, gap_agent));
    out.truncation_rows = gap.rows;
    for (auto& r : gap.reports) out.reports.push_back(std::move(r));

    out.reports.push_back(residual_factor_report(v.schedule_gamma, v.schedule_kappa, v.schedule_claim, seed));

    // schedule for this instance, conditional on the estimated L
    const auto lip = estimate_lipschitz_outputs(eval, inst.theta0, v.lipschitz_pairs, cfg.trainer.delta / 10.0,
                                                derive_seed(seed, {0x11c}));
    double lsum = 0.0;
    for (double l : lip) lsum += l;
    double rho0 = 0.0;
    for (const auto& w : agg.matrices()) rho0 = std::max(rho0, contraction_factor(w));
    ScheduleInputs in;
    in.epsilon = 0.1;
    in.dim = static_cast<double>(inst.policy.layout().total_dim());
    in.lipschitz = std::max(lsum, 1e-12);
    in.gamma = inst.gamma;
    in.rho0 = std::clamp(rho0, 1e-12, 1.0 - 1e-12);
    in.group_size = static_cast<double>(*std::max_element(inst.ls.cluster_sizes.begin(), inst.ls.cluster_sizes.end()));
    in.value_lo = -var.value_scale;
    in.value_hi = 0.0;
    in.sigma0 = var.sigma0;
    in.agents = static_cast<double>(inst.graphs.agent_count());
    const auto b = theoretical_schedule(in);
    out.schedule = {{"conditional_on_estimated_lipschitz", true},
                    {"epsilon", in.epsilon},
                    {"lipschitz_estimate", in.lipschitz},
                    {"rho0", rho0},
                    {"sigma0", var.sigma0},
                    {"value_scale", var.value_scale},
                    {"delta", b.delta},
                    {"step", b.step},
                    {"b_constant", b.b_constant},
                    {"episodes_min", json_number(b.episodes_min)},
                    {"horizon_min", b.horizon_min.vacuous ? nlohmann::json("vacuous") : nlohmann::json(b.horizon_min.value)},
                    {"consensus_min",
                     b.consensus_min.vacuous ? nlohmann::json("vacuous") : nlohmann::json(b.consensus_min.value)}};
    return out;
}

inline nlohmann::json verify_json(const VerifyResult& res, const RunConfig& cfg, std::uint64_t seed) {
    nlohmann::json j;
    j["header"] = header_line("verify", cfg.hash, seed);
    auto& arr = j["checks"] = nlohmann::json::array();
    for (const auto& r : res.reports)
        arr.push_back({{"check", r.check},
                       {"lemma_ref", r.lemma_ref},
                       {"claimed", json_number(r.claimed)},
                       {"measured", json_number(r.measured)},
                       {"pass", r.pass},
                       {"seed", r.seed},
                       {"detail", r.detail}});
    auto& gaps = j["truncation_gap"] = nlohmann::json::array();
    for (const auto& g : res.truncation_rows)
        gaps.push_back({{"kappa", g.kappa},
                        {"gap", json_number(g.gap)},
                        {"std_error", json_number(g.std_error)},
                        {"excluded", g.excluded},
                        {"bound_with_estimated_lipschitz", json_number(g.bound)}});
    j["schedule"] = res.schedule;
    j["all_pass"] = res.all_pass();
    return j;
}

}  // namespace netmarl
