// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "netmarl/experiment.hpp"
#include "test_util.hpp"

using namespace netmarl;
using namespace netmarl::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(6);
    ss << x;
    return ss.str();
}

Outcome graph_oracles() {
    Outcome out;
    std::mt19937_64 rng(20240601);
    std::size_t bad = 0;
    for (int trial = 0; trial < 500; ++trial) {
        auto cg = random_coupling(rng);
        auto r = check_graph_oracles(cg);
        if (!(r.learning_sets_match && r.paths_exist && r.sandwich && r.equality_rule)) ++bad;
    }
    out.require(bad == 0, std::to_string(bad) + " of 500 instances disagree with the oracles");
    return out;
}

Outcome structural_anchors() {
    Outcome out;
    {
        auto cfg = example_config("warehouse9");
        auto cg = cfg.graphs();
        auto ls = learning_sets(cg);
        const VertexSet expected{0, 1, 2, 3};
        out.require(ls.learning_sets[0] == expected && ls.learning_sets[1] == expected,
                    "warehouse learning sets of agents 1 and 2");
        for (AgentId i = 0; i < cg.agent_count(); ++i)
            out.require(ls.learning_sets[i] == ls.reach[i], "warehouse I^L differs from SO reach at agent " +
                                                                std::to_string(i + 1));
    }
    {
        auto cfg = example_config("reward_shortcut");
        auto cg = cfg.graphs();
        auto ls = learning_sets(cg);
        out.require(ls.learning_sets[0] == VertexSet{0, 1, 3}, "counterexample learning set of agent 1");
        out.require(scc_decompose(cg.sor()).clusters.size() == 1, "counterexample SOR not strongly connected");
    }
    {
        auto cfg = example_config("ring100");
        auto cg = cfg.graphs();
        auto ls = learning_sets(cg);
        const auto n = cg.agent_count();
        bool complete = true;
        for (AgentId i = 0; i < n; ++i) complete = complete && ls.learning_sets[i].size() == n;
        out.require(complete && ls.learning_graph.edge_count() == n * (n - 1), "ring learning graph not complete");
    }
    return out;
}

Outcome consensus_properties() {
    Outcome out;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal(0.0, 5.0);
    std::size_t tested = 0;
    while (tested < 100) {
        const std::size_t n = 3 + rng() % 10;
        auto g = symmetrize(random_graph(n, 0.3, rng));
        // members: the component of a random vertex
        AgentId start = rng() % n;
        auto members = reachable_set(g, start);
        if (members.size() < 2) continue;
        ++tested;
        auto w = metropolis_weights(g, members);
        if (w.doubly_stochastic_error() > 1e-12) out.require(false, "weights not doubly stochastic");
        const double rho = contraction_factor(w);
        std::vector<double> init(n);
        for (auto& x : init) x = normal(rng);
        double sum = 0.0;
        for (AgentId m : members) sum += init[m];
        auto run = run_consensus(w, init, 40);
        const double d0 = disagreement(run.values[0], sum);
        for (std::size_t v = 1; v < run.values.size(); ++v) {
            const auto& mu = run.values[v];
            const double s = std::accumulate(mu.begin(), mu.end(), 0.0);
            if (std::abs(s - sum) > 1e-12 * std::max(1.0, std::abs(sum)) * members.size())
                out.require(false, "member sum drifted at iteration " + std::to_string(v));
            if (disagreement(mu, sum) > std::pow(rho, static_cast<double>(v)) * d0 + 1e-9)
                out.require(false, "contraction bound violated at iteration " + std::to_string(v));
        }
    }
    return out;
}

Outcome gradient_equality() {
    Outcome out;
    for (auto [name, agent] : {std::pair<const char*, AgentId>{"chain3", 2}, {"warehouse9", 0}}) {
        auto cfg = example_config(name);
        Instance inst(cfg);
        const auto eval = rollout_evaluator(inst.env, inst.policy, cfg.trainer.horizon, inst.gamma);
        McSettings mc{2.0, 100000, derive_seed(cfg.seed, {0xacc4, agent}), false};
        auto r = check_gradient_equality(eval, inst.theta0, inst.policy.layout(), inst.ls, agent, mc);
        out.require(r.pass, std::string(name) + " agent " + std::to_string(agent + 1) + ": max |diff|/SE " +
                                fmt(r.measured) + " > " + fmt(r.claimed));
    }
    return out;
}

Outcome return_and_variance_bounds() {
    Outcome out;
    auto cfg = example_config("warehouse9");
    Instance inst(cfg);
    auto tail = check_evaluation_tail(inst.env, inst.policy, inst.theta0, inst.ls.cluster_sets, cfg.trainer.horizon,
                                      cfg.verify.long_horizon, inst.gamma, 10000, derive_seed(cfg.seed, {0xacc5}));
    out.require(tail.pass, "evaluation tail " + fmt(tail.measured) + " > " + fmt(tail.claimed));
    const auto agg = inst.aggregator(Variant::DistributedLvf);
    auto var = empirical_variance_check(inst.env, inst.policy, inst.theta0, agg, cfg.trainer.horizon,
                                        cfg.trainer.consensus_iters, inst.gamma, cfg.trainer.delta, 10000, 1000,
                                        derive_seed(cfg.seed, {0xacc6}));
    for (const auto& r : var.reports)
        out.require(r.pass, r.check + " " + fmt(r.measured) + " > " + fmt(r.claimed));
    return out;
}

Outcome residual_anchor() {
    Outcome out;
    ScheduleInputs in;
    in.epsilon = 0.1;
    in.dim = 10.0;
    in.lipschitz = 1.0;
    in.gamma = 0.6;
    in.kappa = 6;
    in.rho0 = 0.5;
    in.group_size = 3.0;
    in.value_lo = -10.0;
    in.value_hi = 0.0;
    in.sigma0 = 1.0;
    in.agents = 9.0;
    in.max_excluded = 2.0;
    in.lipschitz_max = 1.0;
    in.agent_dim_max = 4.0;
    const auto b = theoretical_schedule(in);
    const double factor = b.residual_factor.value_or(std::nan(""));
    out.require(std::abs(factor - 0.0279936) <= 1e-12, "residual factor " + fmt(factor));
    out.require(factor <= 0.028, "residual factor above 0.028");
    return out;
}

struct Groups {
    std::vector<GroupSummary> summary;
    const GroupSummary* find(Variant v, Feedback f, std::optional<std::size_t> kappa = std::nullopt) const {
        for (const auto& g : summary)
            if (g.run.variant == v && g.run.feedback == f && g.kappa == kappa) return &g;
        return nullptr;
    }
};

Groups train_all(const std::string& name) {
    auto cfg = example_config(name);
    Instance inst(cfg);
    const auto jobs = expand_jobs(cfg.trainer.variants, cfg.trainer.kappas, cfg.trainer.seeds);
    auto traces = parallel_map<TrainTrace>(jobs.size(), workers(),
                                           [&](std::size_t k) { return run_job(inst, cfg, jobs[k], cfg.seed); });
    return {summarize(inst, jobs, traces, cfg.trainer.episodes)};
}

Outcome variance_reduction() {
    Outcome out;
    const auto g = train_all("warehouse9");
    const auto* c1 = g.find(Variant::Centralized, Feedback::OnePoint);
    const auto* c2 = g.find(Variant::Centralized, Feedback::TwoPoint);
    const auto* d1 = g.find(Variant::DistributedLvf, Feedback::OnePoint);
    const auto* d2 = g.find(Variant::DistributedLvf, Feedback::TwoPoint);
    if (!c1 || !c2 || !d1 || !d2) {
        out.require(false, "missing variant group");
        return out;
    }
    for (const auto* s : {c1, c2, d1, d2}) out.require(s->diverged == 0, s->label + " diverged");
    auto cmp = [&](const char* what, const GroupSummary* lo, const GroupSummary* hi) {
        out.require(lo->final.variance < hi->final.variance,
                    std::string(what) + ": " + lo->label + " " + fmt(lo->final.variance) + " !< " + hi->label + " " +
                        fmt(hi->final.variance));
    };
    cmp("(a)", d1, c1);
    cmp("(b)", d2, c2);
    cmp("(c)", c2, c1);
    cmp("(c)", d2, d1);
    return out;
}

Outcome truncated_reproduction() {
    Outcome out;
    const auto g = train_all("ring100");
    std::vector<const GroupSummary*> tlvf;
    for (std::size_t k : {1u, 4u})
        for (auto f : {Feedback::OnePoint, Feedback::TwoPoint}) {
            const auto* s = g.find(Variant::DistributedTlvf, f, k);
            if (!s) {
                out.require(false, "missing tlvf group");
                return out;
            }
            tlvf.push_back(s);
        }
    for (const auto* s : tlvf) {
        out.require(s->diverged == 0, s->label + " diverged");
        out.require(s->final.mean > s->initial.mean,
                    s->label + " final mean " + fmt(s->final.mean) + " <= initial " + fmt(s->initial.mean));
    }
    const auto* best = g.find(Variant::DistributedTlvf, Feedback::TwoPoint, 1);
    for (const auto* s : tlvf)
        if (s != best)
            out.require(best->final.variance < s->final.variance,
                        best->label + " variance " + fmt(best->final.variance) + " !< " + s->label + " " +
                            fmt(s->final.variance));
    return out;
}

Outcome truncation_decay() {
    Outcome out;
    auto cfg = example_config("path6");
    Instance inst(cfg);
    const AgentId agent = 0;
    auto res = run_truncation_gap(inst, cfg, cfg.seed, agent, gap_kappas(inst, cfg, agent));
    out.require(res.rows.size() == res.max_distance + 1, "κ list does not reach D*");
    for (const auto& r : res.reports) {
        if (r.check.rfind("truncation_gap_monotone", 0) == 0 || r.check.rfind("truncation_gap_zero", 0) == 0)
            out.require(r.pass, r.check + " measured " + fmt(r.measured) + " claimed " + fmt(r.claimed));
    }
    return out;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return files;
}

Outcome determinism(const std::string& cli) {
    Outcome out;
    if (cli.empty()) {
        out.require(false, "no --cli given");
        return out;
    }
    const fs::path work = fs::temp_directory_path() / ("netmarl_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);
    std::ifstream in(source_dir() / "configs" / "warehouse9.json");
    auto doc = nlohmann::json::parse(in);
    doc["trainer"]["K"] = 30;
    doc["trainer"]["seeds"] = 3;
    const auto config = work / "small.json";
    std::ofstream(config) << doc.dump(2);

    std::vector<std::map<std::string, std::string>> trees;
    for (int jobs : {1, 4}) {
        const auto dir = work / ("out" + std::to_string(jobs));
        const std::string cmd = "\"" + cli + "\" run --config \"" + config.string() + "\" --out \"" + dir.string() +
                                "\" --seed 17 --jobs " + std::to_string(jobs) + " > /dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        out.require(rc == 0, "run exited with status " + std::to_string(rc));
        if (rc != 0) return out;
        trees.push_back(read_tree(dir));
    }
    std::size_t csvs = 0;
    for (const auto& [name, _] : trees[0])
        if (name.ends_with(".csv")) ++csvs;
    out.require(csvs == 12, "expected 12 CSVs, found " + std::to_string(csvs));
    out.require(trees[0] == trees[1], "outputs differ between repeated runs");
    fs::remove_all(work);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("acceptance suite");
    std::string cli;
    std::vector<int> only;
    app.add_option("--cli", cli, "path to the netmarl executable");
    app.add_option("--only", only, "criterion numbers to run");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"graph oracles on 500 random instances", graph_oracles},
        {"structural anchors (warehouse, counterexample, ring)", structural_anchors},
        {"consensus weights, conservation and contraction", consensus_properties},
        {"local and global smoothed gradients agree", gradient_equality},
        {"evaluation tail and oracle second-moment bounds", return_and_variance_bounds},
        {"truncation residual factor 0.6^7", residual_anchor},
        {"variance ordering on the 9-warehouse run", variance_reduction},
        {"truncated variants on the 100-warehouse ring", truncated_reproduction},
        {"truncation gap decays on the 6-agent path", truncation_decay},
        {"repeated runs give byte-identical output", [&cli] { return determinism(cli); }},
    };

    int failed = 0;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        const int number = static_cast<int>(c + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[c].second();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d %s (%.1fs)%s%s\n", o.pass ? "PASS" : "FAIL", number, criteria[c].first, secs,
                    o.detail.empty() ? "" : ": ", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
