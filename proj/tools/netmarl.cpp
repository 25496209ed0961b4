// netmarl: graph analysis, training runs, verification suites and κ sweeps
// for networked warehouse MARL instances described by a JSON config.
//
// Exit codes: 0 ok, 1 usage/config error, 2 assumption violation, 3 verification failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netmarl/config.hpp"
#include "netmarl/experiment.hpp"

namespace fs = std::filesystem;
using namespace netmarl;

namespace {

enum Exit { kOk = 0, kConfigError = 1, kAssumption = 2, kVerifyFailed = 3 };

struct Options {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    bool force = false;
    bool timing = false;
    bool self_pairs = false;
    std::vector<std::string> variants;
    std::string kappa;
    std::size_t rollout_seed = 0;
};

std::uint64_t resolve_seed(const Options& o, const RunConfig& cfg) {
    if (o.seed) return *o.seed;
    if (const char* env = std::getenv("NETMARL_SEED")) return std::stoull(env);
    return cfg.seed;
}

std::size_t resolve_jobs(const Options& o) {
    if (o.jobs) return std::max<std::size_t>(1, *o.jobs);
    if (const char* env = std::getenv("NETMARL_JOBS")) return std::max<std::size_t>(1, std::stoul(env));
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::size_t> parse_kappa_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        long long v = std::stoll(item, &used);
        if (used != item.size() || v < 0) throw ConfigError("--kappa expects non-negative integers, got '" + item + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<RunVariant> selected_variants(const Options& o, const RunConfig& cfg) {
    if (o.variants.empty()) return cfg.trainer.variants;
    std::vector<RunVariant> out;
    for (const auto& v : o.variants) {
        try {
            for (auto rv : parse_run_variants(v))
                if (std::find(out.begin(), out.end(), rv) == out.end()) out.push_back(rv);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--variant: ") + e.what());
        }
    }
    return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream f(path, std::ios::binary);
    f << j.dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

fs::path prepare_out(const Options& o) {
    fs::path dir(o.out);
    fs::create_directories(dir);
    return dir;
}

/// Requirements a variant places on the instance; empty string when satisfied.
std::string variant_problem(const Instance& inst, const RunVariant& v, const std::vector<std::size_t>& kappas) {
    if (v.variant == Variant::Centralized) return {};
    if (!inst.assumptions.comm_undirected) return "communication graph is not undirected";
    if (v.variant == Variant::DistributedLvf) {
        if (!inst.assumptions.weakly_coupled)
            return "every learning set is the whole agent set, so local evaluation brings no reduction";
        for (std::size_t l = 0; l < inst.assumptions.cluster_comm_connected.size(); ++l)
            if (!inst.assumptions.cluster_comm_connected[l])
                return "learning set of cluster " + std::to_string(l + 1) + " is not connected in the communication graph";
        return {};
    }
    for (auto k : kappas) {
        const auto t = inst.truncation(k);
        for (std::size_t l = 0; l < t.member_sets.size(); ++l)
            if (!induced_weakly_connected(inst.graphs.comm(), t.member_sets[l]))
                return "truncated set of cluster " + std::to_string(l + 1) + " at kappa=" + std::to_string(k) +
                       " is not connected in the communication graph";
    }
    return {};
}

int cmd_analyze(const Options& o) {
    const auto cfg = load_config(o.config);
    const auto seed = resolve_seed(o, cfg);
    const Instance inst(cfg);
    auto kappas = o.kappa.empty() ? cfg.trainer.kappas : parse_kappa_list(o.kappa);
    const auto dir = prepare_out(o);
    write_json(dir / "analysis.json", analysis_json(inst, cfg, seed, kappas, o.self_pairs));
    if (!analysis_passes(inst)) {
        std::cerr << "assumption check failed: "
                  << (!inst.assumptions.weakly_coupled ? "no learning set is smaller than the agent set"
                                                       : "a cluster's learning set is not connected in the communication graph")
                  << " (report written to " << (dir / "analysis.json").string() << ")\n";
        return kAssumption;
    }
    return kOk;
}

int cmd_run(const Options& o) {
    const auto cfg = load_config(o.config);
    const auto seed = resolve_seed(o, cfg);
    const Instance inst(cfg);
    const auto variants = selected_variants(o, cfg);
    const auto kappas = o.kappa.empty() ? cfg.trainer.kappas : parse_kappa_list(o.kappa);
    if (kappas.empty()) throw ConfigError("--kappa list is empty");
    for (const auto& v : variants) {
        auto problem = variant_problem(inst, v, kappas);
        if (problem.empty()) continue;
        const bool fatal = problem.find("not connected") != std::string::npos ||
                           problem.find("not undirected") != std::string::npos;
        if (!o.force || fatal) {
            std::cerr << "assumption violation for " << v.name() << ": " << problem
                      << (fatal ? "" : " (use --force to run anyway)") << '\n';
            return kAssumption;
        }
        std::cerr << "warning: " << v.name() << ": " << problem << '\n';
    }
    const auto jobs = expand_jobs(variants, kappas, cfg.trainer.seeds);
    const auto dir = prepare_out(o);
    const auto header = header_line("run", cfg.hash, seed);
    std::function<TrainTrace(std::size_t)> task = [&](std::size_t k) {
        auto trace = run_job(inst, cfg, jobs[k], seed, o.timing);
        std::ofstream csv(dir / jobs[k].file_name(), std::ios::binary);
        write_trace_csv(csv, header, jobs[k], trace);
        auto ck = checkpoint_json(inst.policy.layout(), trace.theta);
        ck["header"] = header;
        std::ofstream theta(dir / (jobs[k].label() + "_seed" + std::to_string(jobs[k].seed_index) + ".theta.json"),
                            std::ios::binary);
        theta << ck.dump() << '\n';
        return trace;
    };
    const auto traces = parallel_map(jobs.size(), resolve_jobs(o), task);
    const auto groups = summarize(inst, jobs, traces, cfg.trainer.episodes);
    write_json(dir / "summary.json", summary_json(groups, cfg, seed));
    for (const auto& g : groups)
        std::cout << g.label << ": final mean " << format_number(g.final.mean) << ", across-seed variance "
                  << format_number(g.final.variance) << (g.diverged ? ", diverged seeds " + std::to_string(g.diverged) : "")
                  << '\n';
    return kOk;
}

int cmd_verify(const Options& o) {
    const auto cfg = load_config(o.config);
    const auto seed = resolve_seed(o, cfg);
    const Instance inst(cfg);
    if (!inst.graphs.comm().is_symmetric())
        throw std::invalid_argument("metropolis_weights: communication graph is not undirected");
    const auto res = verify_suite(inst, cfg, seed);
    const auto dir = prepare_out(o);
    write_json(dir / "verify.json", verify_json(res, cfg, seed));
    for (const auto& r : res.reports)
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.check << ": measured " << format_number(r.measured)
                  << ", claimed " << format_number(r.claimed) << " (" << r.lemma_ref << ", seed " << r.seed << ")\n";
    return res.all_pass() ? kOk : kVerifyFailed;
}

int cmd_sweep(const Options& o) {
    const auto cfg = load_config(o.config);
    const auto seed = resolve_seed(o, cfg);
    const Instance inst(cfg);
    const auto kappas = o.kappa.empty() ? cfg.trainer.kappas : parse_kappa_list(o.kappa);
    if (kappas.empty()) throw ConfigError("sweep needs a non-empty κ list");
    std::vector<RunVariant> tlvf;
    for (const auto& v : selected_variants(o, cfg))
        if (v.variant == Variant::DistributedTlvf) tlvf.push_back(v);
    if (tlvf.empty()) throw ConfigError("sweep needs a distributed-tlvf variant in the config or via --variant");
    for (const auto& v : tlvf)
        if (auto p = variant_problem(inst, v, kappas); !p.empty()) {
            std::cerr << "assumption violation: " << p << '\n';
            return kAssumption;
        }

    const auto jobs = expand_jobs(tlvf, kappas, cfg.trainer.seeds);
    std::function<TrainTrace(std::size_t)> task = [&](std::size_t k) { return run_job(inst, cfg, jobs[k], seed); };
    const auto traces = parallel_map(jobs.size(), resolve_jobs(o), task);
    const auto groups = summarize(inst, jobs, traces, cfg.trainer.episodes);

    const AgentId agent = cfg.verify.agents.empty() ? 0 : cfg.verify.agents.front();
    const auto gap = run_truncation_gap(inst, cfg, seed, agent, kappas);

    const auto dir = prepare_out(o);
    std::ofstream csv(dir / "sweep.csv", std::ios::binary);
    csv << header_line("sweep", cfg.hash, seed) << '\n';
    csv << "kappa,feedback,n0_kappa,final_mean_return,final_across_seed_variance,truncation_gap,truncation_gap_se\n";
    for (const auto& g : groups) {
        std::size_t row = 0;
        while (row < kappas.size() && kappas[row] != *g.kappa) ++row;
        csv << *g.kappa << ',' << to_string(g.run.feedback) << ',' << g.group_size_max << ','
            << format_number(g.final.mean) << ',' << format_number(g.final.variance) << ','
            << format_number(gap.rows[row].gap) << ',' << format_number(gap.rows[row].std_error) << '\n';
    }
    std::cout << "wrote " << (dir / "sweep.csv").string() << '\n';
    return kOk;
}

int cmd_rollout(const Options& o) {
    const auto cfg = load_config(o.config);
    const auto seed = resolve_seed(o, cfg);
    const Instance inst(cfg);
    Rng rng(derive_seed(seed, {o.rollout_seed, 2}));
    const auto res = rollout(inst.env, inst.policy, inst.theta0, cfg.trainer.horizon, inst.gamma, rng, true);
    const auto dir = prepare_out(o);
    std::ofstream csv(dir / "trajectory.csv", std::ios::binary);
    csv << header_line("rollout", cfg.hash, seed) << '\n';
    csv << "t,agent,stock,z,action,reward\n";
    for (const auto& r : res.trajectory) {
        csv << r.t << ',' << r.agent + 1 << ',' << format_number(r.stock) << ',' << format_number(r.exo) << ',';
        for (std::size_t k = 0; k < r.action.size(); ++k) csv << (k ? ";" : "") << format_number(r.action[k]);
        csv << ',' << format_number(r.reward) << '\n';
    }
    if (res.out_of_range_observations)
        std::cerr << "warning: " << res.out_of_range_observations
                  << " observations fell outside the RBF centre range\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Networked MARL with local value evaluation: analysis, training and verification"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--seed", o.seed, "master seed (overrides NETMARL_SEED and the config)");
    };
    auto training = [&](CLI::App* sub) {
        sub->add_option("--jobs", o.jobs, "worker threads (overrides NETMARL_JOBS)");
        sub->add_option("--variant", o.variants, "variant[:feedback], repeatable");
        sub->add_option("--kappa", o.kappa, "comma-separated truncation indices");
    };

    auto* analyze = app.add_subcommand("analyze", "learning sets, clusters, distances and assumption verdicts");
    common(analyze);
    analyze->add_option("--kappa", o.kappa, "comma-separated truncation indices for the tables");
    analyze->add_flag("--self-pairs", o.self_pairs, "list the implicit (i,i) pairs in learning_edges");

    auto* run = app.add_subcommand("run", "train every variant × seed and write traces");
    common(run);
    training(run);
    run->add_flag("--force", o.force, "run variants whose weak-coupling check fails");
    run->add_flag("--timing", o.timing, "record wall-clock per episode (breaks byte-identical output)");

    auto* verify = app.add_subcommand("verify", "run the statistical check suite");
    common(verify);

    auto* sweep = app.add_subcommand("sweep", "truncated variant across κ values");
    common(sweep);
    training(sweep);

    auto* roll = app.add_subcommand("rollout", "dump one trajectory at the initial policy");
    common(roll);
    roll->add_option("--index", o.rollout_seed, "initial-state draw index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*analyze) return cmd_analyze(o);
        if (*run) return cmd_run(o);
        if (*verify) return cmd_verify(o);
        if (*sweep) return cmd_sweep(o);
        if (*roll) return cmd_rollout(o);
    } catch (const AssumptionViolation& e) {
        std::cerr << "assumption violation: " << e.what() << '\n';
        return kAssumption;
    } catch (const ConfigError& e) {
        std::cerr << o.config << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
    return kConfigError;
}
