#pragma once

/**
 * @file config.hpp
 * @brief JSON run configuration: schema validation and conversion.
 *
 * Agents are numbered from 1 in files and from 0 in memory. Every section
 * rejects keys it does not know; errors carry the line of the offending key.
 */

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "netmarl/learning.hpp"
#include "netmarl/policy.hpp"
#include "netmarl/warehouse.hpp"
#include "netmarl/zoo.hpp"

namespace netmarl {

inline constexpr const char* kSchemaVersion = "netmarl/1";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunVariant {
    Variant variant = Variant::DistributedLvf;
    Feedback feedback = Feedback::OnePoint;

    std::string name() const { return std::string(to_string(variant)) + ":" + std::string(to_string(feedback)); }
    bool operator==(const RunVariant&) const = default;
};

/// "distributed-lvf:two-point" or a bare variant name (both feedbacks).
inline std::vector<RunVariant> parse_run_variants(const std::string& text) {
    const auto colon = text.find(':');
    const auto v = parse_variant(text.substr(0, colon));
    if (colon == std::string::npos) return {{v, Feedback::OnePoint}, {v, Feedback::TwoPoint}};
    return {{v, parse_feedback(text.substr(colon + 1))}};
}

struct PolicySpec {
    std::size_t centers = 8;
    ObservationRange range;
    std::uint64_t seed = 0;
    double init_scale = 0.0;
    bool retain_self = true;
};

struct TrainerSpec {
    std::vector<RunVariant> variants;
    std::size_t episodes = 600;
    std::size_t horizon = 10;
    std::size_t consensus_iters = 10;
    double step = 0.01;
    double delta = 2.0;
    std::vector<std::size_t> kappas{1};
    std::size_t seeds = 10;
    std::optional<double> grad_clip;

    TrainerConfig base(double gamma) const {
        TrainerConfig c;
        c.episodes = episodes;
        c.horizon = horizon;
        c.consensus_iters = consensus_iters;
        c.step = step;
        c.delta = delta;
        c.gamma = gamma;
        c.grad_clip = grad_clip;
        return c;
    }
};

struct VerifySpec {
    std::size_t samples = 100000;       // M for smoothed-gradient checks
    std::size_t draws = 10000;          // variance and evaluation-tail draws
    std::size_t noise_draws = 1000;     // σ_0 estimation
    std::size_t long_horizon = 200;
    std::vector<AgentId> agents;        // gradient-equality agents; empty = first agent
    std::vector<std::size_t> kappas;    // truncation-gap κ list; empty = 0..D*
    std::size_t lipschitz_pairs = 200;
    double schedule_gamma = 0.6;
    std::size_t schedule_kappa = 6;
    double schedule_claim = 0.028;
};

struct RunConfig {
    std::size_t agents = 0;
    std::vector<Edge> state_edges, obs_edges, reward_edges, comm_edges;
    std::string comm_from;  // "", "so_symmetric" or "state"
    std::optional<std::vector<VertexSet>> clusters;
    double gamma = 0.9;
    WarehouseParams env;
    PolicySpec policy;
    TrainerSpec trainer;
    VerifySpec verify;
    std::uint64_t seed = 0;
    std::uint64_t hash = 0;  // FNV-1a of the file bytes

    CouplingGraphs graphs() const {
        DirectedGraph s(agents, state_edges), o(agents, obs_edges), r(agents, reward_edges);
        DirectedGraph c(agents);
        if (comm_from == "so_symmetric")
            c = symmetrize(graph_union(s, o));
        else if (comm_from == "state")
            c = s;
        else
            c = DirectedGraph(agents, comm_edges);
        return CouplingGraphs(std::move(s), std::move(o), std::move(r), std::move(c));
    }

    std::optional<Clustering> clustering(const CouplingGraphs& cg) const {
        if (!clusters) return std::nullopt;
        return clustering_from_partition(cg.so(), *clusters);
    }
};

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {

using json = nlohmann::json;

inline std::size_t line_at(const std::string& text, std::size_t pos) {
    std::size_t line = 1;
    for (std::size_t k = 0; k < pos && k < text.size(); ++k)
        if (text[k] == '\n') ++line;
    return line;
}

/// Line of the first occurrence of "key" in the text; 0 if not found.
inline std::size_t line_of_key(const std::string& text, const std::string& key) {
    auto pos = text.find("\"" + key + "\"");
    return pos == std::string::npos ? 0 : line_at(text, pos);
}

class Reader {
public:
    explicit Reader(const std::string& text) : text_(text) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const auto line = line_of_key(text_, key);
        throw ConfigError((line ? "line " + std::to_string(line) + ": " : std::string("config: ")) + msg);
    }

    void allow(const json& obj, const std::string& where, std::initializer_list<const char*> keys) const {
        if (!obj.is_object()) fail(where, "'" + where + "' must be an object");
        for (const auto& [k, _] : obj.items()) {
            bool ok = false;
            for (const char* a : keys) ok = ok || k == a;
            if (!ok) fail(k, "unknown key '" + k + "' in " + where);
        }
    }

    template <class T>
    T get(const json& obj, const char* key, T fallback) const {
        if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
        try {
            return obj.at(key).get<T>();
        } catch (const json::exception&) {
            fail(key, std::string("key '") + key + "' has the wrong type");
        }
    }

    double positive(const json& obj, const char* key, double fallback) const {
        double v = get<double>(obj, key, fallback);
        if (!(v > 0.0)) fail(key, std::string("key '") + key + "' must be positive");
        return v;
    }

    std::size_t count(const json& obj, const char* key, std::size_t fallback, std::size_t minimum = 1) const {
        if (!obj.contains(key)) return fallback;
        const auto& v = obj.at(key);
        if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum))
            fail(key, std::string("key '") + key + "' must be an integer ≥ " + std::to_string(minimum));
        return v.get<std::size_t>();
    }

    std::vector<Edge> edges(const json& obj, const char* key, std::size_t n) const {
        std::vector<Edge> out;
        if (!obj.contains(key)) return out;
        const auto& list = obj.at(key);
        if (!list.is_array()) fail(key, std::string("'") + key + "' must be a list of [from, to] pairs");
        for (const auto& e : list) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
                fail(key, std::string("'") + key + "' entries must be [from, to] integer pairs");
            long long a = e[0].get<long long>(), b = e[1].get<long long>();
            if (a < 1 || b < 1 || a > static_cast<long long>(n) || b > static_cast<long long>(n))
                fail(key, std::string("'") + key + "' edge [" + std::to_string(a) + ", " + std::to_string(b) +
                              "] names an agent outside 1.." + std::to_string(n));
            if (a == b) fail(key, std::string("'") + key + "' contains self-loop on agent " + std::to_string(a));
            out.emplace_back(static_cast<AgentId>(a - 1), static_cast<AgentId>(b - 1));
        }
        return out;
    }

    std::vector<AgentId> agent_list(const json& list, const char* key, std::size_t n) const {
        if (!list.is_array()) fail(key, std::string("'") + key + "' must be a list of agent numbers");
        std::vector<AgentId> out;
        for (const auto& a : list) {
            if (!a.is_number_integer() || a.get<long long>() < 1 || a.get<long long>() > static_cast<long long>(n))
                fail(key, std::string("'") + key + "' names an agent outside 1.." + std::to_string(n));
            out.push_back(static_cast<AgentId>(a.get<long long>() - 1));
        }
        return out;
    }

    std::vector<std::size_t> index_list(const json& obj, const char* key) const {
        std::vector<std::size_t> out;
        if (!obj.contains(key)) return out;
        const auto& list = obj.at(key);
        if (!list.is_array()) fail(key, std::string("'") + key + "' must be a list of non-negative integers");
        for (const auto& v : list) {
            if (!v.is_number_integer() || v.get<long long>() < 0)
                fail(key, std::string("'") + key + "' must be a list of non-negative integers");
            out.push_back(v.get<std::size_t>());
        }
        return out;
    }

    std::pair<double, double> range(const json& obj, const char* key, std::pair<double, double> fallback) const {
        if (!obj.contains(key)) return fallback;
        const auto& r = obj.at(key);
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number() ||
            !(r[0].get<double>() < r[1].get<double>()))
            fail(key, std::string("'") + key + "' must be [lo, hi] with lo < hi");
        return {r[0].get<double>(), r[1].get<double>()};
    }

private:
    const std::string& text_;
};

}  // namespace detail

/// Parses and validates a configuration document.
inline RunConfig parse_config(const std::string& text) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("line " + std::to_string(detail::line_at(text, e.byte > 0 ? e.byte - 1 : 0)) +
                          ": malformed JSON (" + std::string(e.what()) + ")");
    }
    detail::Reader rd(text);
    rd.allow(doc, "config", {"schema", "n", "graphs", "clusters", "env", "policy", "trainer", "verify", "seed"});
    if (!doc.contains("schema") || doc.at("schema") != kSchemaVersion)
        rd.fail("schema", std::string("'schema' must be \"") + kSchemaVersion + "\"");

    RunConfig cfg;
    cfg.hash = fnv1a(text);
    cfg.agents = rd.count(doc, "n", 0);
    if (cfg.agents == 0) rd.fail("n", "'n' (agent count) is required and must be at least 1");
    cfg.seed = rd.get<std::uint64_t>(doc, "seed", 0);

    const json graphs = doc.value("graphs", json::object());
    rd.allow(graphs, "graphs", {"state", "obs", "reward", "comm", "comm_from"});
    cfg.state_edges = rd.edges(graphs, "state", cfg.agents);
    cfg.obs_edges = rd.edges(graphs, "obs", cfg.agents);
    cfg.reward_edges = rd.edges(graphs, "reward", cfg.agents);
    cfg.comm_edges = rd.edges(graphs, "comm", cfg.agents);
    cfg.comm_from = rd.get<std::string>(graphs, "comm_from", "");
    if (!cfg.comm_from.empty() && cfg.comm_from != "so_symmetric" && cfg.comm_from != "state")
        rd.fail("comm_from", "'comm_from' must be \"so_symmetric\" or \"state\"");
    if (!cfg.comm_from.empty() && graphs.contains("comm"))
        rd.fail("comm_from", "give either 'comm' or 'comm_from', not both");

    if (doc.contains("clusters")) {
        const auto& parts = doc.at("clusters");
        if (!parts.is_array()) rd.fail("clusters", "'clusters' must be a list of agent lists");
        std::vector<VertexSet> out;
        for (const auto& p : parts) {
            auto members = rd.agent_list(p, "clusters", cfg.agents);
            std::sort(members.begin(), members.end());
            out.push_back(std::move(members));
        }
        cfg.clusters = std::move(out);
    }

    const json env = doc.value("env", json::object());
    rd.allow(env, "env", {"env", "gamma", "init_stock", "chi_sd", "chi_clip", "signal", "reward_floor"});
    if (rd.get<std::string>(env, "env", "warehouse") != "warehouse") rd.fail("env", "only \"warehouse\" is supported");
    cfg.gamma = rd.get<double>(env, "gamma", 0.9);
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) rd.fail("gamma", "'gamma' must lie in (0, 1)");
    cfg.env.init_stock = rd.get<double>(env, "init_stock", 1.0);
    cfg.env.chi_sd = rd.get<double>(env, "chi_sd", 0.1);
    cfg.env.chi_clip = rd.get<double>(env, "chi_clip", 0.01);
    if (cfg.env.chi_sd < 0.0 || cfg.env.chi_clip < 0.0) rd.fail("chi_sd", "'chi_sd' and 'chi_clip' must be ≥ 0");
    if (env.contains("reward_floor") && !env.at("reward_floor").is_null())
        cfg.env.reward_floor = rd.get<double>(env, "reward_floor", 0.0);
    if (env.contains("signal")) {
        const auto& sig = env.at("signal");
        rd.allow(sig, "signal", {"mode", "amplitude", "phase", "freq_mean", "freq_sd", "freq_clip", "omega_sd",
                                 "omega_clip"});
        const auto mode = rd.get<std::string>(sig, "mode", "fixed_sin");
        if (mode == "fixed_sin") {
            cfg.env.signal = SignalMode::FixedSin;
            cfg.env.fixed_amplitude = rd.get<double>(sig, "amplitude", 0.5);
        } else if (mode == "sinusoid") {
            cfg.env.signal = SignalMode::Sinusoid;
            auto vec = [&](const char* key) {
                if (!sig.contains(key)) rd.fail("signal", std::string("sinusoid signal needs '") + key + "'");
                const auto& v = sig.at(key);
                if (v.is_number()) return std::vector<double>{v.get<double>()};
                return rd.get<std::vector<double>>(sig, key, {});
            };
            cfg.env.amplitude = vec("amplitude");
            cfg.env.phase = vec("phase");
            cfg.env.freq_mean = rd.get<double>(sig, "freq_mean", 0.0);
            cfg.env.freq_sd = rd.get<double>(sig, "freq_sd", 0.1);
            cfg.env.freq_clip = rd.get<double>(sig, "freq_clip", 0.01);
            cfg.env.omega_sd = rd.get<double>(sig, "omega_sd", 0.1);
            cfg.env.omega_clip = rd.get<double>(sig, "omega_clip", 0.01);
        } else {
            rd.fail("mode", "signal 'mode' must be \"fixed_sin\" or \"sinusoid\"");
        }
    }

    const json pol = doc.value("policy", json::object());
    rd.allow(pol, "policy", {"n_c", "obs_range", "seed", "init_scale", "retain_self"});
    cfg.policy.centers = rd.count(pol, "n_c", 8);
    cfg.policy.seed = rd.get<std::uint64_t>(pol, "seed", 0);
    cfg.policy.init_scale = rd.get<double>(pol, "init_scale", 0.0);
    if (cfg.policy.init_scale < 0.0) rd.fail("init_scale", "'init_scale' must be ≥ 0");
    cfg.policy.retain_self = rd.get<bool>(pol, "retain_self", true);
    if (pol.contains("obs_range")) {
        const auto& r = pol.at("obs_range");
        rd.allow(r, "obs_range", {"stock", "exo"});
        std::tie(cfg.policy.range.stock_lo, cfg.policy.range.stock_hi) = rd.range(r, "stock", {-2.0, 3.0});
        std::tie(cfg.policy.range.exo_lo, cfg.policy.range.exo_hi) = rd.range(r, "exo", {-1.0, 1.0});
    }

    const json tr = doc.value("trainer", json::object());
    rd.allow(tr, "trainer", {"variants", "K", "T_e", "T_c", "eta", "delta", "kappa", "seeds", "grad_clip"});
    if (tr.contains("variants")) {
        if (!tr.at("variants").is_array()) rd.fail("variants", "'variants' must be a list of names");
        for (const auto& v : tr.at("variants")) {
            if (!v.is_string()) rd.fail("variants", "'variants' must be a list of names");
            try {
                for (auto rv : parse_run_variants(v.get<std::string>())) cfg.trainer.variants.push_back(rv);
            } catch (const std::invalid_argument& e) {
                rd.fail("variants", e.what());
            }
        }
    } else {
        cfg.trainer.variants = {{Variant::Centralized, Feedback::OnePoint},
                                {Variant::Centralized, Feedback::TwoPoint},
                                {Variant::DistributedLvf, Feedback::OnePoint},
                                {Variant::DistributedLvf, Feedback::TwoPoint}};
    }
    cfg.trainer.episodes = rd.count(tr, "K", 600);
    cfg.trainer.horizon = rd.count(tr, "T_e", 10);
    cfg.trainer.consensus_iters = rd.count(tr, "T_c", 10);
    cfg.trainer.step = rd.get<double>(tr, "eta", 0.01);
    if (!(cfg.trainer.step >= 0.0)) rd.fail("eta", "'eta' must be ≥ 0");
    cfg.trainer.delta = rd.positive(tr, "delta", 2.0);
    if (tr.contains("kappa")) {
        cfg.trainer.kappas = rd.index_list(tr, "kappa");
        if (cfg.trainer.kappas.empty()) rd.fail("kappa", "'kappa' list must not be empty");
    }
    cfg.trainer.seeds = rd.count(tr, "seeds", 10);
    if (tr.contains("grad_clip") && !tr.at("grad_clip").is_null())
        cfg.trainer.grad_clip = rd.positive(tr, "grad_clip", 1.0);

    const json ver = doc.value("verify", json::object());
    rd.allow(ver, "verify", {"samples", "draws", "noise_draws", "long_horizon", "agents", "kappa", "lipschitz_pairs",
                             "schedule_gamma", "schedule_kappa", "schedule_claim"});
    cfg.verify.samples = rd.count(ver, "samples", 100000);
    cfg.verify.draws = rd.count(ver, "draws", 10000);
    cfg.verify.noise_draws = rd.count(ver, "noise_draws", 1000, 2);
    cfg.verify.long_horizon = rd.count(ver, "long_horizon", 200);
    if (ver.contains("agents")) cfg.verify.agents = rd.agent_list(ver.at("agents"), "agents", cfg.agents);
    cfg.verify.kappas = rd.index_list(ver, "kappa");
    cfg.verify.lipschitz_pairs = rd.count(ver, "lipschitz_pairs", 200);
    cfg.verify.schedule_gamma = rd.get<double>(ver, "schedule_gamma", 0.6);
    cfg.verify.schedule_kappa = rd.count(ver, "schedule_kappa", 6, 0);
    cfg.verify.schedule_claim = rd.get<double>(ver, "schedule_claim", 0.028);
    if (cfg.verify.long_horizon <= cfg.trainer.horizon)
        rd.fail("long_horizon", "'long_horizon' must exceed T_e");
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace netmarl
