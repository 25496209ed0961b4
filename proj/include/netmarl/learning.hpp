#pragma once

/**
 * @file learning.hpp
 * @brief Coupling graphs and everything derived from them: learning sets,
 *        the learning graph, assumption diagnostics, reward-flow distances
 *        and truncated (distance-limited) member sets.
 */

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "netmarl/graph.hpp"

namespace netmarl {

/**
 * @brief The four coupling graphs over one agent set, plus the derived
 *        unions G_SO = G_S ∪ G_O and G_SOR = G_SO ∪ G_R.
 *
 * An edge (j, i) always points from the agent whose information is used to
 * the agent using it: i's transition reads j (state), i observes j
 * (observation), i's reward involves j (reward), i receives from j
 * (communication).
 */
class CouplingGraphs {
public:
    CouplingGraphs(DirectedGraph state, DirectedGraph obs, DirectedGraph reward, DirectedGraph comm)
        : state_(std::move(state)), obs_(std::move(obs)), reward_(std::move(reward)),
          comm_(std::move(comm)) {
        const auto n = state_.size();
        if (obs_.size() != n || reward_.size() != n || comm_.size() != n)
            throw std::invalid_argument("coupling graphs must share one vertex count");
        so_ = graph_union(state_, obs_);
        sor_ = graph_union(so_, reward_);
    }

    std::size_t agent_count() const { return state_.size(); }
    const DirectedGraph& state() const { return state_; }
    const DirectedGraph& obs() const { return obs_; }
    const DirectedGraph& reward() const { return reward_; }
    const DirectedGraph& comm() const { return comm_; }
    const DirectedGraph& so() const { return so_; }
    const DirectedGraph& sor() const { return sor_; }

    /// I_i^X = in-neighbours of i in graph X, plus i.
    static VertexSet in_closed(const DirectedGraph& g, AgentId i) {
        VertexSet s = g.in_neighbors(i);
        s.insert(std::lower_bound(s.begin(), s.end(), i), i);
        return s;
    }
    /// Out-neighbours of i in graph X, plus i.
    static VertexSet out_closed(const DirectedGraph& g, AgentId i) {
        VertexSet s = g.out_neighbors(i);
        s.insert(std::lower_bound(s.begin(), s.end(), i), i);
        return s;
    }

    VertexSet state_inputs(AgentId i) const { return in_closed(state_, i); }   // I_i^S
    VertexSet observed(AgentId i) const { return in_closed(obs_, i); }         // I_i^O
    VertexSet reward_inputs(AgentId i) const { return in_closed(reward_, i); }  // I_i^R
    VertexSet reward_outputs(AgentId i) const { return out_closed(reward_, i); }  // I_i^{R+}

private:
    DirectedGraph state_, obs_, reward_, comm_, so_, sor_;
};

/**
 * @brief Learning sets I_i^L, the learning graph and per-cluster LVF member sets.
 *
 * Agents in one cluster share their learning set, so `cluster_sets[l]` is
 * I_i^L for any member i of cluster l.
 */
struct LearningStructure {
    std::vector<VertexSet> reach;          ///< R_i^SO
    std::vector<VertexSet> learning_sets;  ///< I_i^L
    DirectedGraph learning_graph;          ///< E_L without the implicit self-pairs
    Clustering clustering;
    std::vector<VertexSet> cluster_sets;   ///< I_l^cl
    std::vector<std::size_t> cluster_sizes;  ///< n_l

    std::size_t agent_count() const { return learning_sets.size(); }

    /// E_L as (j, i) pairs, optionally with the (i, i) pairs.
    std::vector<Edge> learning_edges(bool include_self_pairs) const {
        std::vector<Edge> out;
        for (AgentId j = 0; j < agent_count(); ++j)
            for (AgentId i = 0; i < agent_count(); ++i)
                if (contains(learning_sets[i], j) && (include_self_pairs || i != j))
                    out.emplace_back(j, i);
        return out;
    }
};

/**
 * @brief I_i^L = ∪_{k ∈ R_i^SO} I_k^{R+} and the learning graph.
 *
 * With no clustering argument the maximal SCCs of G_SO are used; a finer
 * partition (each part strongly connected in G_SO) can be supplied for the
 * truncated pipeline.
 */
inline LearningStructure learning_sets(const CouplingGraphs& cg,
                                       std::optional<Clustering> clustering = std::nullopt) {
    const auto n = cg.agent_count();
    LearningStructure ls;
    ls.reach.resize(n);
    ls.learning_sets.resize(n);
    ls.learning_graph = DirectedGraph(n);
    for (AgentId i = 0; i < n; ++i) {
        ls.reach[i] = reachable_set(cg.so(), i);
        VertexSet acc;
        for (AgentId k : ls.reach[i]) acc = set_union(acc, cg.reward_outputs(k));
        ls.learning_sets[i] = std::move(acc);
        for (AgentId j : ls.learning_sets[i])
            if (j != i) ls.learning_graph.add_edge(j, i);
    }
    ls.clustering = clustering ? std::move(*clustering) : scc_decompose(cg.so());
    if (ls.clustering.cluster_of.size() != n)
        throw std::invalid_argument("clustering does not match agent count");
    for (const auto& members : ls.clustering.clusters) {
        ls.cluster_sets.push_back(ls.learning_sets[members.front()]);
        ls.cluster_sizes.push_back(ls.cluster_sets.back().size());
    }
    return ls;
}

/// Verdicts of the graph-level assumptions the algorithms rely on.
struct AssumptionReport {
    bool weakly_coupled = false;         ///< ∃ i: I_i^L ≠ V
    std::size_t so_scc_count = 0;
    std::size_t sor_scc_count = 0;
    bool sufficient_indicator = false;   ///< G_SOR has > 1 SCC
    bool necessary_indicator = false;    ///< G_SO has > 1 SCC
    bool comm_undirected = false;
    std::vector<bool> cluster_comm_connected;  ///< per cluster: I_l connected in G_cm
    bool comm_sufficient = false;        ///< G_cm undirected and E_SO ⊆ E_cm

    bool comm_ok() const {
        return comm_undirected && std::all_of(cluster_comm_connected.begin(),
                                              cluster_comm_connected.end(), [](bool b) { return b; });
    }
};

/// Connectivity of each member set in the (undirected) communication graph.
inline std::vector<bool> member_sets_connected(const DirectedGraph& comm,
                                               const std::vector<VertexSet>& member_sets) {
    std::vector<bool> out;
    out.reserve(member_sets.size());
    for (const auto& m : member_sets) out.push_back(induced_weakly_connected(comm, m));
    return out;
}

inline AssumptionReport check_assumptions(const CouplingGraphs& cg, const LearningStructure& ls) {
    AssumptionReport r;
    const auto n = cg.agent_count();
    r.weakly_coupled = std::any_of(ls.learning_sets.begin(), ls.learning_sets.end(),
                                   [n](const VertexSet& s) { return s.size() != n; });
    r.so_scc_count = scc_decompose(cg.so()).count();
    r.sor_scc_count = scc_decompose(cg.sor()).count();
    r.sufficient_indicator = r.sor_scc_count > 1;
    r.necessary_indicator = r.so_scc_count > 1;
    r.comm_undirected = cg.comm().is_symmetric();
    r.cluster_comm_connected = member_sets_connected(cg.comm(), ls.cluster_sets);
    r.comm_sufficient = r.comm_undirected && cg.so().is_subgraph_of(cg.comm());
    return r;
}

/// Sentinel distance for D(i, j) = ∞.
inline constexpr std::size_t kInfiniteDistance = kUnreachable;

/**
 * @brief Reward-flow distances D(i, j) and their cluster-wise reductions.
 *
 * D(i,i) = 0; D(i,j) = shortest G_SOR path length when j ∈ I_i^L; ∞ otherwise.
 */
struct DistanceTable {
    std::vector<std::vector<std::size_t>> agent;    ///< agent[i][j] = D(i, j)
    std::vector<std::vector<std::size_t>> cluster;  ///< cluster[l][j] = D(V_l, j)
    std::vector<std::size_t> max_distance;          ///< D_l^* (largest finite D(V_l, j))
};

inline DistanceTable distances(const CouplingGraphs& cg, const LearningStructure& ls) {
    const auto n = cg.agent_count();
    DistanceTable t;
    t.agent.assign(n, std::vector<std::size_t>(n, kInfiniteDistance));
    for (AgentId i = 0; i < n; ++i) {
        auto path = bfs_distances(cg.sor(), i);
        for (AgentId j = 0; j < n; ++j) {
            if (i == j)
                t.agent[i][j] = 0;
            else if (contains(ls.learning_sets[i], j))
                t.agent[i][j] = path[j];
        }
    }
    for (const auto& members : ls.clustering.clusters) {
        std::vector<std::size_t> row(n, kInfiniteDistance);
        std::size_t dmax = 0;
        for (AgentId j = 0; j < n; ++j) {
            for (AgentId i : members) row[j] = std::min(row[j], t.agent[i][j]);
            if (row[j] != kInfiniteDistance) dmax = std::max(dmax, row[j]);
        }
        t.cluster.push_back(std::move(row));
        t.max_distance.push_back(dmax);
    }
    return t;
}

/**
 * @brief Distance-limited member sets for truncation index κ.
 *
 * `member_sets[l]` (I_l^κ = I_l^cl ∩ V_l^κ) drive consensus and the
 * oracle's scale factor. `formula_sizes[l]` is the closed-form count
 * (n_l if κ ≥ D_l^*, else |V_l| + κ), which coincides with
 * |member_sets[l]| only when each distance shell holds one agent.
 */
struct TruncationStructure {
    std::size_t kappa = 0;
    std::vector<VertexSet> reach;           ///< V_l^κ
    std::vector<VertexSet> member_sets;     ///< I_l^κ
    std::vector<VertexSet> excluded;        ///< {j : κ < D(V_l, j) < ∞}
    std::vector<std::size_t> member_counts;  ///< |I_l^κ|
    std::vector<std::size_t> formula_sizes;
    std::vector<std::size_t> max_distances;  ///< D_l^*

    std::size_t max_member_count() const {
        return member_counts.empty() ? 0 : *std::max_element(member_counts.begin(), member_counts.end());
    }
};

inline TruncationStructure truncated_sets(const DistanceTable& dist, const LearningStructure& ls,
                                          std::size_t kappa) {
    TruncationStructure t;
    t.kappa = kappa;
    const auto n = ls.agent_count();
    for (std::size_t l = 0; l < ls.clustering.count(); ++l) {
        VertexSet within, beyond;
        for (AgentId j = 0; j < n; ++j) {
            auto d = dist.cluster[l][j];
            if (d <= kappa)
                within.push_back(j);
            else if (d != kInfiniteDistance)
                beyond.push_back(j);
        }
        auto members = set_intersection(ls.cluster_sets[l], within);
        const auto dstar = dist.max_distance[l];
        t.formula_sizes.push_back(kappa >= dstar ? ls.cluster_sizes[l]
                                                 : ls.clustering.clusters[l].size() + kappa);
        t.member_counts.push_back(members.size());
        t.reach.push_back(std::move(within));
        t.member_sets.push_back(std::move(members));
        t.excluded.push_back(std::move(beyond));
        t.max_distances.push_back(dstar);
    }
    return t;
}

}  // namespace netmarl
