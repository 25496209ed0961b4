#pragma once

/**
 * @file graph.hpp
 * @brief Unweighted directed graphs over a fixed agent set, plus the
 *        reachability, shortest-path and strongly-connected-component
 *        machinery the learning-structure analysis is built on.
 *
 * Agents are 0-based internally. External formats (config, reports) use
 * 1-based ids; conversion happens at the I/O boundary only.
 */

#include <algorithm>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace netmarl {

using AgentId = std::size_t;
using VertexSet = std::vector<AgentId>;  ///< always sorted ascending, unique
using Edge = std::pair<AgentId, AgentId>;

/// Sentinel for "no path".
inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

/**
 * @brief Directed graph with sorted adjacency lists.
 *
 * Self-loops are rejected; duplicate edges collapse. Self-membership of the
 * closed neighbour sets (I_i^X) is added by the callers that need it.
 */
class DirectedGraph {
public:
    DirectedGraph() = default;
    explicit DirectedGraph(std::size_t n) : out_(n), in_(n) {
        if (n == 0) throw std::invalid_argument("graph must have at least one vertex");
    }
    DirectedGraph(std::size_t n, const std::vector<Edge>& edges) : DirectedGraph(n) {
        for (const auto& [from, to] : edges) add_edge(from, to);
    }

    std::size_t size() const { return out_.size(); }

    void add_edge(AgentId from, AgentId to) {
        check_vertex(from);
        check_vertex(to);
        if (from == to)
            throw std::invalid_argument("self-loop (" + std::to_string(from + 1) + "," +
                                        std::to_string(to + 1) + ") not allowed in edge list");
        insert_sorted(out_[from], to);
        insert_sorted(in_[to], from);
    }

    bool has_edge(AgentId from, AgentId to) const {
        check_vertex(from);
        check_vertex(to);
        return std::binary_search(out_[from].begin(), out_[from].end(), to);
    }

    const VertexSet& out_neighbors(AgentId v) const {
        check_vertex(v);
        return out_[v];
    }
    const VertexSet& in_neighbors(AgentId v) const {
        check_vertex(v);
        return in_[v];
    }

    /// Edges in lexicographic (from, to) order.
    std::vector<Edge> edges() const {
        std::vector<Edge> result;
        for (AgentId i = 0; i < size(); ++i)
            for (AgentId j : out_[i]) result.emplace_back(i, j);
        return result;
    }

    std::size_t edge_count() const {
        std::size_t count = 0;
        for (const auto& adj : out_) count += adj.size();
        return count;
    }

    DirectedGraph transpose() const {
        DirectedGraph t(size());
        t.out_ = in_;
        t.in_ = out_;
        return t;
    }

    bool is_symmetric() const {
        for (AgentId i = 0; i < size(); ++i)
            for (AgentId j : out_[i])
                if (!std::binary_search(out_[j].begin(), out_[j].end(), i)) return false;
        return true;
    }

    /// True iff every edge of this graph is an edge of `other`.
    bool is_subgraph_of(const DirectedGraph& other) const {
        if (other.size() != size()) return false;
        for (AgentId i = 0; i < size(); ++i)
            for (AgentId j : out_[i])
                if (!other.has_edge(i, j)) return false;
        return true;
    }

    friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
        return a.out_ == b.out_;
    }

    void check_vertex(AgentId v) const {
        if (v >= size())
            throw std::out_of_range("agent id " + std::to_string(v + 1) + " out of range 1.." +
                                    std::to_string(size()));
    }

private:
    static void insert_sorted(VertexSet& set, AgentId v) {
        auto it = std::lower_bound(set.begin(), set.end(), v);
        if (it == set.end() || *it != v) set.insert(it, v);
    }

    std::vector<VertexSet> out_;
    std::vector<VertexSet> in_;
};

/// Edge-set union of two graphs over the same vertex count.
inline DirectedGraph graph_union(const DirectedGraph& a, const DirectedGraph& b) {
    if (a.size() != b.size()) throw std::invalid_argument("graph union: vertex counts differ");
    DirectedGraph u(a.size());
    for (const auto& [i, j] : a.edges()) u.add_edge(i, j);
    for (const auto& [i, j] : b.edges()) u.add_edge(i, j);
    return u;
}

inline DirectedGraph symmetrize(const DirectedGraph& g) { return graph_union(g, g.transpose()); }

/// Shortest path lengths (edge counts) from `source`; kUnreachable where no path.
inline std::vector<std::size_t> bfs_distances(const DirectedGraph& g, AgentId source) {
    g.check_vertex(source);
    std::vector<std::size_t> dist(g.size(), kUnreachable);
    std::queue<AgentId> frontier;
    dist[source] = 0;
    frontier.push(source);
    while (!frontier.empty()) {
        AgentId v = frontier.front();
        frontier.pop();
        for (AgentId w : g.out_neighbors(v)) {
            if (dist[w] == kUnreachable) {
                dist[w] = dist[v] + 1;
                frontier.push(w);
            }
        }
    }
    return dist;
}

/// {j : path i -> j} ∪ {i}, sorted.
inline VertexSet reachable_set(const DirectedGraph& g, AgentId i) {
    auto dist = bfs_distances(g, i);
    VertexSet result;
    for (AgentId j = 0; j < g.size(); ++j)
        if (dist[j] != kUnreachable) result.push_back(j);
    return result;
}

/**
 * @brief Partition of the vertex set into strongly connected parts.
 *
 * `clusters` are sorted by smallest member; `condensation_order` lists
 * cluster indices in a topological order of the condensation (ties broken
 * by smaller index), which is only meaningful for maximal SCC partitions.
 */
struct Clustering {
    std::vector<VertexSet> clusters;
    std::vector<std::size_t> cluster_of;
    std::vector<std::size_t> condensation_order;

    std::size_t count() const { return clusters.size(); }
};

namespace detail {

inline Clustering make_clustering(std::size_t n, std::vector<VertexSet> parts) {
    for (auto& p : parts) std::sort(p.begin(), p.end());
    std::sort(parts.begin(), parts.end(),
              [](const VertexSet& a, const VertexSet& b) { return a.front() < b.front(); });
    Clustering c;
    c.cluster_of.assign(n, kUnreachable);
    for (std::size_t l = 0; l < parts.size(); ++l)
        for (AgentId v : parts[l]) c.cluster_of[v] = l;
    c.clusters = std::move(parts);
    return c;
}

}  // namespace detail

inline DirectedGraph condense(const DirectedGraph& g, const Clustering& clustering);

/// Topological order of a DAG by Kahn's algorithm, smallest ready vertex first.
inline std::vector<std::size_t> topological_order(const DirectedGraph& dag) {
    std::vector<std::size_t> indegree(dag.size());
    for (AgentId v = 0; v < dag.size(); ++v) indegree[v] = dag.in_neighbors(v).size();
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (AgentId v = 0; v < dag.size(); ++v)
        if (indegree[v] == 0) ready.push(v);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (AgentId w : dag.out_neighbors(v))
            if (--indegree[w] == 0) ready.push(w);
    }
    if (order.size() != dag.size()) throw std::logic_error("topological_order: graph has a cycle");
    return order;
}

/// Maximal SCCs via iterative Tarjan.
inline Clustering scc_decompose(const DirectedGraph& g) {
    const std::size_t n = g.size();
    std::vector<std::size_t> index(n, kUnreachable), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<AgentId> stack;
    std::vector<VertexSet> parts;
    std::size_t next_index = 0;

    // explicit DFS frames: (vertex, position in adjacency list)
    std::vector<std::pair<AgentId, std::size_t>> frames;
    for (AgentId root = 0; root < n; ++root) {
        if (index[root] != kUnreachable) continue;
        frames.emplace_back(root, 0);
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            auto& [v, pos] = frames.back();
            const auto& adj = g.out_neighbors(v);
            if (pos < adj.size()) {
                AgentId w = adj[pos++];
                if (index[w] == kUnreachable) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            AgentId done = v;
            frames.pop_back();
            if (!frames.empty()) {
                AgentId parent = frames.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
            if (low[done] == index[done]) {
                VertexSet part;
                AgentId w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    part.push_back(w);
                } while (w != done);
                parts.push_back(std::move(part));
            }
        }
    }
    Clustering c = detail::make_clustering(n, std::move(parts));
    c.condensation_order = topological_order(condense(g, c));
    return c;
}

/**
 * @brief Cluster-wise graph: edge (l1, l2), l1 != l2, iff some agent edge
 *        crosses from cluster l1 to cluster l2.
 */
inline DirectedGraph condense(const DirectedGraph& g, const Clustering& clustering) {
    if (clustering.cluster_of.size() != g.size())
        throw std::invalid_argument("condense: clustering does not cover the graph");
    DirectedGraph cg(clustering.count());
    for (const auto& [i, j] : g.edges()) {
        auto li = clustering.cluster_of[i], lj = clustering.cluster_of[j];
        if (li != lj) cg.add_edge(li, lj);
    }
    return cg;
}

/// True iff the subgraph induced on `members` is strongly connected.
inline bool induced_strongly_connected(const DirectedGraph& g, const VertexSet& members) {
    if (members.size() <= 1) return true;
    std::vector<bool> inside(g.size(), false);
    for (AgentId v : members) inside[v] = true;
    auto sweep = [&](bool forward) {
        std::vector<bool> seen(g.size(), false);
        std::vector<AgentId> todo{members.front()};
        seen[members.front()] = true;
        std::size_t visited = 1;
        while (!todo.empty()) {
            AgentId v = todo.back();
            todo.pop_back();
            const auto& adj = forward ? g.out_neighbors(v) : g.in_neighbors(v);
            for (AgentId w : adj) {
                if (inside[w] && !seen[w]) {
                    seen[w] = true;
                    ++visited;
                    todo.push_back(w);
                }
            }
        }
        return visited == members.size();
    };
    return sweep(true) && sweep(false);
}

/// True iff `members` induce a connected subgraph when edge directions are ignored.
inline bool induced_weakly_connected(const DirectedGraph& g, const VertexSet& members) {
    if (members.size() <= 1) return true;
    std::vector<bool> inside(g.size(), false), seen(g.size(), false);
    for (AgentId v : members) inside[v] = true;
    std::vector<AgentId> todo{members.front()};
    seen[members.front()] = true;
    std::size_t visited = 1;
    while (!todo.empty()) {
        AgentId v = todo.back();
        todo.pop_back();
        for (const auto* adj : {&g.out_neighbors(v), &g.in_neighbors(v)}) {
            for (AgentId w : *adj) {
                if (inside[w] && !seen[w]) {
                    seen[w] = true;
                    ++visited;
                    todo.push_back(w);
                }
            }
        }
    }
    return visited == members.size();
}

/**
 * @brief Builds a Clustering from a user-supplied partition.
 *
 * Each part must induce a strongly connected subgraph of `g`; the parts
 * must be disjoint and cover every vertex.
 */
inline Clustering clustering_from_partition(const DirectedGraph& g, std::vector<VertexSet> parts) {
    std::vector<int> hits(g.size(), 0);
    for (const auto& p : parts) {
        if (p.empty()) throw std::invalid_argument("partition contains an empty part");
        for (AgentId v : p) {
            g.check_vertex(v);
            ++hits[v];
        }
    }
    for (AgentId v = 0; v < g.size(); ++v)
        if (hits[v] != 1)
            throw std::invalid_argument("partition must cover every agent exactly once (agent " +
                                        std::to_string(v + 1) + ")");
    Clustering c = detail::make_clustering(g.size(), std::move(parts));
    for (const auto& p : c.clusters)
        if (!induced_strongly_connected(g, p))
            throw std::invalid_argument("partition part starting at agent " +
                                        std::to_string(p.front() + 1) +
                                        " is not strongly connected in the state/observation graph");
    DirectedGraph cg = condense(g, c);
    try {
        c.condensation_order = topological_order(cg);
    } catch (const std::logic_error&) {
        // finer-than-maximal partitions have cyclic condensations
        c.condensation_order.clear();
    }
    return c;
}

inline bool contains(const VertexSet& set, AgentId v) {
    return std::binary_search(set.begin(), set.end(), v);
}

inline VertexSet set_union(const VertexSet& a, const VertexSet& b) {
    VertexSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline VertexSet set_intersection(const VertexSet& a, const VertexSet& b) {
    VertexSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline bool is_subset(const VertexSet& a, const VertexSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace netmarl
