#pragma once

/**
 * @file consensus.hpp
 * @brief Per-cluster doubly stochastic weights and local average consensus.
 *
 * A WeightMatrix stores only the principal block over its member set; the
 * full N x N matrix is that block on the members and the identity elsewhere.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "netmarl/graph.hpp"
#include "netmarl/random.hpp"

namespace netmarl {

class WeightMatrix {
public:
    struct Entry {
        std::size_t col;  // index into members()
        double weight;
    };

    WeightMatrix(std::size_t agent_count, VertexSet members, std::vector<std::vector<Entry>> rows)
        : agent_count_(agent_count), members_(std::move(members)), rows_(std::move(rows)) {
        if (rows_.size() != members_.size()) throw std::invalid_argument("weight matrix: row count mismatch");
    }

    std::size_t agent_count() const { return agent_count_; }
    std::size_t size() const { return members_.size(); }
    const VertexSet& members() const { return members_; }
    const std::vector<Entry>& row(std::size_t r) const { return rows_.at(r); }

    /// Entry C_ij by agent ids; 0 off the stored pattern (identity outside the members).
    double at(AgentId i, AgentId j) const {
        auto ri = index_of(i), rj = index_of(j);
        if (ri == kUnreachable || rj == kUnreachable) return (i == j && ri == kUnreachable) ? 1.0 : 0.0;
        for (const auto& e : rows_[ri])
            if (e.col == rj) return e.weight;
        return 0.0;
    }

    std::vector<double> dense_block() const {
        const auto n = size();
        std::vector<double> block(n * n, 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (const auto& e : rows_[r]) block[r * n + e.col] = e.weight;
        return block;
    }

    /// max |row sum − 1|, |column sum − 1| over the block.
    double doubly_stochastic_error() const {
        const auto n = size();
        std::vector<double> col(n, 0.0);
        double err = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            double rs = 0.0;
            for (const auto& e : rows_[r]) {
                rs += e.weight;
                col[e.col] += e.weight;
            }
            err = std::max(err, std::abs(rs - 1.0));
        }
        for (double c : col) err = std::max(err, std::abs(c - 1.0));
        return err;
    }

    bool nonnegative() const {
        for (const auto& row : rows_)
            for (const auto& e : row)
                if (e.weight < 0.0) return false;
        return true;
    }

    std::size_t index_of(AgentId a) const {
        auto it = std::lower_bound(members_.begin(), members_.end(), a);
        return (it != members_.end() && *it == a) ? static_cast<std::size_t>(it - members_.begin()) : kUnreachable;
    }

private:
    std::size_t agent_count_;
    VertexSet members_;
    std::vector<std::vector<Entry>> rows_;
};

/**
 * @brief Metropolis weights on `members`:
 *        C_ij = 1 / (1 + max(d_i, d_j)) for communication-adjacent members,
 *        C_ii = 1 − Σ_{j≠i} C_ij, zero elsewhere.
 *
 * Degrees d_i are taken in the whole communication graph.
 */
inline WeightMatrix metropolis_weights(const DirectedGraph& comm, VertexSet members) {
    if (!comm.is_symmetric()) throw std::invalid_argument("metropolis_weights: communication graph is not undirected");
    if (members.empty()) throw std::invalid_argument("metropolis_weights: empty member set");
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    for (AgentId m : members) comm.check_vertex(m);
    if (!induced_weakly_connected(comm, members))
        throw std::invalid_argument("metropolis_weights: member set starting at agent " +
                                    std::to_string(members.front() + 1) +
                                    " is not connected in the communication graph");
    const auto n = members.size();
    std::vector<std::vector<WeightMatrix::Entry>> rows(n);
    for (std::size_t r = 0; r < n; ++r) {
        const AgentId i = members[r];
        const auto di = comm.out_neighbors(i).size();
        double off = 0.0;
        std::vector<WeightMatrix::Entry> row;
        std::size_t diag_pos = 0;
        for (std::size_t c = 0; c < n; ++c) {
            const AgentId j = members[c];
            if (j == i) {
                diag_pos = row.size();
                row.push_back({c, 0.0});
            } else if (comm.has_edge(i, j)) {
                const auto dj = comm.out_neighbors(j).size();
                double w = 1.0 / (1.0 + static_cast<double>(std::max(di, dj)));
                row.push_back({c, w});
                off += w;
            }
        }
        row[diag_pos].weight = 1.0 - off;
        rows[r] = std::move(row);
    }
    return WeightMatrix(comm.size(), std::move(members), std::move(rows));
}

/**
 * @brief ρ = ‖C_0 − (1/n)·11ᵀ‖₂ on the member block.
 *
 * Power iteration on AᵀA with a fixed pseudo-random start, tolerance 1e-10,
 * at most 10'000 iterations.
 */
inline double contraction_factor(const WeightMatrix& w, double tolerance = 1e-10, std::size_t max_iter = 10'000) {
    if (!w.nonnegative() || w.doubly_stochastic_error() > 1e-9)
        throw std::invalid_argument("contraction_factor: block is not doubly stochastic");
    const auto n = w.size();
    if (n == 1) return 0.0;
    auto a = w.dense_block();
    const double avg = 1.0 / static_cast<double>(n);
    for (double& x : a) x -= avg;

    auto apply = [&](const std::vector<double>& v, bool transpose) {
        std::vector<double> out(n, 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                out[transpose ? c : r] += a[r * n + c] * v[transpose ? r : c];
        return out;
    };
    auto norm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };

    Rng rng(0x5eedULL);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = unif(rng);
    double nv = norm(v);
    for (double& x : v) x /= nv;

    // stop on the eigen-residual ‖Mv − λv‖, which bounds the eigenvalue error
    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        auto next = apply(apply(v, false), true);
        lambda = 0.0;
        for (std::size_t k = 0; k < n; ++k) lambda += v[k] * next[k];
        double residual = 0.0;
        for (std::size_t k = 0; k < n; ++k) residual += (next[k] - lambda * v[k]) * (next[k] - lambda * v[k]);
        const double nn = norm(next);
        if (nn == 0.0) return 0.0;
        if (std::sqrt(residual) <= tolerance) break;
        for (std::size_t k = 0; k < n; ++k) v[k] = next[k] / nn;
    }
    return std::sqrt(std::max(lambda, 0.0));
}

/// μ(v) for v = 0..T_c over the member set.
struct ConsensusRun {
    std::vector<std::vector<double>> values;
    std::size_t iterations = 0;

    const std::vector<double>& final() const { return values.back(); }
};

/// One multiply μ ← C μ in ascending member order.
inline void consensus_step(const WeightMatrix& w, std::vector<double>& mu, std::vector<double>& scratch) {
    scratch.assign(w.size(), 0.0);
    for (std::size_t r = 0; r < w.size(); ++r) {
        double acc = 0.0;
        for (const auto& e : w.row(r)) acc += e.weight * mu[e.col];
        scratch[r] = acc;
    }
    mu.swap(scratch);
}

/**
 * @brief Runs T_c consensus iterations.
 *
 * `initial` is indexed by agent (length N); non-member entries are ignored,
 * since non-members start at 0 and never mix in.
 */
inline ConsensusRun run_consensus(const WeightMatrix& w, std::span<const double> initial, long iterations,
                                  bool keep_history = true) {
    if (iterations < 0) throw std::invalid_argument("run_consensus: T_c must be non-negative");
    if (initial.size() != w.agent_count()) throw std::invalid_argument("run_consensus: dimension mismatch");
    ConsensusRun run;
    run.iterations = static_cast<std::size_t>(iterations);
    std::vector<double> mu(w.size()), scratch;
    for (std::size_t r = 0; r < w.size(); ++r) mu[r] = initial[w.members()[r]];
    run.values.push_back(mu);
    for (long v = 0; v < iterations; ++v) {
        consensus_step(w, mu, scratch);
        if (keep_history) run.values.push_back(mu);
    }
    if (!keep_history) run.values.push_back(std::move(mu));
    return run;
}

/// ‖n·μ − 1·Σμ(0)‖₂ for member values μ with reference sum.
inline double disagreement(std::span<const double> mu, double reference_sum) {
    const double n = static_cast<double>(mu.size());
    double s = 0.0;
    for (double x : mu) s += (n * x - reference_sum) * (n * x - reference_sum);
    return std::sqrt(s);
}

}  // namespace netmarl
