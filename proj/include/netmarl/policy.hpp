#pragma once

/**
 * @file policy.hpp
 * @brief RBF-feature softmax allocation policies and the Gaussian
 *        parameter perturbations shared by every zeroth-order variant.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "netmarl/learning.hpp"
#include "netmarl/random.hpp"

namespace netmarl {

/**
 * @brief Where each agent's parameters live in the concatenated vector θ.
 *
 * Agent i owns |J_i| * n_c coefficients, J_i = out(i) ∪ {i} in ascending
 * order; coefficient θ_ij(k) sits at offset(i) + index_of(j) * n_c + k.
 */
class ParamLayout {
public:
    ParamLayout() = default;
    ParamLayout(const DirectedGraph& state_graph, std::size_t centers) : centers_(centers) {
        if (centers == 0) throw std::invalid_argument("n_c must be positive");
        std::size_t offset = 0;
        for (AgentId i = 0; i < state_graph.size(); ++i) {
            destinations_.push_back(CouplingGraphs::out_closed(state_graph, i));
            offsets_.push_back(offset);
            offset += destinations_.back().size() * centers;
        }
        offsets_.push_back(offset);
    }

    std::size_t agent_count() const { return destinations_.size(); }
    std::size_t centers() const { return centers_; }
    std::size_t total_dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
    std::size_t offset(AgentId i) const { return offsets_.at(i); }
    std::size_t dim(AgentId i) const { return offsets_.at(i + 1) - offsets_.at(i); }
    const VertexSet& destinations(AgentId i) const { return destinations_.at(i); }
    const std::vector<std::size_t>& offsets() const { return offsets_; }

    std::span<const double> slice(std::span<const double> theta, AgentId i) const {
        check(theta.size());
        return theta.subspan(offset(i), dim(i));
    }
    std::span<double> slice(std::span<double> theta, AgentId i) const {
        check(theta.size());
        return theta.subspan(offset(i), dim(i));
    }

    void check(std::size_t size) const {
        if (size != total_dim()) throw std::invalid_argument("parameter vector dimension mismatch");
    }

private:
    std::size_t centers_ = 0;
    std::vector<VertexSet> destinations_;
    std::vector<std::size_t> offsets_;
};

/// Van der Corput radical inverse of `index` in `base`.
inline double radical_inverse(std::size_t index, std::size_t base) {
    double result = 0.0, scale = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += static_cast<double>(index % base) * scale;
        index /= base;
        scale /= static_cast<double>(base);
    }
    return result;
}

inline std::size_t nth_prime(std::size_t n) {
    std::size_t count = 0;
    for (std::size_t p = 2;; ++p) {
        bool prime = true;
        for (std::size_t q = 2; q * q <= p; ++q)
            if (p % q == 0) {
                prime = false;
                break;
            }
        if (prime && count++ == n) return p;
    }
}

struct ObservationRange {
    double stock_lo = -2.0, stock_hi = 3.0;
    double exo_lo = -1.0, exo_hi = 1.0;
};

/**
 * @brief RBF centres for one agent, stored row-major (n_c rows of `dim`).
 *
 * Points come from a Halton sequence over the observation box: stock
 * coordinates span [stock_lo, stock_hi], the last coordinate spans the
 * exogenous range.
 */
struct RbfCenters {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<double> points;

    std::span<const double> center(std::size_t k) const {
        return std::span<const double>(points).subspan(k * dim, dim);
    }

    static RbfCenters halton(std::size_t count, std::size_t dim, const ObservationRange& range) {
        RbfCenters c{count, dim, std::vector<double>(count * dim)};
        for (std::size_t k = 0; k < count; ++k) {
            for (std::size_t a = 0; a < dim; ++a) {
                double u = radical_inverse(k + 1, nth_prime(a));
                bool exo = a + 1 == dim;
                double lo = exo ? range.exo_lo : range.stock_lo;
                double hi = exo ? range.exo_hi : range.stock_hi;
                c.points[k * dim + a] = lo + u * (hi - lo);
            }
        }
        return c;
    }
};

/// z_j = Σ_k ‖o − c_k‖² θ_j(k), one score per destination.
inline std::vector<double> rbf_scores(std::span<const double> obs, const RbfCenters& centers,
                                      std::span<const double> theta_i) {
    if (obs.size() != centers.dim) throw std::invalid_argument("rbf_scores: observation dimension mismatch");
    if (centers.count == 0 || theta_i.size() % centers.count != 0)
        throw std::invalid_argument("rbf_scores: parameter dimension mismatch");
    const std::size_t destinations = theta_i.size() / centers.count;
    std::vector<double> feature(centers.count);
    for (std::size_t k = 0; k < centers.count; ++k) {
        auto c = centers.center(k);
        double sq = 0.0;
        for (std::size_t a = 0; a < obs.size(); ++a) sq += (obs[a] - c[a]) * (obs[a] - c[a]);
        feature[k] = sq;
    }
    std::vector<double> z(destinations, 0.0);
    for (std::size_t j = 0; j < destinations; ++j)
        for (std::size_t k = 0; k < centers.count; ++k) z[j] += feature[k] * theta_i[j * centers.count + k];
    return z;
}

/// b_j = exp(−z_j) / Σ exp(−z_j'), evaluated after shifting by min z.
inline std::vector<double> softmax_allocation(std::span<const double> scores) {
    std::vector<double> b(scores.size());
    if (scores.empty()) return b;
    const double shift = *std::min_element(scores.begin(), scores.end());
    double total = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        b[j] = std::exp(-(scores[j] - shift));
        total += b[j];
    }
    for (double& x : b) x /= total;
    return b;
}

template <class P>
concept LocalPolicy = requires(const P& p, AgentId i, std::span<const double> obs,
                               std::span<const double> theta_i, std::vector<double>& action) {
    { p.act(i, obs, theta_i, action) };
    { p.layout() } -> std::convertible_to<const ParamLayout&>;
};

/**
 * @brief Softmax over destinations with RBF scores.
 *
 * With `retain_self` the agent's own index competes in the softmax and its
 * share is the stock kept; otherwise the softmax covers out-neighbours only
 * and the full stock is shipped.
 */
class RbfSoftmaxPolicy {
public:
    RbfSoftmaxPolicy(const CouplingGraphs& graphs, std::size_t centers, ObservationRange range,
                     bool retain_self = true)
        : layout_(graphs.state(), centers), range_(range), retain_self_(retain_self) {
        for (AgentId i = 0; i < graphs.agent_count(); ++i)
            centers_.push_back(RbfCenters::halton(centers, graphs.observed(i).size() + 1, range));
    }

    const ParamLayout& layout() const { return layout_; }
    const RbfCenters& centers(AgentId i) const { return centers_.at(i); }
    const ObservationRange& range() const { return range_; }
    bool retain_self() const { return retain_self_; }

    /// Shipment fractions to out(i), ascending.
    void act(AgentId i, std::span<const double> obs, std::span<const double> theta_i,
             std::vector<double>& action) const {
        if (theta_i.size() != layout_.dim(i)) throw std::invalid_argument("policy: θ_i dimension mismatch");
        const auto& dest = layout_.destinations(i);
        auto z = rbf_scores(obs, centers_[i], theta_i);
        action.clear();
        if (retain_self_) {
            auto b = softmax_allocation(z);
            for (std::size_t j = 0; j < dest.size(); ++j)
                if (dest[j] != i) action.push_back(b[j]);
        } else {
            std::vector<double> out_scores;
            for (std::size_t j = 0; j < dest.size(); ++j)
                if (dest[j] != i) out_scores.push_back(z[j]);
            action = softmax_allocation(out_scores);
        }
    }

    bool in_range(std::span<const double> obs) const {
        for (std::size_t a = 0; a + 1 < obs.size(); ++a)
            if (obs[a] < range_.stock_lo || obs[a] > range_.stock_hi) return false;
        return obs.back() >= range_.exo_lo && obs.back() <= range_.exo_hi;
    }

private:
    ParamLayout layout_;
    ObservationRange range_;
    bool retain_self_;
    std::vector<RbfCenters> centers_;
};

static_assert(LocalPolicy<RbfSoftmaxPolicy>);

/// u ~ N(0, I_d); per-agent slices are views through the layout.
struct PerturbationSample {
    std::vector<double> u;

    std::span<const double> slice(const ParamLayout& layout, AgentId i) const {
        return layout.slice(std::span<const double>(u), i);
    }
};

inline PerturbationSample sample_direction(std::size_t dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    PerturbationSample s;
    s.u.resize(dim);
    for (double& x : s.u) x = normal(rng);
    return s;
}

/// Returns (θ + δu, u); θ itself is untouched.
inline std::pair<std::vector<double>, PerturbationSample> perturb(std::span<const double> theta,
                                                                  double delta, Rng& rng) {
    if (delta < 0.0) throw std::invalid_argument("perturb: δ must be non-negative");
    auto sample = sample_direction(theta.size(), rng);
    std::vector<double> out(theta.begin(), theta.end());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += delta * sample.u[c];
    return {std::move(out), std::move(sample)};
}

}  // namespace netmarl
