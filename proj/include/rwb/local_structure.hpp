#pragma once

// Neighborhood counting shared by the immutable Graph and the mutable
// adjacency used during rewiring.

#include "rwb/graph.hpp"

#include <algorithm>
#include <concepts>
#include <span>

namespace rwb {

template <typename Adj>
concept NeighborSource = requires(const Adj& a, NodeId v) {
    { a.neighbors(v) } -> std::convertible_to<std::span<const NodeId>>;
    { a.has_edge(v, v) } -> std::convertible_to<bool>;
    { a.degree(v) } -> std::convertible_to<std::size_t>;
};

// Counts of diagonal-free 4-cycles over edge (u, v).
//
// squares_uv: neighbors k of u, with k != v and k not adjacent to v, for which
// some w adjacent to both k and v exists with w != u and w not adjacent to u.
// gamma_max: the largest number of such w over all contributing k (on either
// side). Reported as 1 when there are no such cycles.
struct FourCycleProfile {
    std::size_t squares_uv = 0;
    std::size_t squares_vu = 0;
    std::size_t gamma_max = 1;

    bool empty() const { return squares_uv == 0 && squares_vu == 0; }
    friend bool operator==(const FourCycleProfile&, const FourCycleProfile&) = default;
};

template <NeighborSource Adj>
std::size_t common_neighbor_count(const Adj& adj, NodeId a, NodeId b) {
    const std::span<const NodeId> na = adj.neighbors(a);
    const std::span<const NodeId> nb = adj.neighbors(b);
    std::size_t count = 0;
    auto i = na.begin();
    auto j = nb.begin();
    while (i != na.end() && j != nb.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

namespace detail {

// For every k in N(u) outside B1(v): number of w in N(k) ∩ N(v) outside B1(u).
template <NeighborSource Adj>
void one_sided_squares(const Adj& adj, NodeId u, NodeId v, std::size_t& squares,
                       std::size_t& gamma) {
    const std::span<const NodeId> nv = adj.neighbors(v);
    for (NodeId k : adj.neighbors(u)) {
        if (k == v || adj.has_edge(k, v)) continue;
        const std::span<const NodeId> nk = adj.neighbors(k);
        std::size_t cycles = 0;
        auto i = nk.begin();
        auto j = nv.begin();
        while (i != nk.end() && j != nv.end()) {
            if (*i < *j) {
                ++i;
            } else if (*j < *i) {
                ++j;
            } else {
                const NodeId w = *i;
                if (w != u && !adj.has_edge(u, w)) ++cycles;
                ++i;
                ++j;
            }
        }
        if (cycles > 0) {
            ++squares;
            gamma = std::max(gamma, cycles);
        }
    }
}

}  // namespace detail

template <NeighborSource Adj>
FourCycleProfile four_cycles(const Adj& adj, NodeId u, NodeId v) {
    FourCycleProfile p;
    std::size_t gamma = 0;
    detail::one_sided_squares(adj, u, v, p.squares_uv, gamma);
    detail::one_sided_squares(adj, v, u, p.squares_vu, gamma);
    p.gamma_max = gamma == 0 ? 1 : gamma;
    return p;
}

}  // namespace rwb
