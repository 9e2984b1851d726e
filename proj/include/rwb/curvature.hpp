#pragma once

#include "rwb/graph.hpp"
#include "rwb/local_structure.hpp"

#include <algorithm>
#include <iosfwd>
#include <map>
#include <vector>

namespace rwb {

// Balanced Forman curvature of one edge, with the three groups of terms kept
// separately: value == tree_term + triangle_term + square_term.
struct EdgeCurvature {
    NodeId u = 0;
    NodeId v = 0;
    double value = 0.0;
    double tree_term = 0.0;      // 2/d_u + 2/d_v - 2
    double triangle_term = 0.0;  // 2 t / max(d) + t / min(d)
    double square_term = 0.0;    // (sq_uv + sq_vu) / (gamma_max max(d)); 0 without 4-cycles
    std::size_t triangles = 0;
    FourCycleProfile squares;
};

template <NeighborSource Adj>
EdgeCurvature forman_curvature(const Adj& adj, NodeId u, NodeId v) {
    EdgeCurvature c;
    c.u = std::min(u, v);
    c.v = std::max(u, v);
    const double du = static_cast<double>(adj.degree(u));
    const double dv = static_cast<double>(adj.degree(v));
    const double dmax = std::max(du, dv);
    const double dmin = std::min(du, dv);
    c.triangles = common_neighbor_count(adj, u, v);
    c.squares = four_cycles(adj, u, v);
    c.tree_term = 2.0 / du + 2.0 / dv - 2.0;
    const auto t = static_cast<double>(c.triangles);
    c.triangle_term = 2.0 * t / dmax + t / dmin;
    if (!c.squares.empty()) {
        c.square_term = static_cast<double>(c.squares.squares_uv + c.squares.squares_vu) /
                        (static_cast<double>(c.squares.gamma_max) * dmax);
    }
    c.value = c.tree_term + c.triangle_term + c.square_term;
    return c;
}

// Throws InputError if (u, v) is not an edge.
EdgeCurvature balanced_forman(const Graph& g, NodeId u, NodeId v);

// One entry per edge, in the graph's edge order.
std::vector<EdgeCurvature> edge_curvatures(const Graph& g);

struct CurvatureHistogram {
    double bin_width = 0.25;
    std::vector<double> values;  // per edge, graph edge order
    // Bin index b covers [b * bin_width, (b + 1) * bin_width).
    std::map<long, std::size_t> bins;

    bool empty() const { return values.empty(); }
};

CurvatureHistogram curvature_distribution(const Graph& g, double bin_width = 0.25);

struct CurvaturePair {
    Edge edge;
    double before = 0.0;
    double after = 0.0;
    double delta() const { return after - before; }
};

// Per-edge comparison on the edges the two graphs share. An edge counts as
// worsened when its curvature decreased (below the diagonal of a
// before/after scatter) and improved when it increased.
struct CurvatureDelta {
    std::vector<CurvaturePair> pairs;
    std::size_t improved = 0;
    std::size_t worsened = 0;
    std::size_t unchanged = 0;

    double worsened_fraction() const {
        return pairs.empty() ? 0.0 : static_cast<double>(worsened) / static_cast<double>(pairs.size());
    }
};

// Throws InputError when the node counts differ.
CurvatureDelta curvature_delta(const Graph& before, const Graph& after);

// CSV: bin_lower,bin_upper,before,after (after column omitted when null).
void write_histogram_csv(std::ostream& out, const CurvatureHistogram& before,
                         const CurvatureHistogram* after = nullptr);

// CSV: u,v,before,after,delta
void write_delta_csv(std::ostream& out, const CurvatureDelta& delta);

}  // namespace rwb
