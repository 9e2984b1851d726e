#include "rwb/curvature.hpp"

#include "rwb/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>
#include <set>

namespace rwb {

EdgeCurvature balanced_forman(const Graph& g, NodeId u, NodeId v) {
    if (!g.has_edge(u, v)) throw InputError(fmt::format("({}, {}) is not an edge", u, v));
    return forman_curvature(g, u, v);
}

std::vector<EdgeCurvature> edge_curvatures(const Graph& g) {
    std::vector<EdgeCurvature> out;
    out.reserve(g.num_edges());
    for (const Edge& e : g.edges()) out.push_back(forman_curvature(g, e.u, e.v));
    return out;
}

CurvatureHistogram curvature_distribution(const Graph& g, double bin_width) {
    if (!(bin_width > 0.0)) throw ConfigError("histogram bin width must be positive");
    CurvatureHistogram h;
    h.bin_width = bin_width;
    h.values.reserve(g.num_edges());
    for (const EdgeCurvature& c : edge_curvatures(g)) {
        h.values.push_back(c.value);
        // Small offset keeps exact multiples of the width in their own bin
        // despite rounding in the division.
        ++h.bins[static_cast<long>(std::floor(c.value / bin_width + 1e-9))];
    }
    return h;
}

CurvatureDelta curvature_delta(const Graph& before, const Graph& after) {
    if (before.num_nodes() != after.num_nodes()) {
        throw InputError(fmt::format("node sets differ: {} vs {} nodes", before.num_nodes(), after.num_nodes()));
    }
    CurvatureDelta d;
    for (const Edge& e : before.edges()) {
        if (!after.has_edge(e.u, e.v)) continue;
        CurvaturePair p{e, forman_curvature(before, e.u, e.v).value, forman_curvature(after, e.u, e.v).value};
        if (p.delta() > 0.0) {
            ++d.improved;
        } else if (p.delta() < 0.0) {
            ++d.worsened;
        } else {
            ++d.unchanged;
        }
        d.pairs.push_back(p);
    }
    return d;
}

void write_histogram_csv(std::ostream& out, const CurvatureHistogram& before,
                         const CurvatureHistogram* after) {
    std::set<long> keys;
    for (const auto& [b, c] : before.bins) keys.insert(b);
    if (after) {
        for (const auto& [b, c] : after->bins) keys.insert(b);
    }
    out << (after ? "bin_lower,bin_upper,before,after\n" : "bin_lower,bin_upper,count\n");
    const auto count = [](const CurvatureHistogram& h, long b) {
        const auto it = h.bins.find(b);
        return it == h.bins.end() ? std::size_t{0} : it->second;
    };
    for (long b : keys) {
        out << fmt::format("{:.6f},{:.6f},{}", static_cast<double>(b) * before.bin_width,
                           static_cast<double>(b + 1) * before.bin_width, count(before, b));
        if (after) out << ',' << count(*after, b);
        out << '\n';
    }
}

void write_delta_csv(std::ostream& out, const CurvatureDelta& delta) {
    out << "u,v,before,after,delta\n";
    for (const CurvaturePair& p : delta.pairs) {
        out << fmt::format("{},{},{:.9f},{:.9f},{:.9f}\n", p.edge.u, p.edge.v, p.before, p.after, p.delta());
    }
}

}  // namespace rwb
