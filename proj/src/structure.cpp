#include "rwb/structure.hpp"

#include "rwb/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <queue>
#include <set>

namespace rwb {

namespace {

void require_edge(const Graph& g, NodeId u, NodeId v) {
    if (!g.has_edge(u, v)) throw InputError(fmt::format("({}, {}) is not an edge", u, v));
}

// Eccentricity of s within its component (BFS hop count).
std::size_t eccentricity(const Graph& g, NodeId s, std::vector<int>& dist) {
    std::fill(dist.begin(), dist.end(), -1);
    std::queue<NodeId> q;
    dist[s] = 0;
    q.push(s);
    int far = 0;
    while (!q.empty()) {
        const NodeId x = q.front();
        q.pop();
        far = std::max(far, dist[x]);
        for (NodeId y : g.neighbors(x)) {
            if (dist[y] < 0) {
                dist[y] = dist[x] + 1;
                q.push(y);
            }
        }
    }
    return static_cast<std::size_t>(far);
}

}  // namespace

std::size_t triangle_count(const Graph& g, NodeId u, NodeId v) {
    require_edge(g, u, v);
    return common_neighbor_count(g, u, v);
}

FourCycleProfile four_cycle_profile(const Graph& g, NodeId u, NodeId v) {
    require_edge(g, u, v);
    return four_cycles(g, u, v);
}

double edge_homophily(const Graph& g) {
    if (!g.labels()) throw InputError("edge homophily requires node labels");
    if (g.num_edges() == 0) return 0.0;
    const std::vector<int>& y = *g.labels();
    std::size_t same = 0;
    for (const Edge& e : g.edges()) same += y[e.u] == y[e.v] ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(g.num_edges());
}

std::size_t diameter(const Graph& g) {
    if (g.num_nodes() == 0) return 0;
    const std::vector<int> comp = connected_components(g);
    const int num_comp = *std::max_element(comp.begin(), comp.end()) + 1;
    std::vector<std::size_t> size(static_cast<std::size_t>(num_comp), 0);
    for (int c : comp) ++size[c];
    const auto largest = static_cast<int>(std::max_element(size.begin(), size.end()) - size.begin());

    std::vector<int> dist(g.num_nodes());
    std::size_t best = 0;
    for (std::size_t s = 0; s < g.num_nodes(); ++s) {
        if (comp[s] != largest) continue;
        best = std::max(best, eccentricity(g, static_cast<NodeId>(s), dist));
    }
    return best;
}

DatasetStats dataset_stats(const Graph& g) {
    DatasetStats s;
    s.num_graphs = 1;
    s.nodes = static_cast<double>(g.num_nodes());
    s.undirected_edges = static_cast<double>(g.num_edges());
    s.edges = 2.0 * s.undirected_edges;
    s.average_degree = g.num_nodes() > 0 ? s.edges / s.nodes : 0.0;
    s.diameter = static_cast<double>(diameter(g));
    s.num_features = static_cast<std::size_t>(g.features().cols());
    s.num_classes = static_cast<std::size_t>(g.num_classes());
    if (g.labels()) s.edge_homophily = edge_homophily(g);
    return s;
}

DatasetStats dataset_stats(std::span<const Graph> graphs, std::span<const int> graph_labels) {
    DatasetStats s;
    s.num_graphs = graphs.size();
    if (graphs.empty()) return s;
    double degree_sum = 0.0;
    for (const Graph& g : graphs) {
        const DatasetStats one = dataset_stats(g);
        s.nodes += one.nodes;
        s.edges += one.edges;
        s.undirected_edges += one.undirected_edges;
        degree_sum += one.average_degree;
        s.diameter += one.diameter;
    }
    const double count = static_cast<double>(graphs.size());
    s.nodes /= count;
    s.edges /= count;
    s.undirected_edges /= count;
    s.average_degree = degree_sum / count;
    s.diameter /= count;
    s.num_features = static_cast<std::size_t>(graphs.front().features().cols());
    s.num_classes = std::set<int>(graph_labels.begin(), graph_labels.end()).size();
    return s;
}

}  // namespace rwb
