#pragma once

#include "rwb/graph.hpp"
#include "rwb/local_structure.hpp"

#include <optional>
#include <span>
#include <vector>

namespace rwb {

// Number of triangles containing edge (u, v). Throws InputError if (u, v) is not an edge.
std::size_t triangle_count(const Graph& g, NodeId u, NodeId v);

// Diagonal-free 4-cycle profile of edge (u, v). Throws InputError if (u, v) is not an edge.
FourCycleProfile four_cycle_profile(const Graph& g, NodeId u, NodeId v);

// Fraction of edges whose endpoints share a label. Throws InputError without labels.
double edge_homophily(const Graph& g);

// Longest shortest path within the largest connected component (ties: the
// component containing the smallest node id).
std::size_t diameter(const Graph& g);

struct DatasetStats {
    std::size_t num_graphs = 1;
    double nodes = 0;
    // Directed convention: every undirected edge is counted twice.
    double edges = 0;
    double undirected_edges = 0;
    // Mean degree, i.e. directed edges per node.
    double average_degree = 0;
    double diameter = 0;
    std::size_t num_features = 0;
    std::size_t num_classes = 0;
    std::optional<double> edge_homophily;
};

DatasetStats dataset_stats(const Graph& g);

// Averages over the member graphs; num_classes counts the distinct graph labels.
DatasetStats dataset_stats(std::span<const Graph> graphs, std::span<const int> graph_labels);

}  // namespace rwb
