#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rwb {

using NodeId = std::int32_t;

enum class TaskKind { node, graph };

// Undirected edge stored with u < v.
struct Edge {
    NodeId u = 0;
    NodeId v = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

inline std::uint64_t edge_key(NodeId a, NodeId b) {
    const Edge e = make_edge(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.u)) << 32) |
           static_cast<std::uint32_t>(e.v);
}

// Immutable undirected simple graph with node features and optional node labels.
//
// Neighbor lists are kept in CSR form, sorted ascending, so membership tests are
// binary searches and set intersections are linear merges.
class Graph {
public:
    Graph() = default;

    std::size_t num_nodes() const { return num_nodes_; }
    std::size_t num_edges() const { return edges_.size(); }
    std::span<const Edge> edges() const { return edges_; }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
    }
    std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
    bool has_edge(NodeId u, NodeId v) const;

    const Eigen::MatrixXd& features() const { return features_; }
    const std::optional<std::vector<int>>& labels() const { return labels_; }
    const std::string& name() const { return name_; }

    // Number of classes implied by the labels (max label + 1), or 0 without labels.
    int num_classes() const;

    std::vector<std::size_t> degrees() const;

    // Graph with node v renamed to perm[v]. Features and labels move with their node.
    Graph relabeled(std::span<const NodeId> perm) const;

    // Same nodes, features, labels and name with a different edge set.
    Graph with_edges(std::span<const Edge> edges) const;

    // Dense 0/1 adjacency; for tests and small graphs.
    Eigen::MatrixXd dense_adjacency() const;

private:
    friend Graph build_graph(std::span<const std::pair<std::int64_t, std::int64_t>>,
                             Eigen::MatrixXd, std::optional<std::vector<int>>, std::string);

    void index();

    std::size_t num_nodes_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> adjacency_;
    Eigen::MatrixXd features_;
    std::optional<std::vector<int>> labels_;
    std::string name_;
};

// Builds a canonical graph. The node count is features.rows(). Duplicate pairs
// (in either orientation) are merged and self-loops are dropped. Throws
// InputError for out-of-range endpoints, negative labels, or a label count
// that does not match the node count.
Graph build_graph(std::span<const std::pair<std::int64_t, std::int64_t>> edge_list,
                  Eigen::MatrixXd features,
                  std::optional<std::vector<int>> labels = std::nullopt,
                  std::string name = {});

// Convenience overload for featureless graphs (features are num_nodes x 0).
Graph build_graph(std::size_t num_nodes,
                  std::span<const std::pair<std::int64_t, std::int64_t>> edge_list,
                  std::optional<std::vector<int>> labels = std::nullopt,
                  std::string name = {});

// Connected component id per node; ids are assigned in order of the smallest node.
std::vector<int> connected_components(const Graph& g);

}  // namespace rwb
