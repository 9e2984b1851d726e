#include "rwb/graph.hpp"

#include "rwb/error.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace rwb {

namespace {

std::vector<Edge> canonical_edges(std::vector<Edge> edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

}  // namespace

bool Graph::has_edge(NodeId u, NodeId v) const {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= num_nodes_ ||
        static_cast<std::size_t>(v) >= num_nodes_) {
        return false;
    }
    const std::span<const NodeId> nu = neighbors(u);
    return std::binary_search(nu.begin(), nu.end(), v);
}

int Graph::num_classes() const {
    if (!labels_ || labels_->empty()) return 0;
    return *std::max_element(labels_->begin(), labels_->end()) + 1;
}

std::vector<std::size_t> Graph::degrees() const {
    std::vector<std::size_t> d(num_nodes_);
    for (std::size_t v = 0; v < num_nodes_; ++v) d[v] = degree(static_cast<NodeId>(v));
    return d;
}

void Graph::index() {
    std::vector<std::size_t> deg(num_nodes_, 0);
    for (const Edge& e : edges_) {
        ++deg[e.u];
        ++deg[e.v];
    }
    offsets_.assign(num_nodes_ + 1, 0);
    for (std::size_t v = 0; v < num_nodes_; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
    adjacency_.assign(offsets_.back(), 0);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const Edge& e : edges_) {
        adjacency_[fill[e.u]++] = e.v;
        adjacency_[fill[e.v]++] = e.u;
    }
    for (std::size_t v = 0; v < num_nodes_; ++v) {
        std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
                  adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]));
    }
}

Graph Graph::relabeled(std::span<const NodeId> perm) const {
    if (perm.size() != num_nodes_) throw InputError("permutation size does not match node count");
    std::vector<char> seen(num_nodes_, 0);
    for (NodeId p : perm) {
        if (p < 0 || static_cast<std::size_t>(p) >= num_nodes_ || seen[p]) {
            throw InputError("relabeling is not a permutation");
        }
        seen[p] = 1;
    }
    Graph out;
    out.num_nodes_ = num_nodes_;
    out.name_ = name_;
    out.edges_.reserve(edges_.size());
    for (const Edge& e : edges_) out.edges_.push_back(make_edge(perm[e.u], perm[e.v]));
    out.edges_ = canonical_edges(std::move(out.edges_));
    out.features_.resize(features_.rows(), features_.cols());
    for (std::size_t v = 0; v < num_nodes_; ++v) out.features_.row(perm[v]) = features_.row(v);
    if (labels_) {
        std::vector<int> lab(num_nodes_);
        for (std::size_t v = 0; v < num_nodes_; ++v) lab[perm[v]] = (*labels_)[v];
        out.labels_ = std::move(lab);
    }
    out.index();
    return out;
}

Graph Graph::with_edges(std::span<const Edge> edges) const {
    Graph out;
    out.num_nodes_ = num_nodes_;
    out.features_ = features_;
    out.labels_ = labels_;
    out.name_ = name_;
    out.edges_.reserve(edges.size());
    for (const Edge& e : edges) {
        if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= num_nodes_ ||
            static_cast<std::size_t>(e.v) >= num_nodes_) {
            throw InputError(fmt::format("edge ({}, {}) out of range for {} nodes", e.u, e.v,
                                         num_nodes_));
        }
        if (e.u != e.v) out.edges_.push_back(make_edge(e.u, e.v));
    }
    out.edges_ = canonical_edges(std::move(out.edges_));
    out.index();
    return out;
}

Eigen::MatrixXd Graph::dense_adjacency() const {
    const auto n = static_cast<Eigen::Index>(num_nodes_);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const Edge& e : edges_) {
        a(e.u, e.v) = 1.0;
        a(e.v, e.u) = 1.0;
    }
    return a;
}

Graph build_graph(std::span<const std::pair<std::int64_t, std::int64_t>> edge_list,
                  Eigen::MatrixXd features, std::optional<std::vector<int>> labels,
                  std::string name) {
    const auto n = static_cast<std::int64_t>(features.rows());
    Graph g;
    g.num_nodes_ = static_cast<std::size_t>(n);
    g.edges_.reserve(edge_list.size());
    for (const auto& [a, b] : edge_list) {
        if (a < 0 || b < 0 || a >= n || b >= n) {
            throw InputError(fmt::format("edge ({}, {}) has an endpoint outside [0, {})", a, b, n));
        }
        if (a == b) continue;
        g.edges_.push_back(make_edge(static_cast<NodeId>(a), static_cast<NodeId>(b)));
    }
    g.edges_ = canonical_edges(std::move(g.edges_));
    if (labels) {
        if (labels->size() != g.num_nodes_) {
            throw InputError(fmt::format("{} labels for {} nodes", labels->size(), n));
        }
        for (int y : *labels) {
            if (y < 0) throw InputError(fmt::format("negative class label {}", y));
        }
    }
    g.features_ = std::move(features);
    g.labels_ = std::move(labels);
    g.name_ = std::move(name);
    g.index();
    return g;
}

Graph build_graph(std::size_t num_nodes,
                  std::span<const std::pair<std::int64_t, std::int64_t>> edge_list,
                  std::optional<std::vector<int>> labels, std::string name) {
    return build_graph(edge_list, Eigen::MatrixXd(static_cast<Eigen::Index>(num_nodes), 0),
                       std::move(labels), std::move(name));
}

std::vector<int> connected_components(const Graph& g) {
    const std::size_t n = g.num_nodes();
    std::vector<int> comp(n, -1);
    int next = 0;
    std::vector<NodeId> stack;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        stack.push_back(static_cast<NodeId>(s));
        while (!stack.empty()) {
            const NodeId x = stack.back();
            stack.pop_back();
            for (NodeId y : g.neighbors(x)) {
                if (comp[y] < 0) {
                    comp[y] = next;
                    stack.push_back(y);
                }
            }
        }
        ++next;
    }
    return comp;
}

}  // namespace rwb
