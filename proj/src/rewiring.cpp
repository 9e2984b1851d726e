#include "rwb/rewiring.hpp"

#include "rwb/curvature.hpp"
#include "rwb/error.hpp"
#include "rwb/rng.hpp"
#include "rwb/spectral.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace rwb {

namespace {

// Mutable neighbor lists for the iterative methods.
class DynamicAdjacency {
public:
    explicit DynamicAdjacency(const Graph& g) : nbrs_(g.num_nodes()) {
        for (std::size_t v = 0; v < g.num_nodes(); ++v) {
            const auto n = g.neighbors(static_cast<NodeId>(v));
            nbrs_[v].assign(n.begin(), n.end());
        }
    }

    std::span<const NodeId> neighbors(NodeId v) const { return nbrs_[v]; }
    std::size_t degree(NodeId v) const { return nbrs_[v].size(); }
    bool has_edge(NodeId a, NodeId b) const {
        const auto& na = nbrs_[a].size() <= nbrs_[b].size() ? nbrs_[a] : nbrs_[b];
        const NodeId target = nbrs_[a].size() <= nbrs_[b].size() ? b : a;
        return std::binary_search(na.begin(), na.end(), target);
    }

    void add(NodeId a, NodeId b) {
        insert(nbrs_[a], b);
        insert(nbrs_[b], a);
    }
    void remove(NodeId a, NodeId b) {
        erase(nbrs_[a], b);
        erase(nbrs_[b], a);
    }

private:
    static void insert(std::vector<NodeId>& list, NodeId x) {
        list.insert(std::lower_bound(list.begin(), list.end(), x), x);
    }
    static void erase(std::vector<NodeId>& list, NodeId x) {
        const auto it = std::lower_bound(list.begin(), list.end(), x);
        if (it == list.end() || *it != x) throw InvariantError("removing a missing edge");
        list.erase(it);
    }

    std::vector<std::vector<NodeId>> nbrs_;
};

// Edge list with stable positions and a key index.
class EdgeTable {
public:
    explicit EdgeTable(std::span<const Edge> edges) : edges_(edges.begin(), edges.end()) {
        for (std::size_t i = 0; i < edges_.size(); ++i) index_[edge_key(edges_[i].u, edges_[i].v)] = i;
    }

    std::size_t size() const { return edges_.size(); }
    const Edge& operator[](std::size_t i) const { return edges_[i]; }
    std::span<const Edge> all() const { return edges_; }
    std::size_t position(NodeId a, NodeId b) const { return index_.at(edge_key(a, b)); }

    std::size_t append(Edge e) {
        index_[edge_key(e.u, e.v)] = edges_.size();
        edges_.push_back(e);
        return edges_.size() - 1;
    }
    void replace(std::size_t i, Edge e) {
        index_.erase(edge_key(edges_[i].u, edges_[i].v));
        edges_[i] = e;
        index_[edge_key(e.u, e.v)] = i;
    }
    // Swap-with-last removal; returns the old position of the moved edge.
    std::size_t remove(std::size_t i) {
        const std::size_t last = edges_.size() - 1;
        index_.erase(edge_key(edges_[i].u, edges_[i].v));
        if (i != last) {
            edges_[i] = edges_[last];
            index_[edge_key(edges_[i].u, edges_[i].v)] = i;
        }
        edges_.pop_back();
        return last;
    }

private:
    std::vector<Edge> edges_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

std::size_t iteration_budget(const RewireConfig& c, std::size_t num_edges) {
    if (c.iterations) return *c.iterations;
    return static_cast<std::size_t>(std::llround(c.iteration_fraction * static_cast<double>(num_edges)));
}

// Nodes within one hop of a or b (including a and b).
std::vector<NodeId> two_ball(const DynamicAdjacency& adj, NodeId a, NodeId b) {
    std::vector<NodeId> nodes{a, b};
    for (NodeId x : adj.neighbors(a)) nodes.push_back(x);
    for (NodeId x : adj.neighbors(b)) nodes.push_back(x);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

// Closed neighborhood N(v) ∪ {v} in ascending order.
std::vector<NodeId> closed_neighborhood(const DynamicAdjacency& adj, NodeId v) {
    std::vector<NodeId> out(adj.neighbors(v).begin(), adj.neighbors(v).end());
    out.insert(std::lower_bound(out.begin(), out.end(), v), v);
    return out;
}

constexpr double kGainTolerance = 1e-12;

}  // namespace

std::string_view to_string(RewireMethod m) {
    switch (m) {
        case RewireMethod::baseline: return "baseline";
        case RewireMethod::heat: return "heat";
        case RewireMethod::pagerank: return "pagerank";
        case RewireMethod::sdrf: return "sdrf";
        case RewireMethod::grlef: return "grlef";
        case RewireMethod::egp: return "egp";
        case RewireMethod::diffwire: return "diffwire";
    }
    return "?";
}

RewireMethod parse_rewire_method(std::string_view text) {
    for (RewireMethod m : {RewireMethod::baseline, RewireMethod::heat, RewireMethod::pagerank,
                           RewireMethod::sdrf, RewireMethod::grlef, RewireMethod::egp,
                           RewireMethod::diffwire}) {
        if (text == to_string(m)) return m;
    }
    if (text == "none") return RewireMethod::baseline;
    throw ConfigError(fmt::format("unknown rewiring method '{}'", text));
}

bool is_diffusion(RewireMethod m) { return m == RewireMethod::heat || m == RewireMethod::pagerank; }

void RewireConfig::validate() const {
    if (!(t > 0.0)) throw ConfigError(fmt::format("heat time must be positive, got {}", t));
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
    if (!(temperature > 0.0)) throw ConfigError("SDRF temperature must be positive");
    if (!(iteration_fraction > 0.0)) throw ConfigError("iteration fraction must be positive");
    if (!check_grid_ranges) return;
    if (method == RewireMethod::heat && (t < 0.1 || t > 5.0)) {
        throw ConfigError(fmt::format("heat time {} outside [0.1, 5]", t));
    }
    if (method == RewireMethod::pagerank && (alpha < 0.01 || alpha > 0.99)) {
        throw ConfigError(fmt::format("alpha {} outside [0.01, 0.99]", alpha));
    }
    if ((method == RewireMethod::sdrf || method == RewireMethod::grlef) && !iterations &&
        iteration_fraction > 0.2 + 1e-12) {
        throw ConfigError(fmt::format("iteration fraction {} exceeds 0.2", iteration_fraction));
    }
}

std::string RewireConfig::describe() const {
    switch (method) {
        case RewireMethod::heat: return fmt::format("heat(t={:g},T={})", t, diffusion_operator.label());
        case RewireMethod::pagerank:
            return fmt::format("pagerank(alpha={:g},T={})", alpha, diffusion_operator.label());
        case RewireMethod::sdrf:
            return iterations ? fmt::format("sdrf(iters={},tau={:g})", *iterations, temperature)
                              : fmt::format("sdrf(frac={:g},tau={:g})", iteration_fraction, temperature);
        case RewireMethod::grlef:
            return iterations ? fmt::format("grlef(iters={})", *iterations)
                              : fmt::format("grlef(frac={:g})", iteration_fraction);
        default: return std::string(to_string(method));
    }
}

void write_edit_log(std::ostream& out, std::span<const EditRecord> edits) {
    static constexpr std::array<const char*, 4> names{"add", "remove", "skip", "retry"};
    for (const EditRecord& e : edits) {
        out << e.iteration << '\t' << names[static_cast<std::size_t>(e.op)] << '\t' << e.u << '\t' << e.v << '\n';
    }
}

std::vector<EditRecord> read_edit_log(std::istream& in) {
    std::vector<EditRecord> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        std::istringstream fields(line);
        EditRecord r;
        std::string op;
        if (!(fields >> r.iteration >> op >> r.u >> r.v)) {
            throw InputError(fmt::format("edit log line {}: expected iter, op, u, v", number));
        }
        if (op == "add") {
            r.op = EditOp::add;
        } else if (op == "remove") {
            r.op = EditOp::remove;
        } else if (op == "skip") {
            r.op = EditOp::skip;
        } else if (op == "retry") {
            r.op = EditOp::retry;
        } else {
            throw InputError(fmt::format("edit log line {}: unknown op '{}'", number, op));
        }
        out.push_back(r);
    }
    return out;
}

std::size_t RewiredGraph::count(EditOp op) const {
    return static_cast<std::size_t>(std::count_if(edits.begin(), edits.end(),
                                                   [op](const EditRecord& e) { return e.op == op; }));
}

Deadline Deadline::after(double seconds) {
    Deadline d;
    d.at = std::chrono::steady_clock::now() +
           std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds));
    return d;
}

void Deadline::check() const {
    if (expired()) throw BudgetExceeded("wall-clock budget exceeded");
}

RewiredGraph rewire(const Graph& g, const RewireConfig& config, TaskKind task, const Deadline& deadline) {
    config.validate();
    if (is_diffusion(config.method) && task == TaskKind::graph) {
        throw ConfigError(fmt::format("{} diffusion applies to node-level tasks only", to_string(config.method)));
    }
    switch (config.method) {
        case RewireMethod::baseline: {
            RewiredGraph out{config, g, std::nullopt, {}, false};
            return out;
        }
        case RewireMethod::heat:
        case RewireMethod::pagerank: return rewire_diffusion(g, config);
        case RewireMethod::sdrf: return rewire_sdrf(g, config, deadline);
        case RewireMethod::grlef: return rewire_grlef(g, config, deadline);
        case RewireMethod::egp: return rewire_egp(g, config);
        case RewireMethod::diffwire: {
            RewiredGraph out = rewire_diffwire(g);
            out.config = config;
            return out;
        }
    }
    throw InvariantError("unhandled rewiring method");
}

RewiredGraph rewire_diffusion(const Graph& g, const RewireConfig& config) {
    config.validate();
    if (!is_diffusion(config.method)) throw ConfigError("rewire_diffusion needs method heat or pagerank");
    RewiredGraph out{config, g, std::nullopt, {}, false};
    const MessageMatrix transition(shift_operator(g, config.diffusion_operator).matrix);
    Eigen::MatrixXd kernel;
    if (config.method == RewireMethod::heat) {
        kernel = heat_kernel(transition, config.t);
    } else {
        PageRankKernel pr = pagerank_kernel(transition, config.alpha);
        out.pseudoinverse_fallback = pr.pseudoinverse_fallback;
        kernel = std::move(pr.matrix);
    }
    if (config.sparsify_threshold > 0.0) {
        const double eps = config.sparsify_threshold;
        out.kernel = MessageMatrix(SparseMatrix(kernel.sparseView(1.0, eps)));
    } else {
        out.kernel = MessageMatrix(std::move(kernel));
    }
    return out;
}

RewiredGraph rewire_sdrf(const Graph& g, const RewireConfig& config, const Deadline& deadline) {
    config.validate();
    RewiredGraph out{config, g, std::nullopt, {}, false};
    DynamicAdjacency adj(g);
    EdgeTable edges(g.edges());
    std::vector<double> curv(edges.size());
    const auto recompute_all = [&] {
        curv.resize(edges.size());
        for (std::size_t i = 0; i < edges.size(); ++i) curv[i] = forman_curvature(adj, edges[i].u, edges[i].v).value;
    };
    // Curvature of an edge depends only on edges with an endpoint in B1(x) ∪ B1(y),
    // so an edit at (a, b) can only change edges touching B1(a) ∪ B1(b).
    const auto recompute_near = [&](const std::vector<NodeId>& nodes) {
        curv.resize(edges.size());
        for (NodeId x : nodes) {
            for (NodeId y : adj.neighbors(x)) {
                const std::size_t i = edges.position(x, y);
                curv[i] = forman_curvature(adj, edges[i].u, edges[i].v).value;
            }
        }
    };
    recompute_all();

    Rng rng(config.seed);
    const std::size_t iters = iteration_budget(config, g.num_edges());
    std::vector<double> weights;
    for (std::size_t it = 0; it < iters; ++it) {
        deadline.check();
        if (edges.size() == 0) break;

        // Softmax over -Ric / tau, shifted by the minimum curvature for stability.
        const double cmin = *std::min_element(curv.begin(), curv.end());
        weights.resize(edges.size());
        for (std::size_t i = 0; i < edges.size(); ++i) {
            weights[i] = std::exp(-(curv[i] - cmin) / config.temperature);
        }
        const std::size_t pick = rng.weighted_index(weights);
        const Edge target = edges[pick];
        const double base = curv[pick];

        bool found = false;
        double best_gain = 0.0;
        Edge best{};
        const std::vector<NodeId> side_u = closed_neighborhood(adj, target.u);
        const std::vector<NodeId> side_v = closed_neighborhood(adj, target.v);
        for (NodeId a : side_u) {
            for (NodeId b : side_v) {
                if (a == b || adj.has_edge(a, b)) continue;
                adj.add(a, b);
                const double gain = forman_curvature(adj, target.u, target.v).value - base;
                adj.remove(a, b);
                if (gain <= kGainTolerance) continue;
                const Edge cand = make_edge(a, b);
                if (!found || gain > best_gain + kGainTolerance ||
                    (std::abs(gain - best_gain) <= kGainTolerance && cand < best)) {
                    found = true;
                    best_gain = std::max(gain, best_gain);
                    best = cand;
                }
            }
        }
        if (!found) {
            out.edits.push_back({it, EditOp::skip, target.u, target.v});
            continue;
        }
        adj.add(best.u, best.v);
        edges.append(best);
        out.edits.push_back({it, EditOp::add, best.u, best.v});
        if (config.full_recompute) {
            recompute_all();
        } else {
            recompute_near(two_ball(adj, best.u, best.v));
        }

        if (config.removal_enabled && edges.size() > 0) {
            const auto top = static_cast<std::size_t>(std::max_element(curv.begin(), curv.end()) - curv.begin());
            if (curv[top] > config.removal_threshold) {
                const Edge gone = edges[top];
                const std::vector<NodeId> region = two_ball(adj, gone.u, gone.v);
                adj.remove(gone.u, gone.v);
                const std::size_t moved_from = edges.remove(top);
                if (moved_from != top) curv[top] = curv[moved_from];
                curv.pop_back();
                out.edits.push_back({it, EditOp::remove, gone.u, gone.v});
                if (config.full_recompute) {
                    recompute_all();
                } else {
                    recompute_near(region);
                }
            }
        }
    }
    out.graph = g.with_edges(edges.all());
    return out;
}

RewiredGraph rewire_grlef(const Graph& g, const RewireConfig& config, const Deadline& deadline) {
    config.validate();
    RewiredGraph out{config, g, std::nullopt, {}, false};
    DynamicAdjacency adj(g);
    EdgeTable edges(g.edges());
    std::vector<double> weights(edges.size());
    const auto refresh = [&](std::size_t i) {
        weights[i] = 1.0 / (static_cast<double>(common_neighbor_count(adj, edges[i].u, edges[i].v)) + 1.0);
    };
    for (std::size_t i = 0; i < edges.size(); ++i) refresh(i);

    // Net change in the total triangle count from flipping (u,u'),(v,v') into
    // (u,v'),(v,u'), evaluated by applying the four edits in sequence.
    const auto flip_delta = [&](NodeId u, NodeId up, NodeId v, NodeId vp) {
        long delta = 0;
        delta -= static_cast<long>(common_neighbor_count(adj, u, up));
        adj.remove(u, up);
        delta -= static_cast<long>(common_neighbor_count(adj, v, vp));
        adj.remove(v, vp);
        delta += static_cast<long>(common_neighbor_count(adj, u, vp));
        adj.add(u, vp);
        delta += static_cast<long>(common_neighbor_count(adj, v, up));
        adj.remove(u, vp);
        adj.add(v, vp);
        adj.add(u, up);
        return delta;
    };

    Rng rng(config.seed);
    const std::size_t iters = iteration_budget(config, g.num_edges());
    for (std::size_t it = 0; it < iters; ++it) {
        deadline.check();
        if (edges.size() == 0) break;
        bool flipped = false;
        for (std::size_t attempt = 0; attempt < config.grlef_retries && !flipped; ++attempt) {
            const std::size_t pick = rng.weighted_index(weights);
            const NodeId u = edges[pick].u;
            const NodeId v = edges[pick].v;
            bool found = false;
            long best_delta = 0;
            NodeId best_up = 0;
            NodeId best_vp = 0;
            const std::vector<NodeId> nu(adj.neighbors(u).begin(), adj.neighbors(u).end());
            const std::vector<NodeId> nv(adj.neighbors(v).begin(), adj.neighbors(v).end());
            for (NodeId up : nu) {
                if (up == v) continue;
                for (NodeId vp : nv) {
                    if (vp == u || vp == up) continue;
                    if (adj.has_edge(u, vp) || adj.has_edge(v, up)) continue;
                    const long delta = flip_delta(u, up, v, vp);
                    // Candidates arrive in ascending (u', v') order, so strict
                    // improvement keeps the lowest pair on ties.
                    if (!found || delta < best_delta) {
                        found = true;
                        best_delta = delta;
                        best_up = up;
                        best_vp = vp;
                    }
                }
            }
            if (!found) {
                out.edits.push_back({it, EditOp::retry, u, v});
                continue;
            }
            adj.remove(u, best_up);
            adj.remove(v, best_vp);
            adj.add(u, best_vp);
            adj.add(v, best_up);
            edges.replace(edges.position(u, best_up), make_edge(u, best_vp));
            edges.replace(edges.position(v, best_vp), make_edge(v, best_up));
            out.edits.push_back({it, EditOp::remove, std::min(u, best_up), std::max(u, best_up)});
            out.edits.push_back({it, EditOp::remove, std::min(v, best_vp), std::max(v, best_vp)});
            out.edits.push_back({it, EditOp::add, std::min(u, best_vp), std::max(u, best_vp)});
            out.edits.push_back({it, EditOp::add, std::min(v, best_up), std::max(v, best_up)});
            // Triangle counts change only on edges incident to the four endpoints.
            for (NodeId x : {u, v, best_up, best_vp}) {
                for (NodeId y : adj.neighbors(x)) refresh(edges.position(x, y));
            }
            flipped = true;
        }
        if (!flipped) out.edits.push_back({it, EditOp::skip, 0, 0});
    }
    out.graph = g.with_edges(edges.all());
    return out;
}

std::size_t sl2_order(int n) {
    if (n < 2) throw ConfigError(fmt::format("SL(2, Z_n) needs n >= 2, got {}", n));
    double order = std::pow(static_cast<double>(n), 3);
    int m = n;
    for (int p = 2; p * p <= m; ++p) {
        if (m % p != 0) continue;
        order *= 1.0 - 1.0 / (static_cast<double>(p) * p);
        while (m % p == 0) m /= p;
    }
    if (m > 1) order *= 1.0 - 1.0 / (static_cast<double>(m) * m);
    return static_cast<std::size_t>(std::llround(order));
}

int cayley_modulus_for(std::size_t nodes) {
    int n = 2;
    while (sl2_order(n) < nodes) ++n;
    return n;
}

Graph cayley_graph(int n) {
    if (n < 2) throw ConfigError(fmt::format("Cayley graph needs n >= 2, got {}", n));
    using Mat = std::array<int, 4>;  // row-major [[a, b], [c, d]]
    const auto mul = [n](const Mat& x, const Mat& y) {
        return Mat{(x[0] * y[0] + x[1] * y[2]) % n, (x[0] * y[1] + x[1] * y[3]) % n,
                   (x[2] * y[0] + x[3] * y[2]) % n, (x[2] * y[1] + x[3] * y[3]) % n};
    };
    const auto key = [n](const Mat& x) {
        return ((static_cast<std::uint64_t>(x[0]) * n + x[1]) * n + x[2]) * n + x[3];
    };
    const std::array<Mat, 4> gens{Mat{1, 1, 0, 1}, Mat{1, n - 1, 0, 1}, Mat{1, 0, 1, 1}, Mat{1, 0, n - 1, 1}};

    std::unordered_map<std::uint64_t, NodeId> id;
    std::vector<Mat> order;
    std::deque<Mat> queue;
    const Mat identity{1, 0, 0, 1};
    id[key(identity)] = 0;
    order.push_back(identity);
    queue.push_back(identity);
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    while (!queue.empty()) {
        const Mat x = queue.front();
        queue.pop_front();
        const NodeId xi = id.at(key(x));
        for (const Mat& s : gens) {
            const Mat y = mul(x, s);
            auto [it, inserted] = id.try_emplace(key(y), static_cast<NodeId>(order.size()));
            if (inserted) {
                order.push_back(y);
                queue.push_back(y);
            }
            edges.emplace_back(xi, it->second);
        }
    }
    if (order.size() != sl2_order(n)) {
        throw InvariantError(fmt::format("enumerated {} elements of SL(2, Z_{}), expected {}", order.size(), n,
                                         sl2_order(n)));
    }
    return build_graph(order.size(), edges, std::nullopt, fmt::format("cayley-sl2-z{}", n));
}

RewiredGraph rewire_egp(const Graph& g, const RewireConfig& config) {
    RewiredGraph out{config, g, std::nullopt, {}, false};
    out.config.method = RewireMethod::egp;
    const std::size_t n = g.num_nodes();
    const auto size = static_cast<Eigen::Index>(n);
    if (n == 0) {
        out.kernel = MessageMatrix(SparseMatrix(0, 0));
        return out;
    }
    const Graph cay = cayley_graph(cayley_modulus_for(n));

    // Input node i sits on Cayley vertex slot[i].
    std::vector<NodeId> slot(n);
    for (std::size_t i = 0; i < n; ++i) slot[i] = static_cast<NodeId>(i);
    if (config.egp_alignment == EgpAlignment::shuffled) {
        Rng rng(config.seed);
        rng.shuffle(slot);
    }
    std::vector<NodeId> node_at(n);
    for (std::size_t i = 0; i < n; ++i) node_at[slot[i]] = static_cast<NodeId>(i);

    std::vector<Eigen::Triplet<double>> trips;
    for (const Edge& e : cay.edges()) {
        // Truncation: keep Cayley vertices among the first |V| in BFS order.
        if (static_cast<std::size_t>(e.v) >= n) continue;
        trips.emplace_back(node_at[e.u], node_at[e.v], 1.0);
        trips.emplace_back(node_at[e.v], node_at[e.u], 1.0);
    }
    SparseMatrix a_cay(size, size);
    a_cay.setFromTriplets(trips.begin(), trips.end());
    const SparseMatrix a = shift_operator(g, OperatorSpec{}).matrix;
    SparseMatrix product = (a_cay * a).pruned();
    product.makeCompressed();
    out.kernel = MessageMatrix(std::move(product));
    return out;
}

RewiredGraph rewire_diffwire(const Graph& g) {
    RewiredGraph out{RewireConfig{}, g, std::nullopt, {}, false};
    out.config.method = RewireMethod::diffwire;
    const ResistanceMatrix res = effective_resistance(g);
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * g.num_edges());
    for (const Edge& e : g.edges()) {
        const double r = res(e.u, e.v);
        trips.emplace_back(e.u, e.v, r);
        trips.emplace_back(e.v, e.u, r);
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    out.kernel = MessageMatrix(std::move(m));
    return out;
}

}  // namespace rwb
