#pragma once

#include "rwb/graph.hpp"
#include "rwb/shift_operator.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rwb {

enum class RewireMethod { baseline, heat, pagerank, sdrf, grlef, egp, diffwire };

std::string_view to_string(RewireMethod m);
RewireMethod parse_rewire_method(std::string_view text);
bool is_diffusion(RewireMethod m);

// How input nodes are matched to Cayley-graph vertices in EGP.
enum class EgpAlignment { input_order, shuffled };

struct RewireConfig {
    RewireMethod method = RewireMethod::baseline;
    double t = 1.0;       // heat diffusion time
    double alpha = 0.15;  // PageRank teleport probability
    // SDRF/GRLEF iterations as a fraction of |E|; `iterations` overrides it
    // with an absolute count.
    double iteration_fraction = 0.2;
    std::optional<std::size_t> iterations;
    double temperature = 0.5;  // SDRF softmax temperature
    std::uint64_t seed = 0;
    bool removal_enabled = false;
    double removal_threshold = 0.5;  // SDRF removes the most curved edge above this value
    bool full_recompute = false;     // SDRF: recompute every curvature after each edit
    std::size_t grlef_retries = 10;
    OperatorSpec diffusion_operator{OperatorKind::adjacency, Normalization::rw, false};
    double sparsify_threshold = 0.0;  // drop |kernel entries| below this; 0 keeps the dense kernel
    EgpAlignment egp_alignment = EgpAlignment::input_order;
    // Enforce the evaluation grid ranges t in [0.1, 5], alpha in [0.01, 0.99],
    // iteration fraction in (0, 0.2]. Disable to probe limit behavior.
    bool check_grid_ranges = true;

    // Throws ConfigError.
    void validate() const;
    // Short stable description, e.g. "heat(t=0.5,T=adjacency-rw)".
    std::string describe() const;
};

enum class EditOp { add, remove, skip, retry };

struct EditRecord {
    std::size_t iteration = 0;
    EditOp op = EditOp::add;
    NodeId u = 0;
    NodeId v = 0;

    friend bool operator==(const EditRecord&, const EditRecord&) = default;
};

// One record per line: iter<TAB>op<TAB>u<TAB>v
void write_edit_log(std::ostream& out, std::span<const EditRecord> edits);
std::vector<EditRecord> read_edit_log(std::istream& in);

struct RewiredGraph {
    RewireConfig config;
    // Edge set after rewiring; the unchanged input for kernel methods.
    Graph graph;
    // Replacement message-passing matrix for heat, pagerank, egp and diffwire.
    std::optional<MessageMatrix> kernel;
    std::vector<EditRecord> edits;
    bool pseudoinverse_fallback = false;

    std::size_t count(EditOp op) const;
};

// Wall-clock limit checked between rewiring iterations.
struct Deadline {
    std::optional<std::chrono::steady_clock::time_point> at;

    static Deadline after(double seconds);
    bool expired() const { return at && std::chrono::steady_clock::now() > *at; }
    // Throws BudgetExceeded.
    void check() const;
};

// Dispatches on config.method. Diffusion methods are node-level only and
// raise ConfigError for graph-level tasks.
RewiredGraph rewire(const Graph& g, const RewireConfig& config, TaskKind task = TaskKind::node,
                    const Deadline& deadline = {});

RewiredGraph rewire_diffusion(const Graph& g, const RewireConfig& config);
RewiredGraph rewire_sdrf(const Graph& g, const RewireConfig& config, const Deadline& deadline = {});
RewiredGraph rewire_grlef(const Graph& g, const RewireConfig& config, const Deadline& deadline = {});
RewiredGraph rewire_egp(const Graph& g, const RewireConfig& config = {});
RewiredGraph rewire_diffwire(const Graph& g);

// |SL(2, Z_n)| = n^3 prod_{p | n} (1 - 1/p^2).
std::size_t sl2_order(int n);

// Smallest n >= 2 with |SL(2, Z_n)| >= nodes.
int cayley_modulus_for(std::size_t nodes);

// Cayley graph of SL(2, Z_n) under {[[1,±1],[0,1]], [[1,0],[±1,1]]}. Vertices
// are numbered in BFS order from the identity (right multiplication, generators
// in the order listed). For n = 2 the ± generators coincide and the graph is
// 2-regular.
Graph cayley_graph(int n);

}  // namespace rwb
