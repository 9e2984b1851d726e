#include "rwb/shift_operator.hpp"

#include "rwb/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace rwb {

std::string OperatorSpec::label() const {
    std::string s = kind == OperatorKind::adjacency ? "adjacency" : "laplacian";
    switch (normalization) {
        case Normalization::none: s += "-none"; break;
        case Normalization::sym: s += "-sym"; break;
        case Normalization::rw: s += "-rw"; break;
        case Normalization::mean: s += "-mean"; break;
    }
    if (self_loops) s += "+loops";
    return s;
}

OperatorSpec OperatorSpec::parse(std::string_view text) {
    OperatorSpec spec;
    std::string_view rest = text;
    if (rest.ends_with("+loops")) {
        spec.self_loops = true;
        rest.remove_suffix(6);
    }
    const auto dash = rest.find('-');
    const std::string_view kind = rest.substr(0, dash);
    const std::string_view norm = dash == std::string_view::npos ? "none" : rest.substr(dash + 1);
    if (kind == "adjacency") {
        spec.kind = OperatorKind::adjacency;
    } else if (kind == "laplacian") {
        spec.kind = OperatorKind::laplacian;
    } else {
        throw ConfigError(fmt::format("unknown operator kind in '{}'", text));
    }
    if (norm == "none") {
        spec.normalization = Normalization::none;
    } else if (norm == "sym") {
        spec.normalization = Normalization::sym;
    } else if (norm == "rw") {
        spec.normalization = Normalization::rw;
    } else if (norm == "mean") {
        spec.normalization = Normalization::mean;
    } else {
        throw ConfigError(fmt::format("unknown normalization in '{}'", text));
    }
    return spec;
}

std::vector<OperatorSpec> OperatorSpec::all() {
    std::vector<OperatorSpec> out;
    for (OperatorKind k : {OperatorKind::adjacency, OperatorKind::laplacian}) {
        for (Normalization n :
             {Normalization::none, Normalization::sym, Normalization::rw, Normalization::mean}) {
            for (bool loops : {false, true}) out.push_back({k, n, loops});
        }
    }
    return out;
}

ShiftOperator shift_operator(const Graph& g, OperatorSpec spec) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    if (n == 0) throw InputError("shift operator of an empty graph");

    std::vector<double> deg(static_cast<std::size_t>(n));
    for (Eigen::Index v = 0; v < n; ++v) {
        deg[v] = static_cast<double>(g.degree(static_cast<NodeId>(v))) + (spec.self_loops ? 1.0 : 0.0);
    }
    // Left and right diagonal scalings applied to the base matrix (A or L).
    std::vector<double> left(deg.size(), 1.0);
    std::vector<double> right(deg.size(), 1.0);
    for (std::size_t v = 0; v < deg.size(); ++v) {
        const double inv = deg[v] > 0 ? 1.0 / deg[v] : 0.0;
        const double inv_sqrt = deg[v] > 0 ? 1.0 / std::sqrt(deg[v]) : 0.0;
        switch (spec.normalization) {
            case Normalization::none: break;
            case Normalization::sym: left[v] = right[v] = inv_sqrt; break;
            case Normalization::rw: right[v] = inv; break;
            case Normalization::mean: left[v] = inv; break;
        }
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * g.num_edges() + static_cast<std::size_t>(n));
    const double off = spec.kind == OperatorKind::adjacency ? 1.0 : -1.0;
    for (const Edge& e : g.edges()) {
        trips.emplace_back(e.u, e.v, off * left[e.u] * right[e.v]);
        trips.emplace_back(e.v, e.u, off * left[e.v] * right[e.u]);
    }
    for (Eigen::Index v = 0; v < n; ++v) {
        // Diagonal of A (+I) or of L = D - A; the self-loop cancels in L.
        double diag = 0.0;
        if (spec.kind == OperatorKind::adjacency) {
            diag = spec.self_loops ? 1.0 : 0.0;
        } else {
            diag = static_cast<double>(g.degree(static_cast<NodeId>(v)));
        }
        const double value = diag * left[v] * right[v];
        if (value != 0.0) trips.emplace_back(v, v, value);
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return ShiftOperator{spec, std::move(m)};
}

Eigen::MatrixXd MessageMatrix::dense() const {
    if (is_dense_) return dense_;
    return Eigen::MatrixXd(sparse_);
}

Eigen::MatrixXd MessageMatrix::apply(const Eigen::MatrixXd& x) const {
    if (is_dense_) return dense_ * x;
    return sparse_ * x;
}

Eigen::Index MessageMatrix::nonzeros() const {
    if (!is_dense_) return sparse_.nonZeros();
    return static_cast<Eigen::Index>((dense_.array() != 0.0).count());
}

}  // namespace rwb
