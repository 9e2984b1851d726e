#pragma once

#include "rwb/graph.hpp"

#include <Eigen/Sparse>

#include <string>
#include <string_view>
#include <vector>

namespace rwb {

enum class OperatorKind { adjacency, laplacian };
enum class Normalization { none, sym, rw, mean };

// Which message-passing matrix to build from a graph.
//
//   adjacency/none  A          laplacian/none  L = D - A
//   adjacency/sym   D^-1/2 A D^-1/2            laplacian/sym   D^-1/2 L D^-1/2
//   adjacency/rw    A D^-1     laplacian/rw    L D^-1
//   adjacency/mean  D^-1 A     laplacian/mean  D^-1 L
//
// With self_loops, A is replaced by A + I and D by D + I before normalizing.
// Degree-zero nodes get 0 in D^-1/2 and D^-1.
struct OperatorSpec {
    OperatorKind kind = OperatorKind::adjacency;
    Normalization normalization = Normalization::none;
    bool self_loops = false;

    friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;

    // e.g. "adjacency-sym", "laplacian-none+loops"
    std::string label() const;
    static OperatorSpec parse(std::string_view text);

    // All 16 combinations, in a fixed order.
    static std::vector<OperatorSpec> all();
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct ShiftOperator {
    OperatorSpec spec;
    SparseMatrix matrix;
};

ShiftOperator shift_operator(const Graph& g, OperatorSpec spec);

inline ShiftOperator shift_operator(const Graph& g, OperatorKind kind, Normalization norm,
                                    bool self_loops) {
    return shift_operator(g, OperatorSpec{kind, norm, self_loops});
}

// A message-passing matrix in either sparse or dense form. Rewired kernels
// (diffusion, effective resistance) are dense; graph operators stay sparse.
class MessageMatrix {
public:
    MessageMatrix() = default;
    MessageMatrix(SparseMatrix m) : sparse_(std::move(m)), is_dense_(false) {}  // NOLINT
    MessageMatrix(Eigen::MatrixXd m) : dense_(std::move(m)), is_dense_(true) {}  // NOLINT

    Eigen::Index rows() const { return is_dense_ ? dense_.rows() : sparse_.rows(); }
    bool is_dense() const { return is_dense_; }
    const SparseMatrix& sparse() const { return sparse_; }
    const Eigen::MatrixXd& dense_ref() const { return dense_; }

    Eigen::MatrixXd dense() const;
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::Index nonzeros() const;

private:
    SparseMatrix sparse_;
    Eigen::MatrixXd dense_;
    bool is_dense_ = false;
};

}  // namespace rwb
