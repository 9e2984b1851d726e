#pragma once

#include "rwb/graph.hpp"
#include "rwb/shift_operator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace rwb {

struct SpectralRadius {
    double value = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

// Power iteration from a seeded start vector, estimating |lambda_max| by the
// norm growth ||M x|| / ||x||. Exact for symmetric matrices and for matrices
// similar to one (every normalized graph operator). When max_iter is reached
// the best estimate is returned with converged = false.
SpectralRadius spectral_radius(const MessageMatrix& m, double tol = 1e-10,
                               std::size_t max_iter = 10000, std::uint64_t seed = 0);

// Largest eigenvalue modulus of a general dense matrix from its full spectrum
// (LAPACK dgeev). Used for random reservoir matrices, whose dominant
// eigenvalues are often a complex-conjugate pair that power iteration resolves
// only slowly.
double spectral_radius_exact(const Eigen::MatrixXd& m);

enum class GapMethod { automatic, dense, lanczos };

struct SpectralReport {
    double spectral_gap = 0.0;
    double spectral_radius = 0.0;
    std::size_t zero_multiplicity = 0;
    std::size_t components = 0;
    Normalization laplacian = Normalization::sym;
    std::string method;
    std::size_t iterations = 0;
    double tolerance = 0.0;
};

// Smallest strictly positive eigenvalue of the chosen Laplacian. rw and mean
// normalizations share the spectrum of sym, which is what gets decomposed.
// automatic uses the dense eigensolver up to 4000 nodes and Lanczos beyond.
// Cross-checks that the multiplicity of zero equals the number of components.
SpectralReport spectral_gap(const Graph& g, Normalization laplacian = Normalization::sym,
                            GapMethod method = GapMethod::automatic);

// Moore-Penrose pseudoinverse of the unnormalized Laplacian, block by
// connected component. Entries across components are zero.
Eigen::MatrixXd laplacian_pseudoinverse(const Graph& g);

class ResistanceMatrix {
public:
    ResistanceMatrix(Eigen::MatrixXd values, std::vector<int> component, double volume)
        : values_(std::move(values)), component_(std::move(component)), volume_(volume) {}

    // Effective resistance; +infinity across components.
    double operator()(NodeId u, NodeId v) const {
        if (component_[u] != component_[v]) return std::numeric_limits<double>::infinity();
        return values_(u, v);
    }
    bool connected(NodeId u, NodeId v) const { return component_[u] == component_[v]; }

    // Expected round-trip time of a random walk: Res_uv * sum of degrees.
    double commute_time(NodeId u, NodeId v) const { return (*this)(u, v) * volume_; }

    // Entries across components are stored as +infinity.
    const Eigen::MatrixXd& values() const { return values_; }
    double volume() const { return volume_; }

private:
    Eigen::MatrixXd values_;
    std::vector<int> component_;
    double volume_;
};

// Res_uv = (e_u - e_v)^T L+ (e_u - e_v).
ResistanceMatrix effective_resistance(const Graph& g);

// Heat diffusion sum_m e^-t t^m/m! T^m = exp(-t (I - T)).
Eigen::MatrixXd heat_kernel(const MessageMatrix& transition, double t);

struct PageRankKernel {
    Eigen::MatrixXd matrix;
    bool pseudoinverse_fallback = false;
};

// alpha (I - (1 - alpha) T)^-1, falling back to the pseudoinverse when the
// system is numerically singular.
PageRankKernel pagerank_kernel(const MessageMatrix& transition, double alpha);

// Dense M^steps, the topology factor bounding how node u's input can affect
// node v after that many message-passing steps.
Eigen::MatrixXd sensitivity_topology_factor(const MessageMatrix& m, std::size_t steps);

// Exact Cheeger constant min_S cut(S) / min(vol S, vol S^c) by subset
// enumeration. Refuses graphs with more than 16 nodes. 0 for disconnected or
// edgeless graphs.
double cheeger_bruteforce(const Graph& g);

}  // namespace rwb
