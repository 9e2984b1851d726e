#include "rwb/spectral.hpp"

#include "rwb/error.hpp"
#include "rwb/rng.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <fmt/format.h>
#include <lapacke.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace rwb {

namespace {

constexpr double kZeroEigenTolerance = 1e-8;

Eigen::VectorXd random_start(Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.uniform(-1.0, 1.0);
    return x;
}

// Symmetric Laplacian used for spectra: L for `none`, D^-1/2 L D^-1/2 otherwise.
SparseMatrix symmetric_laplacian(const Graph& g, Normalization norm) {
    const Normalization sym_norm = norm == Normalization::none ? Normalization::none : Normalization::sym;
    return shift_operator(g, OperatorSpec{OperatorKind::laplacian, sym_norm, false}).matrix;
}

// Orthonormal basis of the Laplacian null space: one vector per component.
std::vector<Eigen::VectorXd> null_space_basis(const Graph& g, Normalization norm) {
    const std::vector<int> comp = connected_components(g);
    const int k = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    std::vector<Eigen::VectorXd> basis(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(n));
    for (Eigen::Index v = 0; v < n; ++v) {
        const double d = static_cast<double>(g.degree(static_cast<NodeId>(v)));
        // Isolated nodes have a zero row in both L and L_sym.
        const double w = (norm == Normalization::none || d == 0.0) ? 1.0 : std::sqrt(d);
        basis[comp[v]](v) = w;
    }
    for (auto& b : basis) b.normalize();
    return basis;
}

struct LanczosResult {
    double smallest = 0.0;
    double largest = 0.0;
    std::size_t steps = 0;
};

// Lanczos with full reorthogonalization on the complement of `deflate`.
LanczosResult lanczos_extremes(const SparseMatrix& a, const std::vector<Eigen::VectorXd>& deflate,
                               double tol, std::size_t max_steps) {
    const Eigen::Index n = a.rows();
    const auto project = [&](Eigen::VectorXd& x) {
        for (const auto& d : deflate) x -= d.dot(x) * d;
    };
    Eigen::VectorXd q = random_start(n, 0x5eed);
    project(q);
    if (q.norm() == 0.0) return {};
    q.normalize();

    std::vector<Eigen::VectorXd> basis{q};
    std::vector<double> alpha;
    std::vector<double> beta;
    LanczosResult result;
    const std::size_t limit = std::min<std::size_t>(max_steps, static_cast<std::size_t>(n) - deflate.size());
    for (std::size_t j = 0; j < limit; ++j) {
        Eigen::VectorXd w = a * basis[j];
        project(w);
        alpha.push_back(basis[j].dot(w));
        // Two passes of classical Gram-Schmidt keep the basis orthogonal.
        for (int pass = 0; pass < 2; ++pass) {
            project(w);
            for (const auto& b : basis) w -= b.dot(w) * b;
        }
        const double b_next = w.norm();

        const auto m = static_cast<Eigen::Index>(alpha.size());
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            t(i, i) = alpha[i];
            if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        const double theta_min = es.eigenvalues()(0);
        const double theta_max = es.eigenvalues()(m - 1);
        const double resid_min = std::abs(b_next * es.eigenvectors()(m - 1, 0));
        const double resid_max = std::abs(b_next * es.eigenvectors()(m - 1, m - 1));
        result = {theta_min, theta_max, j + 1};
        if (b_next < 1e-12 ||
            (resid_min <= tol * std::max(1.0, std::abs(theta_min)) &&
             resid_max <= tol * std::max(1.0, std::abs(theta_max)))) {
            break;
        }
        beta.push_back(b_next);
        basis.push_back(w / b_next);
    }
    return result;
}

}  // namespace

SpectralRadius spectral_radius(const MessageMatrix& m, double tol, std::size_t max_iter,
                               std::uint64_t seed) {
    SpectralRadius out;
    const Eigen::Index n = m.rows();
    if (n == 0) {
        out.converged = true;
        return out;
    }
    Eigen::VectorXd x = random_start(n, seed);
    x.normalize();
    double prev = -1.0;
    // Two applications per step so that +/- lambda pairs do not oscillate.
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd y = m.apply(m.apply(x));
        const double growth = y.norm();
        out.iterations = it;
        if (growth == 0.0) {
            out.value = 0.0;
            out.converged = true;
            return out;
        }
        const double estimate = std::sqrt(growth);
        out.value = estimate;
        if (prev >= 0.0 && std::abs(estimate - prev) <= tol * estimate) {
            out.converged = true;
            return out;
        }
        prev = estimate;
        x = y / growth;
    }
    return out;
}

double spectral_radius_exact(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() != m.cols()) throw InputError("spectral radius needs a square matrix");
    Eigen::MatrixXd work = m;
    const auto n = static_cast<lapack_int>(m.rows());
    std::vector<double> re(static_cast<std::size_t>(n));
    std::vector<double> im(static_cast<std::size_t>(n));
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, re.data(), im.data(),
                                          nullptr, 1, nullptr, 1);
    if (info != 0) throw InvariantError(fmt::format("dgeev failed with info = {}", info));
    double rho = 0.0;
    for (std::size_t i = 0; i < re.size(); ++i) rho = std::max(rho, std::hypot(re[i], im[i]));
    return rho;
}

SpectralReport spectral_gap(const Graph& g, Normalization laplacian, GapMethod method) {
    if (g.num_nodes() < 2) throw InputError("spectral gap needs at least two nodes");
    SpectralReport report;
    report.laplacian = laplacian;
    report.tolerance = 1e-7;
    const std::vector<int> comp = connected_components(g);
    report.components = static_cast<std::size_t>(*std::max_element(comp.begin(), comp.end()) + 1);

    const SparseMatrix lap = symmetric_laplacian(g, laplacian);
    const bool dense = method == GapMethod::dense ||
                       (method == GapMethod::automatic && g.num_nodes() <= 4000);
    if (dense) {
        report.method = "dense-eigensolver";
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(lap), Eigen::EigenvaluesOnly);
        const Eigen::VectorXd& ev = es.eigenvalues();
        report.spectral_radius = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
        const double cutoff = kZeroEigenTolerance * std::max(1.0, report.spectral_radius);
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            if (ev(i) <= cutoff) {
                ++report.zero_multiplicity;
            } else {
                report.spectral_gap = ev(i);
                break;
            }
        }
        if (report.zero_multiplicity != report.components) {
            throw InvariantError(fmt::format("Laplacian has {} zero eigenvalues but the graph has {} components",
                                             report.zero_multiplicity, report.components));
        }
    } else {
        report.method = "lanczos-deflated";
        const std::vector<Eigen::VectorXd> null_basis = null_space_basis(g, laplacian);
        report.zero_multiplicity = null_basis.size();
        if (null_basis.size() < g.num_nodes()) {
            const LanczosResult lr = lanczos_extremes(lap, null_basis, report.tolerance, 3000);
            report.spectral_gap = lr.smallest;
            report.spectral_radius = lr.largest;
            report.iterations = lr.steps;
        }
    }
    return report;
}

Eigen::MatrixXd laplacian_pseudoinverse(const Graph& g) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(n, n);
    const std::vector<int> comp = connected_components(g);
    if (comp.empty()) return pinv;
    const int k = *std::max_element(comp.begin(), comp.end()) + 1;
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(k));
    for (Eigen::Index v = 0; v < n; ++v) members[comp[v]].push_back(static_cast<NodeId>(v));

    for (const auto& nodes : members) {
        const auto s = static_cast<Eigen::Index>(nodes.size());
        if (s < 2) continue;
        std::vector<Eigen::Index> local(static_cast<std::size_t>(n), -1);
        for (Eigen::Index i = 0; i < s; ++i) local[nodes[i]] = i;
        Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(s, s);
        for (Eigen::Index i = 0; i < s; ++i) {
            const NodeId v = nodes[i];
            lap(i, i) = static_cast<double>(g.degree(v));
            for (NodeId w : g.neighbors(v)) lap(i, local[w]) = -1.0;
        }
        // On a connected block, L+ = (L + J/s)^-1 - J/s with J the all-ones matrix.
        const double shift = 1.0 / static_cast<double>(s);
        lap.array() += shift;
        Eigen::LLT<Eigen::MatrixXd> llt(lap);
        if (llt.info() != Eigen::Success) throw InvariantError("grounded Laplacian is not positive definite");
        Eigen::MatrixXd block = llt.solve(Eigen::MatrixXd::Identity(s, s));
        block.array() -= shift;
        for (Eigen::Index i = 0; i < s; ++i) {
            for (Eigen::Index j = 0; j < s; ++j) pinv(nodes[i], nodes[j]) = block(i, j);
        }
    }
    return pinv;
}

ResistanceMatrix effective_resistance(const Graph& g) {
    const Eigen::MatrixXd pinv = laplacian_pseudoinverse(g);
    const auto n = pinv.rows();
    std::vector<int> comp = connected_components(g);
    Eigen::MatrixXd res(n, n);
    for (Eigen::Index u = 0; u < n; ++u) {
        for (Eigen::Index v = 0; v < n; ++v) {
            if (u == v) {
                res(u, v) = 0.0;
            } else if (comp[u] != comp[v]) {
                res(u, v) = std::numeric_limits<double>::infinity();
            } else {
                res(u, v) = pinv(u, u) + pinv(v, v) - 2.0 * pinv(u, v);
            }
        }
    }
    return ResistanceMatrix(std::move(res), std::move(comp), 2.0 * static_cast<double>(g.num_edges()));
}

Eigen::MatrixXd heat_kernel(const MessageMatrix& transition, double t) {
    if (!(t >= 0.0)) throw ConfigError(fmt::format("heat time must be non-negative, got {}", t));
    const Eigen::MatrixXd scaled = t * transition.dense();
    return std::exp(-t) * scaled.exp();
}

PageRankKernel pagerank_kernel(const MessageMatrix& transition, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError(fmt::format("PageRank alpha must lie in (0, 1), got {}", alpha));
    }
    const Eigen::Index n = transition.rows();
    const Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(n, n) - (1.0 - alpha) * transition.dense();
    PageRankKernel out;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    if (lu.rcond() > 1e-12) {
        out.matrix = alpha * lu.inverse();
        return out;
    }
    spdlog::warn("PageRank system is numerically singular (rcond {:.3g}); using the pseudoinverse",
                 lu.rcond());
    out.pseudoinverse_fallback = true;
    out.matrix = alpha * Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(system).pseudoInverse();
    return out;
}

Eigen::MatrixXd sensitivity_topology_factor(const MessageMatrix& m, std::size_t steps) {
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m.rows(), m.rows());
    for (std::size_t k = 0; k < steps; ++k) power = m.apply(power);
    return power;
}

double cheeger_bruteforce(const Graph& g) {
    const std::size_t n = g.num_nodes();
    if (n > 16) throw InputError(fmt::format("brute-force Cheeger constant refused for {} > 16 nodes", n));
    if (n < 2 || g.num_edges() == 0) return 0.0;
    std::vector<double> deg(n);
    double total = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        deg[v] = static_cast<double>(g.degree(static_cast<NodeId>(v)));
        total += deg[v];
    }
    double best = std::numeric_limits<double>::infinity();
    const std::uint32_t full = (1u << n) - 1;
    for (std::uint32_t mask = 1; mask < full; ++mask) {
        double vol = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (mask & (1u << v)) vol += deg[v];
        }
        const double denom = std::min(vol, total - vol);
        if (denom <= 0.0) continue;
        double cut = 0.0;
        for (const Edge& e : g.edges()) {
            const bool a = (mask >> e.u) & 1u;
            const bool b = (mask >> e.v) & 1u;
            if (a != b) cut += 1.0;
        }
        best = std::min(best, cut / denom);
    }
    return std::isfinite(best) ? best : 0.0;
}

}  // namespace rwb
