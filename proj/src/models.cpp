#include "rwb/models.hpp"

#include "rwb/error.hpp"
#include "rwb/rng.hpp"
#include "rwb/spectral.hpp"

#include <fmt/format.h>
#include <lapacke.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <istream>
#include <ostream>

namespace rwb {

namespace {

Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    // Row-major fill so the stream order does not depend on the storage order.
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    }
    return m;
}

Eigen::MatrixXd one_hot_centered(std::span<const int> labels, int num_classes, Eigen::RowVectorXd& mean) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, num_classes);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        if (c < 0 || c >= num_classes) {
            throw InputError(fmt::format("label {} outside [0, {})", c, num_classes));
        }
        y(i, c) = 1.0;
    }
    mean = y.colwise().mean();
    y.rowwise() -= mean;
    return y;
}

constexpr double kPseudoinverseCutoff = 1e-10;

// Eigenpairs of a symmetric matrix in ascending order (LAPACK dsyevd).
void symmetric_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    const auto n = static_cast<lapack_int>(a.rows());
    values.resize(a.rows());
    if (n > 0) {
        const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, values.data());
        if (info != 0) throw InvariantError(fmt::format("dsyevd failed with info = {}", info));
    }
    vectors = std::move(a);
}

}  // namespace

Eigen::MatrixXd input_features(const Graph& g) {
    if (g.features().cols() > 0) return g.features();
    return Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(g.num_nodes()), 1);
}

Eigen::MatrixXd sgc_embed(const MessageMatrix& m, const Eigen::MatrixXd& x, std::size_t steps) {
    if (steps > 0 && m.rows() != x.rows()) {
        throw InputError(fmt::format("operator has {} rows but features have {}", m.rows(), x.rows()));
    }
    Eigen::MatrixXd h = x;
    for (std::size_t k = 0; k < steps; ++k) h = m.apply(h);
    return h;
}

void ReservoirConfig::validate() const {
    if (units == 0) throw ConfigError("reservoir needs at least one unit");
    if (!(input_scaling >= 0.0)) throw ConfigError(fmt::format("input scaling must be >= 0, got {}", input_scaling));
    if (!(target_rho >= 0.0)) throw ConfigError(fmt::format("target spectral radius must be >= 0, got {}", target_rho));
}

ReservoirDraw draw_reservoir(std::size_t input_dim, std::size_t units, std::uint64_t seed) {
    if (units == 0) throw ConfigError("reservoir needs at least one unit");
    const auto h = static_cast<Eigen::Index>(units);
    const auto f = static_cast<Eigen::Index>(input_dim);
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(attempt == 0 ? seed : derive_seed(seed, attempt));
        ReservoirDraw d;
        d.units = units;
        d.seed = seed;
        d.w_in = uniform_matrix(rng, h, f);
        d.w_hat = uniform_matrix(rng, h, h);
        d.bias = uniform_matrix(rng, h, 1).col(0);
        d.rho = spectral_radius_exact(d.w_hat);
        if (d.rho > 0.0) return d;
        spdlog::warn("reservoir draw {} has zero spectral radius; redrawing", attempt);
    }
}

ReservoirParams scale_reservoir(const ReservoirDraw& draw, const ReservoirConfig& config) {
    config.validate();
    if (config.units != draw.units) {
        throw ConfigError(fmt::format("draw has {} units, config asks for {}", draw.units, config.units));
    }
    ReservoirParams p;
    p.config = config;
    p.raw_rho = draw.rho;
    p.w_in = config.input_scaling * draw.w_in;
    p.bias = config.input_scaling * draw.bias;
    p.w_hat = (config.target_rho / draw.rho) * draw.w_hat;
    return p;
}

ReservoirParams gesn_init(std::size_t input_dim, const ReservoirConfig& config) {
    config.validate();
    return scale_reservoir(draw_reservoir(input_dim, config.units, config.seed), config);
}

Eigen::MatrixXd gesn_embed(const MessageMatrix& m, const Eigen::MatrixXd& x, const ReservoirParams& params,
                           GesnTrace* trace) {
    if (x.cols() != params.w_in.cols()) {
        throw InputError(fmt::format("reservoir expects {} input features, got {}", params.w_in.cols(), x.cols()));
    }
    if (m.rows() != x.rows()) {
        throw InputError(fmt::format("operator has {} rows but features have {}", m.rows(), x.rows()));
    }
    Eigen::MatrixXd drive = x * params.w_in.transpose();
    drive.rowwise() += params.bias.transpose();
    const Eigen::MatrixXd w_hat_t = params.w_hat.transpose();
    const auto update = [&](const Eigen::MatrixXd& s) -> Eigen::MatrixXd {
        return (drive + m.apply(s * w_hat_t)).array().tanh().matrix();
    };

    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.rows(), params.w_hat.rows());
    if (trace) trace->increments.clear();
    for (std::size_t k = 0; k < params.config.steps; ++k) {
        Eigen::MatrixXd next = update(s);
        if (trace) trace->increments.push_back(s.size() ? (next - s).cwiseAbs().maxCoeff() : 0.0);
        s = std::move(next);
    }
    if (trace) trace->residual = s.size() ? (update(s) - s).cwiseAbs().maxCoeff() : 0.0;
    return s;
}

std::string_view to_string(PoolMode mode) { return mode == PoolMode::sum ? "sum" : "mean"; }

PoolMode parse_pool_mode(std::string_view text) {
    if (text == "sum") return PoolMode::sum;
    if (text == "mean") return PoolMode::mean;
    throw ConfigError(fmt::format("unknown pooling '{}'", text));
}

Eigen::RowVectorXd pool(const Eigen::MatrixXd& embeddings, PoolMode mode) {
    if (embeddings.rows() == 0) throw InputError("cannot pool an empty graph");
    Eigen::RowVectorXd out = embeddings.colwise().sum();
    if (mode == PoolMode::mean) out /= static_cast<double>(embeddings.rows());
    return out;
}

RidgePath::RidgePath(const Eigen::MatrixXd& embeddings, std::span<const int> labels, int num_classes) {
    if (embeddings.rows() == 0) throw InputError("ridge regression needs at least one training row");
    if (static_cast<std::size_t>(embeddings.rows()) != labels.size()) {
        throw InputError(fmt::format("{} embedding rows but {} labels", embeddings.rows(), labels.size()));
    }
    if (num_classes < 1) throw InputError("ridge regression needs at least one class");
    const Eigen::MatrixXd yc = one_hot_centered(labels, num_classes, target_mean_);
    feature_mean_ = embeddings.colwise().mean();
    Eigen::MatrixXd hc = embeddings.rowwise() - feature_mean_;

    dual_ = hc.rows() < hc.cols();
    if (dual_) {
        symmetric_eigen(hc * hc.transpose(), eigenvalues_, eigenvectors_);
        projected_ = eigenvectors_.transpose() * yc;
        centered_ = std::move(hc);
    } else {
        Eigen::MatrixXd gram(hc.cols(), hc.cols());
        gram.setZero();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(hc.transpose());
        symmetric_eigen(std::move(gram), eigenvalues_, eigenvectors_);
        projected_ = eigenvectors_.transpose() * (hc.transpose() * yc);
    }
    eigenvalues_ = eigenvalues_.cwiseMax(0.0);
}

Readout RidgePath::solve(double lambda) const {
    if (!(lambda >= 0.0)) throw ConfigError(fmt::format("ridge lambda must be >= 0, got {}", lambda));
    Readout r;
    r.lambda = lambda;
    const double top = eigenvalues_.size() ? eigenvalues_.maxCoeff() : 0.0;
    const double cutoff = kPseudoinverseCutoff * std::max(top, 1e-300);
    Eigen::VectorXd inv(eigenvalues_.size());
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
        const double denom = eigenvalues_(i) + lambda;
        if (lambda == 0.0 && eigenvalues_(i) <= cutoff) {
            inv(i) = 0.0;
            r.pseudoinverse = true;
        } else {
            inv(i) = 1.0 / denom;
        }
    }
    if (r.pseudoinverse) spdlog::debug("ridge system singular at lambda = 0; using pseudoinverse");
    const Eigen::MatrixXd coeff = eigenvectors_ * (inv.asDiagonal() * projected_);
    const Eigen::MatrixXd w_t = dual_ ? Eigen::MatrixXd(centered_.transpose() * coeff) : coeff;
    r.weights = w_t.transpose();
    r.bias = (target_mean_ - feature_mean_ * w_t).transpose();
    return r;
}

Readout ridge_fit(const Eigen::MatrixXd& embeddings, std::span<const int> labels, int num_classes,
                  double lambda) {
    return RidgePath(embeddings, labels, num_classes).solve(lambda);
}

Prediction predict(const Eigen::MatrixXd& embeddings, const Readout& readout) {
    if (embeddings.cols() != readout.weights.cols()) {
        throw InputError(fmt::format("readout expects {} features, got {}", readout.weights.cols(), embeddings.cols()));
    }
    Prediction p;
    p.scores = embeddings * readout.weights.transpose();
    p.scores.rowwise() += readout.bias.transpose();
    p.classes.resize(static_cast<std::size_t>(p.scores.rows()));
    for (Eigen::Index i = 0; i < p.scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < p.scores.cols(); ++c) {
            if (p.scores(i, c) > p.scores(i, best)) best = c;
        }
        p.classes[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return p;
}

void write_embeddings(std::ostream& out, const Eigen::MatrixXd& embeddings) {
    const std::uint64_t header[2] = {static_cast<std::uint64_t>(embeddings.rows()),
                                     static_cast<std::uint64_t>(embeddings.cols())};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = embeddings;
    out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(double)));
}

Eigen::MatrixXd read_embeddings(std::istream& in) {
    std::uint64_t header[2] = {0, 0};
    if (!in.read(reinterpret_cast<char*>(header), sizeof header)) throw InputError("truncated embedding header");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
        static_cast<Eigen::Index>(header[0]), static_cast<Eigen::Index>(header[1]));
    if (!in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(double)))) {
        throw InputError("truncated embedding payload");
    }
    return rows;
}

}  // namespace rwb
