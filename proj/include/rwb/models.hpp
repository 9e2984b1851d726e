#pragma once

#include "rwb/graph.hpp"
#include "rwb/shift_operator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace rwb {

// Node feature matrix used as model input: the graph's features, or a single
// constant column of ones for featureless graphs.
Eigen::MatrixXd input_features(const Graph& g);

// `steps` successive products M * X. steps = 0 returns X.
Eigen::MatrixXd sgc_embed(const MessageMatrix& m, const Eigen::MatrixXd& x, std::size_t steps);

struct ReservoirConfig {
    std::size_t units = 16;     // H
    double input_scaling = 1.0;  // applied to W_in and b
    double target_rho = 0.9;     // spectral radius of the recurrent matrix after scaling
    std::size_t steps = 30;      // L
    std::uint64_t seed = 0;

    // Throws ConfigError.
    void validate() const;
};

// Fixed random reservoir. Embeddings have one row per node:
//   S_k = tanh(X W_in^T + 1 b^T + M S_{k-1} W_hat^T),  S_0 = 0.
struct ReservoirParams {
    ReservoirConfig config;
    Eigen::MatrixXd w_in;   // H x F
    Eigen::MatrixXd w_hat;  // H x H
    Eigen::VectorXd bias;   // H
    double raw_rho = 0.0;   // spectral radius of the unscaled draw
};

// Unscaled reservoir weights, entries uniform in [-1, 1]. The draw depends only
// on (input_dim, units, seed), so one draw serves every scaling of it. A draw
// whose recurrent matrix has zero spectral radius is replaced.
struct ReservoirDraw {
    std::size_t units = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd w_in;
    Eigen::MatrixXd w_hat;
    Eigen::VectorXd bias;
    double rho = 0.0;
};

ReservoirDraw draw_reservoir(std::size_t input_dim, std::size_t units, std::uint64_t seed);

// W_in and b scaled by input_scaling, W_hat rescaled to target_rho.
ReservoirParams scale_reservoir(const ReservoirDraw& draw, const ReservoirConfig& config);

ReservoirParams gesn_init(std::size_t input_dim, const ReservoirConfig& config);

struct GesnTrace {
    // ||S_k - S_{k-1}||_inf for k = 1..L.
    std::vector<double> increments;
    // ||F(S_L) - S_L||_inf, where F is one more update.
    double residual = 0.0;
};

Eigen::MatrixXd gesn_embed(const MessageMatrix& m, const Eigen::MatrixXd& x, const ReservoirParams& params,
                           GesnTrace* trace = nullptr);

enum class PoolMode { sum, mean };

std::string_view to_string(PoolMode mode);
PoolMode parse_pool_mode(std::string_view text);

// Column-wise sum or mean over node rows. Throws InputError for zero rows.
Eigen::RowVectorXd pool(const Eigen::MatrixXd& embeddings, PoolMode mode);

// Affine readout scores = H W^T + 1 b^T.
struct Readout {
    Eigen::MatrixXd weights;  // C x D
    Eigen::VectorXd bias;     // C
    double lambda = 0.0;
    bool pseudoinverse = false;
};

// Ridge regression on one-hot targets with an unregularized bias:
//   min ||H W^T + 1 b^T - Y||^2 + lambda ||W||^2.
// At lambda = 0 a singular system is solved by pseudoinverse.
Readout ridge_fit(const Eigen::MatrixXd& embeddings, std::span<const int> labels, int num_classes,
                  double lambda);

// Ridge solutions for many lambdas from one eigendecomposition of the centered
// Gram matrix (primal D x D or dual N x N, whichever is smaller).
class RidgePath {
public:
    RidgePath(const Eigen::MatrixXd& embeddings, std::span<const int> labels, int num_classes);

    Readout solve(double lambda) const;

private:
    bool dual_ = false;
    Eigen::RowVectorXd feature_mean_;
    Eigen::RowVectorXd target_mean_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    Eigen::MatrixXd projected_;  // eigenvectors^T (Hc^T Yc) or eigenvectors^T Yc
    Eigen::MatrixXd centered_;   // kept for the dual form only
};

struct Prediction {
    std::vector<int> classes;
    Eigen::MatrixXd scores;  // N x C
};

// Argmax over scores; ties go to the lowest class.
Prediction predict(const Eigen::MatrixXd& embeddings, const Readout& readout);

// Binary dump: uint64 rows, uint64 cols, then row-major float64 payload.
void write_embeddings(std::ostream& out, const Eigen::MatrixXd& embeddings);
Eigen::MatrixXd read_embeddings(std::istream& in);

}  // namespace rwb
