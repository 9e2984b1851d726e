#include "oracles.hpp"

#include "rwb/error.hpp"
#include "rwb/models.hpp"
#include "rwb/spectral.hpp"

#include <doctest.h>

#include <sstream>

using namespace rwb;

namespace {

MessageMatrix operator_of(const Graph& g, const char* label) { return shift_operator(g, OperatorSpec::parse(label)).matrix; }

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    }
    return m;
}

std::vector<int> random_labels(std::size_t n, int classes, Rng& rng) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
    rng.shuffle(y);
    return y;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("input features default to a constant column") {
    const Eigen::MatrixXd x = input_features(oracle::path(3));
    CHECK(x.cols() == 1);
    CHECK(x.isApprox(Eigen::MatrixXd::Ones(3, 1)));
}

TEST_CASE("SGC examples") {
    const MessageMatrix a = operator_of(oracle::path(3), "adjacency-none");
    Eigen::MatrixXd e0 = Eigen::MatrixXd::Zero(3, 1);
    e0(0, 0) = 1;
    CHECK(sgc_embed(a, e0, 2).col(0) == Eigen::Vector3d(1, 0, 1));
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
    CHECK(sgc_embed(a, x, 0) == x);
    CHECK_THROWS_AS(sgc_embed(a, Eigen::MatrixXd::Ones(4, 1), 1), InputError);
}

TEST_CASE("SGC is permutation equivariant") {
    Rng rng(6);
    const Graph g = oracle::erdos_renyi(25, 0.15, rng);
    const auto perm = oracle::random_permutation(25, rng);
    const Eigen::MatrixXd p = oracle::permutation_matrix(perm);
    const Eigen::MatrixXd x = random_matrix(25, 3, rng);
    const Eigen::MatrixXd h = sgc_embed(operator_of(g, "adjacency-sym+loops"), x, 3);
    const Eigen::MatrixXd hp = sgc_embed(operator_of(g.relabeled(perm), "adjacency-sym+loops"), p * x, 3);
    CHECK((hp - p * h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reservoir scaling") {
    ReservoirConfig c;
    c.units = 16;
    c.target_rho = 0.9;
    c.seed = 3;
    const ReservoirParams p = gesn_init(5, c);
    CHECK(p.w_in.rows() == 16);
    CHECK(p.w_in.cols() == 5);
    CHECK(std::abs(spectral_radius_exact(p.w_hat) - 0.9) < 1e-6);
    CHECK(p.w_in.cwiseAbs().maxCoeff() <= 1.0);

    c.target_rho = 0.0;
    CHECK(gesn_init(5, c).w_hat.isZero(0.0));

    const ReservoirDraw d = draw_reservoir(5, 16, 3);
    c.target_rho = 0.9;
    c.input_scaling = 0.5;
    const ReservoirParams half = scale_reservoir(d, c);
    CHECK(half.w_in.isApprox(0.5 * d.w_in));
    CHECK(half.bias.isApprox(0.5 * d.bias));
    CHECK(half.w_hat.isApprox(p.w_hat));

    c.units = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("reservoir draws are reproducible") {
    const ReservoirDraw a = draw_reservoir(4, 32, 11);
    const ReservoirDraw b = draw_reservoir(4, 32, 11);
    const ReservoirDraw c = draw_reservoir(4, 32, 12);
    CHECK(a.w_hat == b.w_hat);
    CHECK(a.w_in == b.w_in);
    CHECK(a.w_hat != c.w_hat);
}

TEST_CASE("GESN with no input drive stays at zero") {
    ReservoirConfig c;
    c.input_scaling = 0.0;
    c.seed = 1;
    const ReservoirParams p = gesn_init(2, c);
    const Eigen::MatrixXd s = gesn_embed(operator_of(oracle::cycle(6), "adjacency-sym"), Eigen::MatrixXd::Ones(6, 2), p);
    CHECK(s.isZero(0.0));
}

TEST_CASE("GESN one step matches the update formula") {
    Rng rng(2);
    const Graph g = oracle::erdos_renyi(10, 0.3, rng);
    const MessageMatrix m = operator_of(g, "adjacency-rw");
    const Eigen::MatrixXd x = random_matrix(10, 3, rng);
    ReservoirConfig c;
    c.units = 8;
    c.steps = 2;
    c.seed = 4;
    const ReservoirParams p = gesn_init(3, c);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(10, 8);
    const Eigen::MatrixXd dense = m.dense();
    for (int k = 0; k < 2; ++k) {
        Eigen::MatrixXd pre = x * p.w_in.transpose() + dense * s * p.w_hat.transpose();
        pre.rowwise() += p.bias.transpose();
        s = pre.array().tanh().matrix();
    }
    CHECK((gesn_embed(m, x, p) - s).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("GESN converges under contraction") {
    Rng rng(10);
    const Graph g = oracle::random_connected(40, 0.1, rng);
    const MessageMatrix m = operator_of(g, "adjacency-sym");
    const double rho_m = spectral_radius(m).value;
    ReservoirConfig c;
    c.units = 32;
    c.target_rho = 0.5 / rho_m;
    c.steps = 50;
    const ReservoirParams p = gesn_init(1, c);
    GesnTrace trace;
    gesn_embed(m, input_features(g), p, &trace);
    CHECK(trace.increments.size() == 50);
    CHECK(trace.residual < 1e-4);
}

TEST_CASE("GESN is permutation equivariant") {
    Rng rng(14);
    const Graph g = oracle::erdos_renyi(30, 0.1, rng);
    const auto perm = oracle::random_permutation(30, rng);
    const Eigen::MatrixXd pm = oracle::permutation_matrix(perm);
    const Eigen::MatrixXd x = random_matrix(30, 2, rng);
    ReservoirConfig c;
    c.units = 12;
    const ReservoirParams p = gesn_init(2, c);
    const Eigen::MatrixXd s = gesn_embed(operator_of(g, "adjacency-none"), x, p);
    const Eigen::MatrixXd sp = gesn_embed(operator_of(g.relabeled(perm), "adjacency-none"), pm * x, p);
    CHECK((sp - pm * s).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pooling") {
    Eigen::MatrixXd one(1, 3);
    one << 1, 2, 3;
    CHECK(pool(one, PoolMode::sum) == one.row(0));
    CHECK(pool(one, PoolMode::mean) == one.row(0));
    Eigen::MatrixXd two(2, 3);
    two << 1, 2, 3, 1, 2, 3;
    CHECK(pool(two, PoolMode::sum).isApprox(2 * one.row(0)));
    CHECK(pool(two, PoolMode::mean).isApprox(one.row(0)));
    CHECK_THROWS_AS(pool(Eigen::MatrixXd(0, 3), PoolMode::sum), InputError);
    CHECK(parse_pool_mode(to_string(PoolMode::mean)) == PoolMode::mean);
}

TEST_CASE("ridge matches the normal equations") {
    Rng rng(20);
    const Eigen::MatrixXd h = random_matrix(20, 8, rng);
    const std::vector<int> y = random_labels(20, 3, rng);
    const Readout r = ridge_fit(h, y, 3, 0.1);
    const auto [w, b] = oracle::ridge(h, y, 3, 0.1);
    CHECK((r.weights - w).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((r.bias - b).cwiseAbs().maxCoeff() < 1e-8);
    CHECK_FALSE(r.pseudoinverse);
}

TEST_CASE("ridge in the dual form") {
    Rng rng(21);
    const Eigen::MatrixXd h = random_matrix(12, 40, rng);
    const std::vector<int> y = random_labels(12, 2, rng);
    const RidgePath path(h, y, 2);
    for (double lambda : {1e-3, 1.0, 100.0}) {
        const Readout r = path.solve(lambda);
        const auto [w, b] = oracle::ridge(h, y, 2, lambda);
        CHECK((r.weights - w).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((r.bias - b).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("ridge gradient vanishes at the solution") {
    Rng rng(22);
    const Eigen::MatrixXd h = random_matrix(50, 10, rng);
    const std::vector<int> y = random_labels(50, 4, rng);
    const double lambda = 0.5;
    const Readout r = ridge_fit(h, y, 4, lambda);
    Eigen::MatrixXd target = Eigen::MatrixXd::Zero(50, 4);
    for (int i = 0; i < 50; ++i) target(i, y[static_cast<std::size_t>(i)]) = 1;
    Eigen::MatrixXd resid = h * r.weights.transpose() - target;
    resid.rowwise() += r.bias.transpose();
    const Eigen::MatrixXd grad_w = 2 * resid.transpose() * h + 2 * lambda * r.weights;
    const Eigen::VectorXd grad_b = 2 * resid.colwise().sum().transpose();
    CHECK(grad_w.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(grad_b.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("ridge limits") {
    Eigen::MatrixXd h(4, 1);
    h << -2, -1, 1, 2;
    const std::vector<int> y{0, 0, 1, 1};
    CHECK(oracle::accuracy(predict(h, ridge_fit(h, y, 2, 1e-3)).classes, y) == 1.0);
    CHECK(ridge_fit(h, y, 2, 1e12).weights.cwiseAbs().maxCoeff() < 1e-10);

    // Duplicated column: singular at lambda = 0.
    Eigen::MatrixXd dup(4, 2);
    dup << h, h;
    const Readout pinv = ridge_fit(dup, y, 2, 0.0);
    CHECK(pinv.pseudoinverse);
    CHECK(pinv.weights(0, 0) == doctest::Approx(pinv.weights(0, 1)));
    CHECK_THROWS_AS(ridge_fit(h, y, 2, -1.0), ConfigError);
}

TEST_CASE("zero weights predict by bias") {
    Readout r;
    r.weights = Eigen::MatrixXd::Zero(3, 2);
    r.bias = Eigen::Vector3d(0.1, 0.7, 0.7);
    const Prediction p = predict(Eigen::MatrixXd::Random(5, 2), r);
    for (int c : p.classes) CHECK(c == 1);
}

TEST_CASE("embedding dump round trip") {
    const Eigen::MatrixXd e = Eigen::MatrixXd::Random(7, 3);
    std::stringstream io;
    write_embeddings(io, e);
    CHECK(io.str().size() == 16 + 21 * 8);
    CHECK(read_embeddings(io) == e);
    std::istringstream truncated(std::string(10, '\0'));
    CHECK_THROWS_AS(read_embeddings(truncated), InputError);
}

}  // TEST_SUITE
