#include "oracles.hpp"

#include "rwb/curvature.hpp"
#include "rwb/error.hpp"
#include "rwb/rewiring.hpp"
#include "rwb/spectral.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace rwb;

namespace {

RewireConfig config_for(RewireMethod method, std::uint64_t seed = 0) {
    RewireConfig c;
    c.method = method;
    c.seed = seed;
    return c;
}

// Two triangles joined through a path 2 - 3 - 4.
Graph barbell() { return oracle::from_pairs(7, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {4, 6}, {5, 6}}); }

}  // namespace

TEST_SUITE("rewiring") {

TEST_CASE("method names round trip") {
    for (RewireMethod m : {RewireMethod::baseline, RewireMethod::heat, RewireMethod::pagerank, RewireMethod::sdrf,
                           RewireMethod::grlef, RewireMethod::egp, RewireMethod::diffwire}) {
        CHECK(parse_rewire_method(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_rewire_method("fosr"), ConfigError);
}

TEST_CASE("config validation") {
    RewireConfig c = config_for(RewireMethod::heat);
    c.t = 10.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.check_grid_ranges = false;
    CHECK_NOTHROW(c.validate());
    c = config_for(RewireMethod::sdrf);
    c.iteration_fraction = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.iterations = 1000;
    CHECK_NOTHROW(c.validate());
    c.temperature = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(config_for(RewireMethod::pagerank).describe() == "pagerank(alpha=0.15,T=adjacency-rw)");
}

TEST_CASE("edit log round trip") {
    const std::vector<EditRecord> edits{{0, EditOp::add, 1, 4}, {0, EditOp::remove, 2, 3}, {1, EditOp::skip, 0, 0},
                                        {2, EditOp::retry, 5, 6}};
    std::stringstream io;
    write_edit_log(io, edits);
    CHECK(io.str().rfind("0\tadd\t1\t4\n", 0) == 0);
    CHECK(read_edit_log(io) == edits);
    std::istringstream bad("0\tswap\t1\t2\n");
    CHECK_THROWS_AS(read_edit_log(bad), InputError);
}

TEST_CASE("baseline returns the input") {
    const Graph g = barbell();
    const RewiredGraph r = rewire(g, config_for(RewireMethod::baseline));
    CHECK(r.graph.num_edges() == g.num_edges());
    CHECK_FALSE(r.kernel);
    CHECK(r.edits.empty());
}

TEST_CASE("diffusion kernels") {
    Rng rng(3);
    const Graph g = oracle::random_connected(12, 0.2, rng);
    RewireConfig heat = config_for(RewireMethod::heat);
    heat.t = 0.5;
    const RewiredGraph h = rewire(g, heat);
    REQUIRE(h.kernel);
    CHECK(h.kernel->is_dense());
    CHECK((h.kernel->dense() - oracle::heat_series(oracle::random_walk(g), 0.5)).cwiseAbs().maxCoeff() < 1e-10);

    RewireConfig pr = config_for(RewireMethod::pagerank);
    pr.alpha = 0.25;
    pr.diffusion_operator = OperatorSpec::parse("adjacency-sym");
    const RewiredGraph p = rewire(g, pr);
    const Eigen::MatrixXd sym = shift_operator(g, pr.diffusion_operator).matrix;
    CHECK((p.kernel->dense() - oracle::pagerank_series(sym, 0.25)).cwiseAbs().maxCoeff() < 1e-10);

    heat.sparsify_threshold = 1e-3;
    const RewiredGraph s = rewire(g, heat);
    CHECK_FALSE(s.kernel->is_dense());
    const Eigen::MatrixXd diff = s.kernel->dense() - h.kernel->dense();
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-3);

    CHECK_THROWS_AS(rewire(g, heat, TaskKind::graph), ConfigError);
}

TEST_CASE("SDRF on a triangle only skips") {
    RewireConfig c = config_for(RewireMethod::sdrf);
    c.iterations = 5;
    const RewiredGraph r = rewire(oracle::complete(3), c);
    CHECK(r.graph.num_edges() == 3);
    CHECK(r.count(EditOp::skip) == 5);
    CHECK(r.count(EditOp::add) == 0);
}

TEST_CASE("SDRF edits are consistent with the final graph") {
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const Graph g = oracle::random_connected(30, 0.06, rng);
        RewireConfig c = config_for(RewireMethod::sdrf, static_cast<std::uint64_t>(trial));
        c.removal_enabled = trial % 2 == 0;
        const RewiredGraph r = rewire(g, c);
        CHECK(r.graph.num_edges() == g.num_edges() + r.count(EditOp::add) - r.count(EditOp::remove));
        CHECK(r.count(EditOp::add) + r.count(EditOp::skip) == static_cast<std::size_t>(std::llround(0.2 * g.num_edges())));
        std::set<Edge> edges(g.edges().begin(), g.edges().end());
        for (const EditRecord& e : r.edits) {
            if (e.op == EditOp::add) CHECK(edges.insert(make_edge(e.u, e.v)).second);
            if (e.op == EditOp::remove) CHECK(edges.erase(make_edge(e.u, e.v)) == 1);
        }
        CHECK(std::equal(edges.begin(), edges.end(), r.graph.edges().begin(), r.graph.edges().end()));
    }
}

TEST_CASE("SDRF local and full curvature updates agree") {
    Rng rng(44);
    for (int trial = 0; trial < 8; ++trial) {
        const Graph g = oracle::random_connected(25, 0.1, rng);
        RewireConfig c = config_for(RewireMethod::sdrf, 7);
        c.removal_enabled = true;
        c.iteration_fraction = 0.2;
        const RewiredGraph local = rewire(g, c);
        c.full_recompute = true;
        const RewiredGraph full = rewire(g, c);
        CHECK(local.edits == full.edits);
    }
}

TEST_CASE("SDRF raises the curvature of the edge it targets") {
    const Graph g = barbell();
    RewireConfig c = config_for(RewireMethod::sdrf, 1);
    c.iterations = 1;
    c.temperature = 1e-3;  // effectively picks the most negative edge
    const RewiredGraph r = rewire(g, c);
    REQUIRE(r.edits.size() == 1);
    REQUIRE(r.edits[0].op == EditOp::add);
    const auto before = edge_curvatures(g);
    double lowest = before.front().value;
    for (const auto& e : before) lowest = std::min(lowest, e.value);
    // The bridge edges tie for the minimum; one of them must have improved.
    double best_after = -1e300;
    for (const auto& e : before) {
        if (e.value <= lowest + 1e-12) best_after = std::max(best_after, balanced_forman(r.graph, e.u, e.v).value);
    }
    CHECK(best_after > lowest);
}

TEST_CASE("SDRF respects the deadline") {
    Deadline d;
    d.at = std::chrono::steady_clock::now() - std::chrono::seconds(1);
    CHECK_THROWS_AS(rewire(barbell(), config_for(RewireMethod::sdrf), TaskKind::node, d), BudgetExceeded);
}

TEST_CASE("GRLEF preserves degrees and edge count") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const Graph g = oracle::random_connected(40, 0.08, rng);
        RewireConfig c = config_for(RewireMethod::grlef, static_cast<std::uint64_t>(trial));
        c.iterations = 200;
        const RewiredGraph r = rewire(g, c);
        CHECK(r.graph.num_edges() == g.num_edges());
        CHECK(r.graph.degrees() == g.degrees());
        CHECK(r.count(EditOp::add) == r.count(EditOp::remove));
        CHECK(r.count(EditOp::add) / 2 + r.count(EditOp::skip) == 200);
    }
}

TEST_CASE("GRLEF skips when no flip exists") {
    RewireConfig c = config_for(RewireMethod::grlef);
    c.iterations = 3;
    const RewiredGraph r = rewire(oracle::complete(4), c);
    CHECK(r.count(EditOp::skip) == 3);
    CHECK(r.count(EditOp::retry) == 3 * c.grlef_retries);
    CHECK(r.graph.num_edges() == 6);
}

TEST_CASE("GRLEF does not shrink the gap of two linked triangles") {
    const Graph g = barbell();
    const double before = spectral_gap(g).spectral_gap;
    std::vector<double> after;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const RewiredGraph r = rewire(g, config_for(RewireMethod::grlef, seed));
        after.push_back(spectral_gap(r.graph).spectral_gap);
    }
    std::sort(after.begin(), after.end());
    CHECK(0.5 * (after[4] + after[5]) >= before - 1e-12);
}

TEST_CASE("SL(2, Z_n) orders") {
    for (int n = 2; n <= 8; ++n) CHECK(sl2_order(n) == oracle::sl2_elements(n).size());
    CHECK(cayley_modulus_for(6) == 2);
    CHECK(cayley_modulus_for(7) == 3);
    CHECK(cayley_modulus_for(24) == 3);
    CHECK(cayley_modulus_for(25) == 4);
}

TEST_CASE("Cayley graphs") {
    const Graph c2 = cayley_graph(2);
    CHECK(c2.num_nodes() == 6);
    for (std::size_t d : c2.degrees()) CHECK(d == 2);
    const Graph c3 = cayley_graph(3);
    CHECK(c3.num_nodes() == 24);
    for (std::size_t d : c3.degrees()) CHECK(d == 4);
    CHECK(oracle::is_connected(c3));
    CHECK(cayley_graph(5).num_nodes() == 120);
}

TEST_CASE("EGP kernel is the truncated Cayley adjacency times A") {
    Rng rng(50);
    for (std::size_t n : {3u, 6u, 20u, 24u, 30u}) {
        const Graph g = oracle::erdos_renyi(n, 0.2, rng);
        const RewiredGraph r = rewire(g, config_for(RewireMethod::egp));
        REQUIRE(r.kernel);
        const Eigen::MatrixXd cay = cayley_graph(cayley_modulus_for(n)).dense_adjacency();
        const auto m = static_cast<Eigen::Index>(n);
        const Eigen::MatrixXd expect = cay.topLeftCorner(m, m) * g.dense_adjacency();
        CHECK((r.kernel->dense() - expect).cwiseAbs().maxCoeff() == 0.0);
        CHECK(r.kernel->nonzeros() <= 4 * static_cast<Eigen::Index>(2 * g.num_edges()));
    }
}

TEST_CASE("EGP on an edgeless graph is zero") {
    const RewiredGraph r = rewire(oracle::from_pairs(5, {}), config_for(RewireMethod::egp));
    CHECK(r.kernel->nonzeros() == 0);
}

TEST_CASE("EGP shuffled alignment is a relabeled Cayley graph") {
    Rng rng(2);
    const Graph g = oracle::erdos_renyi(24, 0.2, rng);
    RewireConfig c = config_for(RewireMethod::egp, 5);
    c.egp_alignment = EgpAlignment::shuffled;
    const RewiredGraph r = rewire(g, c);
    // Every row of A_cay has 4 ones on the full group, so the kernel row sums
    // over an all-ones input equal 4 times the degree sums reached.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(24);
    const Eigen::VectorXd deg = g.dense_adjacency() * ones;
    const Eigen::VectorXd got = r.kernel->apply(ones);
    CHECK(got.sum() == doctest::Approx(4.0 * deg.sum()));
    const RewiredGraph again = rewire(g, c);
    CHECK(again.kernel->dense() == r.kernel->dense());
}

TEST_CASE("DiffWire weights edges by effective resistance") {
    const RewiredGraph p2 = rewire(oracle::path(2), config_for(RewireMethod::diffwire));
    CHECK(p2.kernel->dense().isApprox(oracle::path(2).dense_adjacency()));
    const Eigen::MatrixXd k3 = rewire(oracle::complete(3), config_for(RewireMethod::diffwire)).kernel->dense();
    CHECK(k3(0, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(k3(0, 0) == 0.0);

    const Graph bells = oracle::from_pairs(8, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}, {3, 4},
                                               {4, 5}, {4, 6}, {4, 7}, {5, 6}, {5, 7}, {6, 7}});
    const Eigen::MatrixXd w = rewire(bells, config_for(RewireMethod::diffwire)).kernel->dense();
    CHECK(w(3, 4) == doctest::Approx(1.0));
    CHECK(w(3, 4) == w.maxCoeff());
}

}  // TEST_SUITE
