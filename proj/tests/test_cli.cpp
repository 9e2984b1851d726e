#include "oracles.hpp"

#include "rwb/cli.hpp"
#include "rwb/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rwb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("rwb_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Two loosely linked communities of 15 nodes with informative features.
fs::path toy_dataset() {
    const fs::path dir = scratch("toy");
    Rng rng(1);
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    for (int u = 0; u < 30; ++u) {
        for (int v = u + 1; v < 30; ++v) {
            const bool same = (u < 15) == (v < 15);
            if (rng.uniform() < (same ? 0.35 : 0.02)) edges.emplace_back(u, v);
        }
    }
    Eigen::MatrixXd x(30, 2);
    std::vector<int> labels(30);
    for (int i = 0; i < 30; ++i) {
        labels[static_cast<std::size_t>(i)] = i < 15 ? 0 : 1;
        x(i, 0) = (i < 15 ? -1.0 : 1.0) + rng.uniform(-0.5, 0.5);
        x(i, 1) = rng.uniform(-1.0, 1.0);
    }
    write_canonical(dir, build_graph(edges, x, labels));
    return dir;
}

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "rwb");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("FNV-1a reference values") {
    CHECK(cli::fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(cli::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(cli::fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("stats writes a table and manifest") {
    const fs::path data = toy_dataset();
    const fs::path out = scratch("stats_out");
    CHECK(run({"stats", "--dataset", data.string(), "--out", out.string()}) == cli::exit_ok);
    const std::string csv = slurp(out / "stats.csv");
    CHECK(csv.rfind("dataset,graphs,nodes,edges,undirected_edges,avg_degree,diameter,features,classes,edge_homophily\n",
                    0) == 0);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest.at("command") == "stats");
}

TEST_CASE("input and configuration errors exit with 2") {
    const fs::path data = toy_dataset();
    CHECK(run({"stats", "--dataset", (data / "nope").string()}) == cli::exit_input);
    CHECK(run({"stats"}) == cli::exit_input);
    const fs::path out = scratch("bad_out");
    CHECK(run({"rewire", "--dataset", data.string(), "--out", out.string(), "--rewire", "fosr"}) == cli::exit_input);
    CHECK(run({"rewire", "--dataset", data.string(), "--out", out.string(), "--rewire", "heat", "--t", "50"}) ==
          cli::exit_input);
    CHECK(run({"run", "--dataset", data.string(), "--out", out.string(), "--grid", "huge"}) == cli::exit_input);
}

TEST_CASE("rewire writes its artifacts") {
    const fs::path data = toy_dataset();
    const fs::path out = scratch("rewire_sdrf");
    CHECK(run({"rewire", "--dataset", data.string(), "--out", out.string(), "--rewire", "sdrf", "--seed", "3"}) ==
          cli::exit_ok);
    for (const char* f : {"rewired_edges.tsv", "edits.tsv", "curvature_hist.csv", "curvature_delta.csv",
                          "spectral.csv", "manifest.json"}) {
        CHECK(fs::exists(out / f));
    }
    const Dataset ds = read_canonical(data);
    std::size_t lines = 0;
    std::istringstream edits(slurp(out / "edits.tsv"));
    for (std::string line; std::getline(edits, line);) ++lines;
    CHECK(lines >= static_cast<std::size_t>(std::llround(0.2 * ds.graph().num_edges())));

    const fs::path kernel = scratch("rewire_heat");
    CHECK(run({"rewire", "--dataset", data.string(), "--out", kernel.string(), "--rewire", "heat", "--t", "0.5",
               "--sparsify", "1e-4"}) == cli::exit_ok);
    CHECK(fs::exists(kernel / "operator.tsv"));
    CHECK(slurp(kernel / "spectral.csv").find("kernel") != std::string::npos);
}

TEST_CASE("rewire with an expired budget exits with 3") {
    const fs::path data = toy_dataset();
    const fs::path out = scratch("rewire_oor");
    CHECK(run({"rewire", "--dataset", data.string(), "--out", out.string(), "--rewire", "sdrf", "--budget-seconds",
               "0"}) == cli::exit_budget);
    CHECK(fs::exists(out / "OOR"));
}

TEST_CASE("run is deterministic apart from timing") {
    const fs::path data = toy_dataset();
    const fs::path a = scratch("run_a");
    const fs::path b = scratch("run_b");
    const std::vector<std::string> common{"run",      "--dataset", data.string(), "--model",   "sgc",
                                          "--rewire", "sdrf,egp",  "--steps",     "1,2",       "--lambda",
                                          "0.01,1",   "--seed",    "4",           "--folds",   "5"};
    auto args_a = common;
    args_a.insert(args_a.end(), {"--out", a.string(), "--jobs", "1"});
    auto args_b = common;
    args_b.insert(args_b.end(), {"--out", b.string(), "--jobs", "2"});
    REQUIRE(run(args_a) == cli::exit_ok);
    REQUIRE(run(args_b) == cli::exit_ok);
    for (const char* f : {"folds.csv", "summary.csv", "diagnostics.csv"}) {
        INFO(f);
        CHECK(slurp(a / f) == slurp(b / f));
    }
    const std::string summary = slurp(a / "summary.csv");
    CHECK(summary.find(",baseline,") != std::string::npos);
    CHECK(summary.find(",sdrf,") != std::string::npos);
    CHECK(summary.find(",egp,") != std::string::npos);
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest.at("command") == "run");
}

TEST_CASE("config files supply defaults and flags override them") {
    const fs::path data = toy_dataset();
    const fs::path out = scratch("run_cfg");
    const fs::path cfg = out / "run.toml";
    std::ofstream(cfg) << "[run]\nmodel = \"gesn\"\nunits = [16]\ninput-scaling = [1.0]\nrho-factor = [0.9]\n"
                          "lambda = [0.1]\n";
    CHECK(run({"--config", cfg.string(), "run", "--dataset", data.string(), "--out", out.string(), "--model",
               "sgc", "--steps", "1"}) == cli::exit_ok);
    const std::string folds = slurp(out / "folds.csv");
    CHECK(folds.find(",sgc,") != std::string::npos);
    CHECK(folds.find("lambda=0.1") != std::string::npos);
}

TEST_CASE("graph collections reject SGC") {
    const fs::path dir = scratch("collection");
    std::ofstream(dir / "edges.tsv") << "0 1\n1 2\n3 4\n";
    std::ofstream(dir / "graph_id.csv") << "0\n0\n0\n1\n1\n";
    std::ofstream(dir / "labels.csv") << "0\n1\n";
    const fs::path out = scratch("collection_out");
    CHECK(run({"run", "--dataset", dir.string(), "--out", out.string(), "--model", "sgc"}) == cli::exit_input);
}

}  // TEST_SUITE
