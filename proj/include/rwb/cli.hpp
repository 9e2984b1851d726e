#pragma once

#include "rwb/eval.hpp"
#include "rwb/io.hpp"
#include "rwb/rewiring.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rwb::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_input = 2,
    exit_budget = 3,
    exit_invariant = 4,
};

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

struct StatsRequest {
    std::filesystem::path dataset;
    DatasetFormat format = DatasetFormat::canonical;
    std::optional<std::filesystem::path> out;
};

struct RewireRequest {
    std::filesystem::path dataset;
    DatasetFormat format = DatasetFormat::canonical;
    std::filesystem::path out;
    RewireConfig config;
    std::size_t graph_index = 0;  // member graph of a collection
    std::optional<double> budget_seconds;
};

struct RunConfig {
    std::filesystem::path dataset;
    DatasetFormat format = DatasetFormat::canonical;
    std::filesystem::path out;
    ModelKind model = ModelKind::sgc;
    // Reports are produced for the baseline and each listed method.
    std::vector<RewireMethod> methods;
    RewireConfig rewire;  // fixed rewiring parameters (seed, temperature, ...)
    SearchSpace space = SearchSpace::desk();
    Metric metric = Metric::accuracy;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::optional<double> budget_seconds;
};

// Writes the dataset statistics table to `out` and, with request.out, to
// stats.csv plus a manifest.
int cmd_stats(const StatsRequest& request, std::ostream& out);

// Writes rewired_edges.tsv or operator.tsv, edits.tsv, curvature_hist.csv,
// curvature_delta.csv, spectral.csv and manifest.json. A budget overrun writes
// an OOR marker and returns exit_budget.
int cmd_rewire(const RewireRequest& request);

// Writes folds.csv, summary.csv, timing.csv, diagnostics.csv and
// manifest.json. Returns exit_budget when any method ran out of resources.
int cmd_run(const RunConfig& config);

// Parses arguments and dispatches; maps exceptions to exit codes.
int main(int argc, const char* const* argv);

}  // namespace rwb::cli
