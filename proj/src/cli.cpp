#include "rwb/cli.hpp"

#include "rwb/curvature.hpp"
#include "rwb/error.hpp"
#include "rwb/spectral.hpp"
#include "rwb/structure.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace rwb::cli {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string hex(std::uint64_t x) { return fmt::format("{:016x}", x); }

// Collects output files and writes manifest.json last.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw InputError(fmt::format("cannot create output directory {}: {}", dir_.string(), ec.message()));
    }

    void write(const std::string& name, const std::string& content, bool deterministic = true) {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) throw InputError(fmt::format("cannot write {}", (dir_ / name).string()));
        f << content;
        json entry{{"file", name}};
        if (deterministic) {
            entry["bytes"] = content.size();
            entry["fnv1a"] = hex(fnv1a(content));
        } else {
            entry["deterministic"] = false;
        }
        artifacts_.push_back(std::move(entry));
    }

    void manifest(const std::string& command, const json& config) {
        json m;
        m["command"] = command;
        m["config"] = config;
        m["config_hash"] = hex(fnv1a(config.dump()));
        m["artifacts"] = artifacts_;
        std::ofstream f(dir_ / "manifest.json", std::ios::binary);
        if (!f) throw InputError(fmt::format("cannot write {}", (dir_ / "manifest.json").string()));
        f << m.dump(2) << '\n';
    }

private:
    std::filesystem::path dir_;
    json artifacts_ = json::array();
};

json rewire_json(const RewireConfig& c) {
    json j{{"method", to_string(c.method)},
           {"t", c.t},
           {"alpha", c.alpha},
           {"iteration_fraction", c.iteration_fraction},
           {"temperature", c.temperature},
           {"seed", c.seed},
           {"removal_enabled", c.removal_enabled},
           {"removal_threshold", c.removal_threshold},
           {"full_recompute", c.full_recompute},
           {"grlef_retries", c.grlef_retries},
           {"diffusion_operator", c.diffusion_operator.label()},
           {"sparsify_threshold", c.sparsify_threshold},
           {"egp_alignment", c.egp_alignment == EgpAlignment::shuffled ? "shuffled" : "input_order"},
           {"check_grid_ranges", c.check_grid_ranges}};
    j["iterations"] = c.iterations ? json(*c.iterations) : json(nullptr);
    return j;
}

template <typename T, typename F>
json list_json(const std::vector<T>& values, F&& f) {
    json out = json::array();
    for (const T& v : values) out.push_back(f(v));
    return out;
}

json space_json(const SearchSpace& s) {
    const auto same = [](auto x) { return x; };
    const auto label = [](const OperatorSpec& o) { return o.label(); };
    return json{{"sgc_steps", list_json(s.sgc_steps, same)},
                {"sgc_operators", list_json(s.sgc_operators, label)},
                {"gesn_operators", list_json(s.gesn_operators, label)},
                {"reservoir_units", list_json(s.reservoir_units, same)},
                {"input_scalings", list_json(s.input_scalings, same)},
                {"rho_factors", list_json(s.rho_factors, same)},
                {"pools", list_json(s.pools, [](PoolMode p) { return std::string(to_string(p)); })},
                {"lambdas", list_json(s.lambdas, same)},
                {"heat_times", list_json(s.heat_times, same)},
                {"pagerank_alphas", list_json(s.pagerank_alphas, same)},
                {"iteration_fractions", list_json(s.iteration_fractions, same)},
                {"diffusion_operators", list_json(s.diffusion_operators, label)}};
}

std::string format_name(DatasetFormat f) { return f == DatasetFormat::canonical ? "canonical" : "tudataset"; }

std::string spectral_rows(const std::string& stage, const Graph& g) {
    if (g.num_nodes() < 2) return {};
    const SpectralReport r = spectral_gap(g);
    return fmt::format("{},{:.12g},{:.12g},{},{},{}\n", stage, r.spectral_gap, r.spectral_radius,
                       r.zero_multiplicity, r.components, r.method);
}

}  // namespace

int cmd_stats(const StatsRequest& request, std::ostream& out) {
    const Dataset ds = read_dataset(request.dataset, request.format);
    const DatasetStats s = ds.task == TaskKind::node ? dataset_stats(ds.graph())
                                                     : dataset_stats(ds.graphs, ds.graph_labels);
    std::ostringstream csv;
    csv << "dataset,graphs,nodes,edges,undirected_edges,avg_degree,diameter,features,classes,edge_homophily\n";
    csv << fmt::format("{},{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{},{},{}\n", ds.name, s.num_graphs, s.nodes, s.edges,
                       s.undirected_edges, s.average_degree, s.diameter, s.num_features, s.num_classes,
                       s.edge_homophily ? fmt::format("{:.2f}", *s.edge_homophily) : std::string());
    out << csv.str();
    if (request.out) {
        OutputDir dir(*request.out);
        dir.write("stats.csv", csv.str());
        dir.manifest("stats", json{{"dataset", request.dataset.string()}, {"format", format_name(request.format)}});
    }
    return exit_ok;
}

int cmd_rewire(const RewireRequest& request) {
    const Dataset ds = read_dataset(request.dataset, request.format);
    if (request.graph_index >= ds.graphs.size()) {
        throw ConfigError(fmt::format("graph index {} out of range ({} graphs)", request.graph_index, ds.graphs.size()));
    }
    const Graph& g = ds.graphs[request.graph_index];
    const json config{{"dataset", request.dataset.string()},
                      {"format", format_name(request.format)},
                      {"graph_index", request.graph_index},
                      {"rewire", rewire_json(request.config)}};
    OutputDir dir(request.out);
    const Deadline deadline = request.budget_seconds ? Deadline::after(*request.budget_seconds) : Deadline{};

    RewiredGraph rw;
    try {
        rw = rewire(g, request.config, ds.task, deadline);
    } catch (const BudgetExceeded& e) {
        dir.write("OOR", fmt::format("{} exceeded the budget of {} s\n", request.config.describe(),
                                     request.budget_seconds.value_or(0.0)));
        dir.manifest("rewire", config);
        spdlog::error("{}", e.what());
        return exit_budget;
    }

    std::ostringstream buf;
    if (rw.kernel) {
        buf << "u\tv\tvalue\n";
        const Eigen::MatrixXd k = rw.kernel->dense();
        for (Eigen::Index i = 0; i < k.rows(); ++i) {
            for (Eigen::Index j = 0; j < k.cols(); ++j) {
                if (k(i, j) != 0.0) buf << fmt::format("{}\t{}\t{:.17g}\n", i, j, k(i, j));
            }
        }
        dir.write("operator.tsv", buf.str());
    } else {
        write_edge_list(buf, rw.graph);
        dir.write("rewired_edges.tsv", buf.str());
    }

    buf.str({});
    write_edit_log(buf, rw.edits);
    dir.write("edits.tsv", buf.str());

    const CurvatureHistogram before = curvature_distribution(g);
    const CurvatureHistogram after = curvature_distribution(rw.graph);
    buf.str({});
    write_histogram_csv(buf, before, &after);
    dir.write("curvature_hist.csv", buf.str());

    const CurvatureDelta delta = curvature_delta(g, rw.graph);
    buf.str({});
    write_delta_csv(buf, delta);
    dir.write("curvature_delta.csv", buf.str());

    std::string spectral = "stage,spectral_gap,spectral_radius,zero_multiplicity,components,method\n";
    spectral += spectral_rows("before", g);
    spectral += spectral_rows("after", rw.graph);
    if (rw.kernel) {
        const SpectralRadius r = spectral_radius(*rw.kernel);
        spectral += fmt::format("kernel,,{:.12g},,,power-iteration\n", r.value);
    }
    dir.write("spectral.csv", spectral);
    dir.manifest("rewire", config);

    std::cout << fmt::format("{}: edges {} -> {}, adds {}, removes {}, skips {}\n", request.config.describe(),
                             g.num_edges(), rw.graph.num_edges(), rw.count(EditOp::add), rw.count(EditOp::remove),
                             rw.count(EditOp::skip));
    std::cout << fmt::format("curvature: {} shared edges, {} improved, {} worsened ({:.1f}%)\n", delta.pairs.size(),
                             delta.improved, delta.worsened, 100.0 * delta.worsened_fraction());
    if (rw.pseudoinverse_fallback) std::cout << "pagerank system was singular; pseudoinverse used\n";
    return exit_ok;
}

int cmd_run(const RunConfig& config) {
    const Dataset ds = read_dataset(config.dataset, config.format);
    const Task task{&ds, config.metric};
    std::vector<RewireMethod> methods{RewireMethod::baseline};
    for (RewireMethod m : config.methods) {
        if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
    }
    for (RewireMethod m : methods) check_compatibility(task, config.model, m);
    config.space.validate();

    const std::vector<int> labels = task.labels();
    const std::vector<Split> splits = holdout_splits(stratified_kfold(labels, config.folds, config.seed));
    SelectOptions options;
    options.seed = config.seed;
    options.jobs = config.jobs;
    options.budget_seconds = config.budget_seconds;

    std::vector<ExperimentReport> reports;
    for (RewireMethod m : methods) {
        RewireConfig rc = config.rewire;
        rc.method = m;
        spdlog::info("{} {} on {}", to_string(config.model), to_string(m), ds.name);
        reports.push_back(model_select(task, config.model, rc, config.space, splits, options));
    }

    OutputDir dir(config.out);
    std::ostringstream buf;
    write_folds_csv(buf, reports);
    dir.write("folds.csv", buf.str());
    buf.str({});
    write_summary_csv(buf, reports);
    const std::string summary = buf.str();
    dir.write("summary.csv", summary);
    buf.str({});
    buf << "dataset,model,method,config,edges_before,edges_after,skipped,mean_curvature_before,mean_curvature_after\n";
    for (const ExperimentReport& r : reports) {
        for (const RewireDiagnostic& d : r.diagnostics) {
            buf << fmt::format("{},{},{},{},{},{},{},{:.9f},{:.9f}\n", r.dataset, to_string(r.model),
                               to_string(r.method), d.config, d.edges_before, d.edges_after, d.skipped,
                               d.mean_curvature_before, d.mean_curvature_after);
        }
    }
    dir.write("diagnostics.csv", buf.str());
    buf.str({});
    write_timing_csv(buf, reports);
    dir.write("timing.csv", buf.str(), /*deterministic=*/false);

    json methods_json = json::array();
    for (RewireMethod m : methods) methods_json.push_back(std::string(to_string(m)));
    const json cfg{{"dataset", config.dataset.string()},
                   {"format", format_name(config.format)},
                   {"model", to_string(config.model)},
                   {"methods", methods_json},
                   {"rewire", rewire_json(config.rewire)},
                   {"space", space_json(config.space)},
                   {"metric", to_string(config.metric)},
                   {"folds", config.folds},
                   {"seed", config.seed},
                   {"budget_seconds", config.budget_seconds ? json(*config.budget_seconds) : json(nullptr)}};
    dir.manifest("run", cfg);

    std::cout << summary;
    const bool any_oor = std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.out_of_resources; });
    if (any_oor) {
        std::string names;
        for (const ExperimentReport& r : reports) {
            if (r.out_of_resources) names += fmt::format("{} {}\n", to_string(r.model), to_string(r.method));
        }
        std::ofstream(config.out / "OOR") << names;
        return exit_budget;
    }
    return exit_ok;
}

namespace {

std::vector<OperatorSpec> parse_operators(const std::vector<std::string>& labels) {
    std::vector<OperatorSpec> out;
    for (const std::string& l : labels) out.push_back(OperatorSpec::parse(l));
    return out;
}

void configure_logging(const std::string& level) {
    auto logger = spdlog::get("rwb");
    if (!logger) logger = spdlog::stderr_color_mt("rwb");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, const char* const* argv) {
    CLI::App app{"Graph rewiring benchmark: dataset statistics, rewiring and training-free model evaluation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML or INI file; command-line flags take precedence");
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

    std::string dataset;
    std::string format = "canonical";
    std::string out;
    std::uint64_t seed = 0;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    double budget = 3600.0;
    const auto common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--dataset", dataset, "Dataset directory")->required();
        sub->add_option("--format", format, "canonical or tudataset")->capture_default_str();
        auto* o = sub->add_option("--out", out, "Output directory");
        if (needs_out) o->required();
    };

    CLI::App* stats = app.add_subcommand("stats", "Print dataset statistics");
    common(stats, false);

    // Rewiring parameters shared by `rewire` (scalars) and `run` (fixed values).
    RewireConfig rc;
    std::string diffusion_operator = rc.diffusion_operator.label();
    std::string alignment = "input_order";
    std::size_t iterations = 0;
    bool no_range_check = false;

    CLI::App* rewire_cmd = app.add_subcommand("rewire", "Rewire one graph and write diagnostics");
    common(rewire_cmd, true);
    std::string method = "baseline";
    std::size_t graph_index = 0;
    rewire_cmd->add_option("--rewire", method, "baseline, heat, pagerank, sdrf, grlef, egp or diffwire")
        ->capture_default_str();
    rewire_cmd->add_option("--t", rc.t, "Heat diffusion time")->capture_default_str();
    rewire_cmd->add_option("--alpha", rc.alpha, "PageRank teleport probability")->capture_default_str();
    rewire_cmd->add_option("--iteration-fraction", rc.iteration_fraction, "SDRF/GRLEF iterations as a fraction of |E|")
        ->capture_default_str();
    rewire_cmd->add_option("--iterations", iterations, "Absolute SDRF/GRLEF iteration count (overrides the fraction)");
    rewire_cmd->add_option("--diffusion-operator", diffusion_operator, "Transition matrix for heat/pagerank")
        ->capture_default_str();
    rewire_cmd->add_option("--sparsify", rc.sparsify_threshold, "Drop kernel entries below this magnitude");
    rewire_cmd->add_option("--graph-index", graph_index, "Member graph of a graph collection")->capture_default_str();
    rewire_cmd->add_flag("--no-range-check", no_range_check, "Allow parameters outside the evaluation grid ranges");

    rewire_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    rewire_cmd->add_option("--budget-seconds", budget, "Wall-clock budget")->capture_default_str();

    CLI::App* run_cmd = app.add_subcommand("run", "Model selection and evaluation");
    common(run_cmd, true);
    std::string model = "sgc";
    std::vector<std::string> methods{"baseline"};
    std::string metric = "accuracy";
    std::string grid = "desk";
    std::size_t folds = 5;
    std::vector<std::size_t> steps;
    std::vector<std::string> operators;
    std::vector<std::size_t> units;
    std::vector<double> scalings;
    std::vector<double> rho_factors;
    std::vector<std::string> pools;
    std::vector<double> lambdas;
    std::vector<double> times;
    std::vector<double> alphas;
    std::vector<double> fractions;
    std::vector<std::string> diffusion_operators;
    run_cmd->add_option("--model", model, "sgc or gesn")->capture_default_str();
    run_cmd->add_option("--rewire", methods, "Rewiring methods, comma separated")->delimiter(',');
    run_cmd->add_option("--metric", metric, "accuracy or auroc")->capture_default_str();
    run_cmd->add_option("--grid", grid, "desk or full")->capture_default_str();
    run_cmd->add_option("--folds", folds, "Number of outer folds")->capture_default_str();
    run_cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
    run_cmd->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
    run_cmd->add_option("--budget-seconds", budget, "Wall-clock budget per method")->capture_default_str();
    run_cmd->add_option("--steps", steps, "SGC propagation steps L")->delimiter(',');
    run_cmd->add_option("--operator", operators, "Message-passing operators, e.g. adjacency-sym+loops")
        ->delimiter(',');
    run_cmd->add_option("--units", units, "Reservoir sizes H")->delimiter(',');
    run_cmd->add_option("--input-scaling", scalings, "Reservoir input scalings")->delimiter(',');
    run_cmd->add_option("--rho-factor", rho_factors, "Recurrent spectral radius times rho(M)")->delimiter(',');
    run_cmd->add_option("--pool", pools, "sum and/or mean")->delimiter(',');
    run_cmd->add_option("--lambda", lambdas, "Ridge regularization values")->delimiter(',');
    run_cmd->add_option("--t", times, "Heat diffusion times")->delimiter(',');
    run_cmd->add_option("--alpha", alphas, "PageRank teleport probabilities")->delimiter(',');
    run_cmd->add_option("--iteration-fraction", fractions, "SDRF/GRLEF iteration fractions")->delimiter(',');
    run_cmd->add_option("--diffusion-operator", diffusion_operators, "Transition matrices for diffusion")
        ->delimiter(',');

    for (CLI::App* sub : {rewire_cmd, run_cmd}) {
        sub->add_option("--temperature", rc.temperature, "SDRF softmax temperature")->capture_default_str();
        sub->add_flag("--removal", rc.removal_enabled, "Enable SDRF edge removal");
        sub->add_option("--removal-threshold", rc.removal_threshold, "SDRF removal curvature threshold")
            ->capture_default_str();
        sub->add_option("--egp-alignment", alignment, "input_order or shuffled")->capture_default_str();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }

    configure_logging(log_level);
    try {
        const DatasetFormat fmt_tag = parse_format(format);
        rc.seed = seed;
        rc.diffusion_operator = OperatorSpec::parse(diffusion_operator);
        if (alignment == "shuffled") {
            rc.egp_alignment = EgpAlignment::shuffled;
        } else if (alignment != "input_order") {
            throw ConfigError(fmt::format("unknown EGP alignment '{}'", alignment));
        }

        if (stats->parsed()) {
            StatsRequest req{dataset, fmt_tag, std::nullopt};
            if (!out.empty()) req.out = out;
            return cmd_stats(req, std::cout);
        }
        if (rewire_cmd->parsed()) {
            RewireRequest req;
            req.dataset = dataset;
            req.format = fmt_tag;
            req.out = out;
            req.config = rc;
            req.config.method = parse_rewire_method(method);
            if (iterations > 0) req.config.iterations = iterations;
            req.config.check_grid_ranges = !no_range_check;
            req.graph_index = graph_index;
            req.budget_seconds = budget;
            return cmd_rewire(req);
        }
        RunConfig cfg;
        cfg.dataset = dataset;
        cfg.format = fmt_tag;
        cfg.out = out;
        cfg.model = parse_model(model);
        for (const std::string& m : methods) cfg.methods.push_back(parse_rewire_method(m));
        cfg.rewire = rc;
        if (grid == "full") {
            cfg.space = SearchSpace::full();
        } else if (grid != "desk") {
            throw ConfigError(fmt::format("unknown grid '{}'", grid));
        }
        SearchSpace& s = cfg.space;
        if (!steps.empty()) s.sgc_steps = steps;
        if (!operators.empty()) {
            s.sgc_operators = parse_operators(operators);
            s.gesn_operators = s.sgc_operators;
        }
        if (!units.empty()) s.reservoir_units = units;
        if (!scalings.empty()) s.input_scalings = scalings;
        if (!rho_factors.empty()) s.rho_factors = rho_factors;
        if (!pools.empty()) {
            s.pools.clear();
            for (const std::string& p : pools) s.pools.push_back(parse_pool_mode(p));
        }
        if (!lambdas.empty()) s.lambdas = lambdas;
        if (!times.empty()) s.heat_times = times;
        if (!alphas.empty()) s.pagerank_alphas = alphas;
        if (!fractions.empty()) s.iteration_fractions = fractions;
        if (!diffusion_operators.empty()) s.diffusion_operators = parse_operators(diffusion_operators);
        cfg.metric = parse_metric(metric);
        cfg.folds = folds;
        cfg.seed = seed;
        cfg.jobs = jobs;
        cfg.budget_seconds = budget;
        return cmd_run(cfg);
    } catch (const InputError& e) {
        spdlog::error("input error: {}", e.what());
        return exit_input;
    } catch (const ConfigError& e) {
        spdlog::error("configuration error: {}", e.what());
        return exit_input;
    } catch (const BudgetExceeded& e) {
        spdlog::error("{}", e.what());
        return exit_budget;
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return exit_invariant;
    }
}

}  // namespace rwb::cli
