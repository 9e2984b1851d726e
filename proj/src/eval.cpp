#include "rwb/eval.hpp"

#include "rwb/curvature.hpp"
#include "rwb/error.hpp"
#include "rwb/rng.hpp"
#include "rwb/spectral.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>
#include <tuple>

namespace rwb {

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 2) throw InputError(fmt::format("k-fold needs k >= 2, got {}", k));
    if (k > labels.size()) throw InputError(fmt::format("cannot split {} items into {} folds", labels.size(), k));
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t deal = 0;
    for (auto& [label, members] : by_class) {
        if (members.size() < k) {
            spdlog::info("class {} has {} members for {} folds; stratification is partial", label, members.size(), k);
        }
        rng.shuffle(members);
        for (std::size_t i : members) folds[deal++ % k].push_back(i);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<Split> holdout_splits(const std::vector<std::vector<std::size_t>>& folds) {
    const std::size_t k = folds.size();
    if (k < 3) throw InputError("holdout splits need at least 3 folds");
    std::vector<Split> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i].test = folds[i];
        out[i].val = folds[(i + 1) % k];
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i || j == (i + 1) % k) continue;
            out[i].train.insert(out[i].train.end(), folds[j].begin(), folds[j].end());
        }
        std::sort(out[i].train.begin(), out[i].train.end());
    }
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
    if (predicted.size() != labels.size()) throw InputError("prediction and label counts differ");
    if (labels.empty()) throw InputError("accuracy of an empty set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InputError("score and label counts differ");
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw InputError(fmt::format("AUROC needs 0/1 labels, got {}", y));
        positives += y == 1;
    }
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) throw InputError("AUROC is undefined with a single class");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double positive_rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based ranks i+1..j
        for (std::size_t m = i; m < j; ++m) {
            if (labels[order[m]] == 1) positive_rank_sum += midrank;
        }
        i = j;
    }
    const auto p = static_cast<double>(positives);
    const auto n = static_cast<double>(negatives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

std::string_view to_string(SignificanceFlag flag) {
    switch (flag) {
        case SignificanceFlag::better: return "better";
        case SignificanceFlag::worse: return "worse";
        default: return "none";
    }
}

namespace {

// Exact two-sided signed-rank p-value; normal approximation above 20 pairs.
double wilcoxon_p(std::span<const double> diffs) {
    std::vector<double> d;
    for (double x : diffs) {
        if (x != 0.0) d.push_back(x);
    }
    const std::size_t n = d.size();
    if (n == 0) return 1.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
    // Doubled midranks are integers.
    std::vector<long> rank2(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
        for (std::size_t m = i; m < j; ++m) rank2[order[m]] = static_cast<long>(i + j + 1);
        i = j;
    }
    long w_plus = 0;
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += rank2[i];
        if (d[i] > 0) w_plus += rank2[i];
    }
    if (n <= 20) {
        // Distribution of the positive rank sum over all 2^n sign patterns.
        std::vector<double> dist(static_cast<std::size_t>(total) + 1, 0.0);
        dist[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (long s = total; s >= rank2[i]; --s) dist[s] += dist[s - rank2[i]];
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        double lower = 0.0;
        double upper = 0.0;
        for (long s = 0; s <= total; ++s) {
            if (s <= w_plus) lower += dist[s];
            if (s >= w_plus) upper += dist[s];
        }
        return std::min(1.0, 2.0 * std::min(lower, upper) / all);
    }
    // In doubled units E[W+] = total / 2 and Var[W+] = sum(rank^2) / 4.
    double var = 0.0;
    for (long r : rank2) var += static_cast<double>(r) * static_cast<double>(r);
    var /= 4.0;
    const double z = (static_cast<double>(w_plus) - total / 2.0) / std::sqrt(var);
    const boost::math::normal_distribution<double> normal;
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(normal, std::abs(z))));
}

}  // namespace

Significance significance(std::span<const double> baseline, std::span<const double> method, double level) {
    if (baseline.size() != method.size()) throw InputError("significance needs paired fold scores");
    const std::size_t n = baseline.size();
    if (n < 2) throw InputError("significance needs at least two folds");
    std::vector<double> diffs(n);
    for (std::size_t i = 0; i < n; ++i) diffs[i] = method[i] - baseline[i];
    Significance s;
    s.mean_difference = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : diffs) ss += (x - s.mean_difference) * (x - s.mean_difference);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
        s.t_statistic = s.mean_difference == 0.0 ? 0.0 : std::copysign(INFINITY, s.mean_difference);
        s.p_ttest = s.mean_difference == 0.0 ? 1.0 : 0.0;
    } else {
        s.t_statistic = s.mean_difference / (sd / std::sqrt(static_cast<double>(n)));
        const boost::math::students_t dist(static_cast<double>(n - 1));
        s.p_ttest = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(s.t_statistic))));
    }
    s.p_wilcoxon = wilcoxon_p(diffs);
    const auto flag_for = [&](double p) {
        if (!(p < level) || s.mean_difference == 0.0) return SignificanceFlag::none;
        return s.mean_difference > 0.0 ? SignificanceFlag::better : SignificanceFlag::worse;
    };
    s.flag = flag_for(s.p_ttest);
    s.wilcoxon_flag = flag_for(s.p_wilcoxon);
    return s;
}

std::string_view to_string(ModelKind m) { return m == ModelKind::sgc ? "sgc" : "gesn"; }

ModelKind parse_model(std::string_view text) {
    if (text == "sgc") return ModelKind::sgc;
    if (text == "gesn") return ModelKind::gesn;
    throw ConfigError(fmt::format("unknown model '{}'", text));
}

std::string_view to_string(Metric m) { return m == Metric::accuracy ? "accuracy" : "auroc"; }

Metric parse_metric(std::string_view text) {
    if (text == "accuracy") return Metric::accuracy;
    if (text == "auroc") return Metric::auroc;
    throw ConfigError(fmt::format("unknown metric '{}'", text));
}

namespace {

std::vector<double> log_space(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        out[i] = lo * std::pow(hi / lo, f);
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<OperatorSpec> adjacency_diffusion_operators() {
    std::vector<OperatorSpec> out;
    for (bool loops : {false, true}) {
        for (Normalization n : {Normalization::sym, Normalization::rw, Normalization::mean}) {
            out.push_back({OperatorKind::adjacency, n, loops});
        }
    }
    return out;
}

}  // namespace

SearchSpace SearchSpace::full() {
    SearchSpace s;
    for (std::size_t l = 1; l <= 15; ++l) s.sgc_steps.push_back(l);
    s.sgc_operators = OperatorSpec::all();
    s.gesn_operators = {OperatorSpec{}};
    for (std::size_t h = 16; h <= 4096; h *= 2) s.reservoir_units.push_back(h);
    for (int i = 0; i <= 10; ++i) s.input_scalings.push_back(i / 10.0);
    s.rho_factors = log_space(0.1, 30.0, 8);
    s.pools = {PoolMode::sum, PoolMode::mean};
    s.lambdas = log_space(1e-5, 1e3, 9);
    s.heat_times = {0.1, 0.5, 1.0, 2.0, 5.0};
    s.pagerank_alphas = {0.01, 0.05, 0.1, 0.25, 0.5, 0.9, 0.99};
    s.iteration_fractions = {0.05, 0.1, 0.2};
    s.diffusion_operators = adjacency_diffusion_operators();
    return s;
}

SearchSpace SearchSpace::desk() {
    SearchSpace s = full();
    s.sgc_operators = {{OperatorKind::adjacency, Normalization::sym, true},
                       {OperatorKind::adjacency, Normalization::rw, true},
                       {OperatorKind::adjacency, Normalization::mean, true},
                       {OperatorKind::adjacency, Normalization::sym, false}};
    s.reservoir_units = {256, 1024};
    s.input_scalings = {0.1, 0.5, 1.0};
    const std::vector<double> rho = log_space(0.1, 30.0, 8);
    s.rho_factors = {rho[2], rho[3], rho[4]};
    s.diffusion_operators = {{OperatorKind::adjacency, Normalization::sym, false},
                             {OperatorKind::adjacency, Normalization::rw, false}};
    return s;
}

void SearchSpace::validate() const {
    const auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    const auto within = [](double x, double lo, double hi) {
        return x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12);
    };
    require(!sgc_steps.empty() && !sgc_operators.empty() && !gesn_operators.empty(), "empty model grid");
    require(!reservoir_units.empty() && !input_scalings.empty() && !rho_factors.empty() && !pools.empty(),
            "empty reservoir grid");
    require(!lambdas.empty(), "empty ridge grid");
    for (std::size_t l : sgc_steps) require(l >= 1 && l <= 15, fmt::format("SGC steps {} outside [1, 15]", l));
    for (std::size_t h : reservoir_units) {
        require(h >= 16 && h <= 4096, fmt::format("reservoir size {} outside [16, 4096]", h));
    }
    for (double x : input_scalings) require(within(x, 0.0, 1.0), fmt::format("input scaling {} outside [0, 1]", x));
    for (double x : rho_factors) require(within(x, 0.1, 30.0), fmt::format("rho factor {} outside [0.1, 30]", x));
    for (double x : lambdas) require(within(x, 1e-5, 1e3), fmt::format("lambda {} outside [1e-5, 1e3]", x));
    for (double x : heat_times) require(within(x, 0.1, 5.0), fmt::format("heat time {} outside [0.1, 5]", x));
    for (double x : pagerank_alphas) require(within(x, 0.01, 0.99), fmt::format("alpha {} outside [0.01, 0.99]", x));
    for (double x : iteration_fractions) {
        require(x > 0.0 && within(x, 0.0, 0.2), fmt::format("iteration fraction {} outside (0, 0.2]", x));
    }
}

std::vector<RewireConfig> SearchSpace::rewire_grid(const RewireConfig& base) const {
    std::vector<RewireConfig> out;
    switch (base.method) {
        case RewireMethod::heat:
        case RewireMethod::pagerank: {
            const auto& values = base.method == RewireMethod::heat ? heat_times : pagerank_alphas;
            for (const OperatorSpec& op : diffusion_operators) {
                for (double v : values) {
                    RewireConfig c = base;
                    c.diffusion_operator = op;
                    (base.method == RewireMethod::heat ? c.t : c.alpha) = v;
                    out.push_back(c);
                }
            }
            break;
        }
        case RewireMethod::sdrf:
        case RewireMethod::grlef:
            if (base.iterations) {
                out.push_back(base);
            } else {
                for (double f : iteration_fractions) {
                    RewireConfig c = base;
                    c.iteration_fraction = f;
                    out.push_back(c);
                }
            }
            break;
        default: out.push_back(base);
    }
    if (out.empty()) throw ConfigError(fmt::format("empty grid for {}", to_string(base.method)));
    return out;
}

class ReportStage {
public:
    static double score(const SealedLabels& sealed, const Prediction& p, Metric metric);
};

namespace {

double metric_value(const Prediction& p, std::span<const int> labels, Metric metric) {
    if (metric == Metric::accuracy) return accuracy(p.classes, labels);
    std::vector<double> margin(static_cast<std::size_t>(p.scores.rows()));
    for (Eigen::Index i = 0; i < p.scores.rows(); ++i) margin[i] = p.scores(i, 1) - p.scores(i, 0);
    return auroc(margin, labels);
}

}  // namespace

double ReportStage::score(const SealedLabels& sealed, const Prediction& p, Metric metric) {
    return metric_value(p, sealed.labels_, metric);
}

std::pair<std::vector<int>, SealedLabels> seal_test_labels(std::span<const int> labels, const Split& split) {
    std::vector<int> visible(labels.begin(), labels.end());
    std::vector<int> hidden;
    hidden.reserve(split.test.size());
    for (std::size_t i : split.test) {
        if (i >= labels.size()) throw InputError(fmt::format("test index {} out of range", i));
        hidden.push_back(labels[i]);
        visible[i] = -1;
    }
    return {std::move(visible), SealedLabels(std::move(hidden))};
}

std::vector<int> Task::labels() const {
    if (kind() == TaskKind::graph) return dataset->graph_labels;
    const auto& l = dataset->graph().labels();
    if (!l) throw InputError(fmt::format("dataset '{}' has no node labels", dataset->name));
    return *l;
}

int Task::num_classes() const { return dataset->num_classes(); }

void check_compatibility(const Task& task, ModelKind model, RewireMethod method) {
    if (task.kind() == TaskKind::graph && model == ModelKind::sgc) {
        throw ConfigError("SGC is defined for node-level tasks only");
    }
    if (task.kind() == TaskKind::graph && is_diffusion(method)) {
        throw ConfigError(fmt::format("{} diffusion applies to node-level tasks only", to_string(method)));
    }
    if (task.metric == Metric::auroc && task.num_classes() != 2) {
        throw ConfigError(fmt::format("AUROC needs a binary task, dataset has {} classes", task.num_classes()));
    }
}

std::vector<double> ExperimentReport::test_scores() const {
    std::vector<double> out;
    for (const FoldResult& f : folds) out.push_back(f.test_score);
    return out;
}

namespace {

// Runs body(i) for i in [0, count) on up to `jobs` threads. Exceptions are
// rethrown after all workers finish, lowest index first; a budget overrun
// stops further work.
template <typename F>
void parallel_for(std::size_t count, std::size_t jobs, F&& body) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || stop.load()) return;
            try {
                body(i);
            } catch (const BudgetExceeded&) {
                errors[i] = std::current_exception();
                stop.store(true);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, count));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

bool edge_set_method(RewireMethod m) {
    return m == RewireMethod::baseline || m == RewireMethod::sdrf || m == RewireMethod::grlef;
}

double mean_curvature(std::span<const Graph> graphs) {
    double total = 0.0;
    std::size_t count = 0;
    for (const Graph& g : graphs) {
        for (const EdgeCurvature& c : edge_curvatures(g)) total += c.value;
        count += g.num_edges();
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

// A propagation setting: one rewiring plus, for edge-set rewirings, one operator.
struct Unit {
    std::size_t rewire_index = 0;
    std::optional<OperatorSpec> op;
    std::string label;
};

struct Choice {
    bool set = false;
    double val = 0.0;
    std::size_t unit = 0;
    std::size_t rank = 0;
    std::string description;
    Prediction test;

    bool beats(const Choice& other) const {
        if (!other.set) return true;
        if (val != other.val) return val > other.val;
        return std::tie(unit, rank) < std::tie(other.unit, other.rank);
    }
};

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

std::vector<int> take(std::span<const int> v, std::span<const std::size_t> idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

}  // namespace

ExperimentReport model_select(const Task& task, ModelKind model, const RewireConfig& rewiring,
                              const SearchSpace& space, std::span<const Split> splits,
                              const SelectOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    if (task.dataset == nullptr || task.dataset->graphs.empty()) throw InputError("task has no data");
    check_compatibility(task, model, rewiring.method);
    space.validate();
    if (splits.empty()) throw InputError("model selection needs at least one split");

    ExperimentReport report;
    report.dataset = task.dataset->name;
    report.model = model;
    report.method = rewiring.method;
    report.metric = task.metric;

    const std::vector<int> labels = task.labels();
    const int classes = task.num_classes();
    const std::vector<Graph>& graphs = task.dataset->graphs;
    const bool node_task = task.kind() == TaskKind::node;
    const Deadline deadline = options.budget_seconds ? Deadline::after(*options.budget_seconds) : Deadline{};
    const std::size_t jobs = std::max<std::size_t>(1, options.jobs);

    std::vector<std::vector<int>> visible(splits.size());
    std::vector<SealedLabels> sealed(splits.size());
    for (std::size_t f = 0; f < splits.size(); ++f) {
        auto [v, s] = seal_test_labels(labels, splits[f]);
        visible[f] = std::move(v);
        sealed[f] = std::move(s);
    }

    const std::vector<RewireConfig> configs = space.rewire_grid(rewiring);
    std::vector<Eigen::MatrixXd> inputs;
    for (const Graph& g : graphs) inputs.push_back(input_features(g));

    try {
        // Edge-set rewirings are computed once and shared by every operator.
        std::vector<std::vector<Graph>> rewired(configs.size());
        if (edge_set_method(rewiring.method)) {
            report.diagnostics.resize(configs.size());
            parallel_for(configs.size(), jobs, [&](std::size_t r) {
                RewireDiagnostic& diag = report.diagnostics[r];
                diag.config = configs[r].describe();
                for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
                    RewireConfig c = configs[r];
                    if (!node_task) c.seed = derive_seed(c.seed, gi);
                    RewiredGraph out = rewire(graphs[gi], c, task.kind(), deadline);
                    diag.edges_before += graphs[gi].num_edges();
                    diag.edges_after += out.graph.num_edges();
                    diag.skipped += out.count(EditOp::skip);
                    rewired[r].push_back(std::move(out.graph));
                }
                if (rewiring.method != RewireMethod::baseline) {
                    diag.mean_curvature_before = mean_curvature(graphs);
                    diag.mean_curvature_after = mean_curvature(rewired[r]);
                }
            });
            if (rewiring.method == RewireMethod::baseline) report.diagnostics.clear();
        }

        const std::vector<OperatorSpec>& operators =
            model == ModelKind::sgc ? space.sgc_operators : space.gesn_operators;
        std::vector<Unit> units;
        for (std::size_t r = 0; r < configs.size(); ++r) {
            if (edge_set_method(rewiring.method)) {
                for (const OperatorSpec& op : operators) {
                    units.push_back({r, op, fmt::format("{} | M={}", configs[r].describe(), op.label())});
                }
            } else {
                units.push_back({r, std::nullopt, configs[r].describe()});
            }
        }

        // Reservoir draws depend only on the size, so every scaling shares one.
        std::map<std::size_t, ReservoirDraw> draws;
        if (model == ModelKind::gesn) {
            for (std::size_t h : space.reservoir_units) {
                draws.emplace(h, draw_reservoir(static_cast<std::size_t>(inputs.front().cols()), h,
                                                derive_seed(options.seed, h)));
            }
        }

        std::vector<Choice> best(splits.size());
        std::mutex merge_mutex;
        std::atomic<std::size_t> candidates{0};

        parallel_for(units.size(), jobs, [&](std::size_t u) {
            deadline.check();
            const Unit& unit = units[u];
            std::vector<MessageMatrix> matrices;
            for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
                if (unit.op) {
                    matrices.emplace_back(shift_operator(rewired[unit.rewire_index][gi], *unit.op).matrix);
                } else {
                    RewireConfig c = configs[unit.rewire_index];
                    if (!node_task) c.seed = derive_seed(c.seed, gi);
                    RewiredGraph out = rewire(graphs[gi], c, task.kind(), deadline);
                    matrices.push_back(std::move(*out.kernel));
                }
            }

            std::vector<Choice> local(splits.size());
            std::size_t rank = 0;
            const auto evaluate = [&](const Eigen::MatrixXd& embeddings, const std::string& description) {
                for (std::size_t f = 0; f < splits.size(); ++f) {
                    const Split& sp = splits[f];
                    const RidgePath path(take_rows(embeddings, sp.train), take(visible[f], sp.train), classes);
                    const Eigen::MatrixXd val_rows = take_rows(embeddings, sp.val);
                    const std::vector<int> val_labels = take(visible[f], sp.val);
                    for (std::size_t li = 0; li < space.lambdas.size(); ++li) {
                        const Readout readout = path.solve(space.lambdas[li]);
                        Choice c;
                        c.set = true;
                        c.val = metric_value(predict(val_rows, readout), val_labels, task.metric);
                        c.unit = u;
                        c.rank = rank + li;
                        if (c.beats(local[f])) {
                            c.description = fmt::format("{} | {} | lambda={:g}", unit.label, description,
                                                        space.lambdas[li]);
                            c.test = predict(take_rows(embeddings, sp.test), readout);
                            local[f] = std::move(c);
                        }
                    }
                }
                rank += space.lambdas.size();
                candidates += space.lambdas.size();
            };

            if (model == ModelKind::sgc) {
                const std::size_t max_steps = *std::max_element(space.sgc_steps.begin(), space.sgc_steps.end());
                Eigen::MatrixXd h = inputs.front();
                for (std::size_t l = 1; l <= max_steps; ++l) {
                    deadline.check();
                    h = matrices.front().apply(h);
                    if (std::find(space.sgc_steps.begin(), space.sgc_steps.end(), l) == space.sgc_steps.end()) {
                        continue;
                    }
                    evaluate(h, fmt::format("L={}", l));
                }
            } else {
                double rho_m = 0.0;
                for (const MessageMatrix& m : matrices) rho_m = std::max(rho_m, spectral_radius(m).value);
                if (rho_m == 0.0) rho_m = 1.0;
                for (std::size_t h : space.reservoir_units) {
                    for (double scaling : space.input_scalings) {
                        for (double factor : space.rho_factors) {
                            deadline.check();
                            ReservoirConfig rc;
                            rc.units = h;
                            rc.input_scaling = scaling;
                            rc.target_rho = factor / rho_m;
                            rc.seed = derive_seed(options.seed, h);
                            const ReservoirParams params = scale_reservoir(draws.at(h), rc);
                            const std::string desc = fmt::format("H={} scale={:g} rho={:g}/rho(M)", h, scaling, factor);
                            if (node_task) {
                                evaluate(gesn_embed(matrices.front(), inputs.front(), params), desc);
                                continue;
                            }
                            std::vector<Eigen::MatrixXd> pooled(space.pools.size(),
                                                                Eigen::MatrixXd(static_cast<Eigen::Index>(graphs.size()),
                                                                                static_cast<Eigen::Index>(h)));
                            for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
                                const Eigen::MatrixXd states = gesn_embed(matrices[gi], inputs[gi], params);
                                for (std::size_t p = 0; p < space.pools.size(); ++p) {
                                    pooled[p].row(static_cast<Eigen::Index>(gi)) = pool(states, space.pools[p]);
                                }
                            }
                            for (std::size_t p = 0; p < space.pools.size(); ++p) {
                                evaluate(pooled[p], fmt::format("{} pool={}", desc, to_string(space.pools[p])));
                            }
                        }
                    }
                }
            }

            const std::lock_guard lock(merge_mutex);
            for (std::size_t f = 0; f < splits.size(); ++f) {
                if (local[f].set && local[f].beats(best[f])) best[f] = std::move(local[f]);
            }
        });

        report.candidates = candidates.load();
        for (std::size_t f = 0; f < splits.size(); ++f) {
            if (!best[f].set) throw InvariantError("no candidate was evaluated");
            FoldResult r;
            r.fold = f;
            r.val_score = best[f].val;
            r.test_score = ReportStage::score(sealed[f], best[f].test, task.metric);
            r.selected = best[f].description;
            report.folds.push_back(std::move(r));
        }
        const std::vector<double> scores = report.test_scores();
        report.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
        double ss = 0.0;
        for (double s : scores) ss += (s - report.mean) * (s - report.mean);
        report.std = std::sqrt(ss / static_cast<double>(scores.size()));
    } catch (const BudgetExceeded& e) {
        spdlog::warn("{} {} on {}: {}; marked OOR", to_string(model), to_string(rewiring.method), report.dataset,
                     e.what());
        report.out_of_resources = true;
        report.folds.clear();
        report.mean = 0.0;
        report.std = 0.0;
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

void write_folds_csv(std::ostream& out, std::span<const ExperimentReport> reports) {
    out << "dataset,model,method,fold,val_score,test_score,selected\n";
    for (const ExperimentReport& r : reports) {
        for (const FoldResult& f : r.folds) {
            out << fmt::format("{},{},{},{},{:.6f},{:.6f},{}\n", csv_field(r.dataset), to_string(r.model),
                               to_string(r.method), f.fold, f.val_score, f.test_score, csv_field(f.selected));
        }
    }
}

void write_summary_csv(std::ostream& out, std::span<const ExperimentReport> reports) {
    out << "dataset,model,method,metric,status,folds,mean,std,table,p_ttest,p_wilcoxon,flag,wilcoxon_flag\n";
    for (const ExperimentReport& r : reports) {
        std::string p_t;
        std::string p_w;
        std::string flag = "none";
        std::string wflag = "none";
        const auto base = std::find_if(reports.begin(), reports.end(), [&](const ExperimentReport& b) {
            return b.method == RewireMethod::baseline && b.model == r.model && b.dataset == r.dataset;
        });
        if (r.method != RewireMethod::baseline && base != reports.end() && !r.out_of_resources &&
            !base->out_of_resources && base->folds.size() == r.folds.size() && r.folds.size() >= 2) {
            const Significance s = significance(base->test_scores(), r.test_scores());
            p_t = fmt::format("{:.6f}", s.p_ttest);
            p_w = fmt::format("{:.6f}", s.p_wilcoxon);
            flag = to_string(s.flag);
            wflag = to_string(s.wilcoxon_flag);
        }
        const std::string marker = flag == "better" ? " (+)" : flag == "worse" ? " (-)" : "";
        const std::string table =
            r.out_of_resources ? "OOR" : fmt::format("{:.2f} ± {:.2f}{}", 100.0 * r.mean, 100.0 * r.std, marker);
        out << fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{},{},{},{},{}\n", csv_field(r.dataset),
                           to_string(r.model), to_string(r.method), to_string(r.metric),
                           r.out_of_resources ? "OOR" : "ok", r.folds.size(), r.mean, r.std, table, p_t, p_w, flag,
                           wflag);
    }
}

void write_timing_csv(std::ostream& out, std::span<const ExperimentReport> reports) {
    out << "dataset,model,method,seconds,candidates\n";
    for (const ExperimentReport& r : reports) {
        out << fmt::format("{},{},{},{:.3f},{}\n", csv_field(r.dataset), to_string(r.model), to_string(r.method),
                           r.seconds, r.candidates);
    }
}

}  // namespace rwb
