#pragma once

#include "rwb/io.hpp"
#include "rwb/models.hpp"
#include "rwb/rewiring.hpp"
#include "rwb/shift_operator.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rwb {

// k disjoint folds covering 0..n-1. Each class is shuffled and dealt round
// robin, continuing the deal across classes, so every fold is within one item
// of its share of each class. Throws InputError when k exceeds the population
// or k < 2.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, std::size_t k,
                                                       std::uint64_t seed);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

// Outer fold i tests on fold i, validates on fold i+1 (mod k) and trains on
// the rest; with k = 5 this is 60:20:20.
std::vector<Split> holdout_splits(const std::vector<std::vector<std::size_t>>& folds);

double accuracy(std::span<const int> predicted, std::span<const int> labels);

// Mann-Whitney AUROC with midranks for ties. labels are 0/1; throws InputError
// unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

enum class SignificanceFlag { none, better, worse };
std::string_view to_string(SignificanceFlag flag);

struct Significance {
    double mean_difference = 0.0;  // method - baseline
    double t_statistic = 0.0;
    double p_ttest = 1.0;
    double p_wilcoxon = 1.0;
    SignificanceFlag flag = SignificanceFlag::none;           // from the t-test
    SignificanceFlag wilcoxon_flag = SignificanceFlag::none;  // from the signed-rank test
};

// Paired two-sided t-test and exact Wilcoxon signed-rank test over fold
// scores. Throws InputError for fewer than 2 folds or unequal lengths.
Significance significance(std::span<const double> baseline, std::span<const double> method,
                          double level = 0.05);

enum class ModelKind { sgc, gesn };
std::string_view to_string(ModelKind m);
ModelKind parse_model(std::string_view text);

enum class Metric { accuracy, auroc };
std::string_view to_string(Metric m);
Metric parse_metric(std::string_view text);

// Hyperparameter grids.
struct SearchSpace {
    std::vector<std::size_t> sgc_steps;
    std::vector<OperatorSpec> sgc_operators;
    std::vector<OperatorSpec> gesn_operators;
    std::vector<std::size_t> reservoir_units;
    std::vector<double> input_scalings;
    // Target spectral radius of the recurrent matrix is factor / rho(M).
    std::vector<double> rho_factors;
    std::vector<PoolMode> pools;
    std::vector<double> lambdas;
    std::vector<double> heat_times;
    std::vector<double> pagerank_alphas;
    std::vector<double> iteration_fractions;
    // Transition matrices offered to heat and PageRank diffusion.
    std::vector<OperatorSpec> diffusion_operators;

    static SearchSpace full();
    // Coarser reservoir grid for single-machine runs.
    static SearchSpace desk();

    // Throws ConfigError for empty grids or values outside the allowed ranges.
    void validate() const;

    // Rewiring configurations to try for one method. Fields of `base` not on
    // a grid (seed, temperature, alignment, ...) are copied through.
    std::vector<RewireConfig> rewire_grid(const RewireConfig& base) const;
};

// Labels held back from model selection. Only the report stage can read them.
class SealedLabels {
public:
    SealedLabels() = default;
    explicit SealedLabels(std::vector<int> labels) : labels_(std::move(labels)) {}
    std::size_t size() const { return labels_.size(); }

private:
    friend class ReportStage;
    std::vector<int> labels_;
};

// Copy of `labels` with every test index set to -1, plus the sealed test labels
// in split.test order.
std::pair<std::vector<int>, SealedLabels> seal_test_labels(std::span<const int> labels, const Split& split);

// The targets of a node- or graph-level task.
struct Task {
    const Dataset* dataset = nullptr;
    Metric metric = Metric::accuracy;

    TaskKind kind() const { return dataset->task; }
    // One label per sample: per node for node tasks, per graph for graph tasks.
    std::vector<int> labels() const;
    int num_classes() const;
};

// Throws ConfigError for combinations the protocol excludes: SGC on graph
// tasks, diffusion rewiring on graph tasks, AUROC on non-binary tasks.
void check_compatibility(const Task& task, ModelKind model, RewireMethod method);

struct SelectOptions {
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::optional<double> budget_seconds;
};

struct FoldResult {
    std::size_t fold = 0;
    double val_score = 0.0;
    double test_score = 0.0;
    std::string selected;  // description of the winning configuration
};

struct RewireDiagnostic {
    std::string config;
    std::size_t edges_before = 0;
    std::size_t edges_after = 0;
    std::size_t skipped = 0;
    double mean_curvature_before = 0.0;
    double mean_curvature_after = 0.0;
};

struct ExperimentReport {
    std::string dataset;
    ModelKind model = ModelKind::sgc;
    RewireMethod method = RewireMethod::baseline;
    Metric metric = Metric::accuracy;
    bool out_of_resources = false;
    std::vector<FoldResult> folds;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation over folds
    std::size_t candidates = 0;
    double seconds = 0.0;  // wall clock; excluded from deterministic outputs
    std::vector<RewireDiagnostic> diagnostics;

    std::vector<double> test_scores() const;
};

// Selects rewiring and model hyperparameters jointly on each split's
// validation set and scores the winner on its test set. Candidates are
// evaluated in parallel; ties on validation score go to the earliest
// candidate in grid order. A budget overrun yields out_of_resources = true.
ExperimentReport model_select(const Task& task, ModelKind model, const RewireConfig& rewiring,
                              const SearchSpace& space, std::span<const Split> splits,
                              const SelectOptions& options = {});

// folds.csv: dataset,model,method,fold,val_score,test_score,selected
void write_folds_csv(std::ostream& out, std::span<const ExperimentReport> reports);

// summary.csv: one row per report with mean, std, status and significance
// against the baseline report of the same model (when present).
void write_summary_csv(std::ostream& out, std::span<const ExperimentReport> reports);

// timing.csv: dataset,model,method,seconds,candidates
void write_timing_csv(std::ostream& out, std::span<const ExperimentReport> reports);

}  // namespace rwb
