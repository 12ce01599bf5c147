#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wfbench/forest.hpp"
#include "wfbench/trace.hpp"

namespace wfbench {

using ConfusionMatrix = std::vector<std::vector<std::uint64_t>>;  // [true][predicted]

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

// Per-class F1 = 2PR/(P+R) with 0/0 defined as 0; classes with no samples
// and no predictions are excluded; macro = unweighted mean.
double macro_f1(const ConfusionMatrix& confusion);
std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& confusion);

struct OverheadStats {
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0;
};

struct EvaluationReport {
    std::vector<std::string> class_list;
    ConfusionMatrix confusion;               // summed over test folds
    std::vector<ClassMetrics> per_class;     // from the summed confusion
    double macro_f1_mean = 0.0;              // mean of per-fold macro F1
    double macro_f1_std = 0.0;               // population std across folds
    std::vector<double> fold_scores;
    std::vector<double> importances;         // averaged over fold forests
    std::optional<OverheadStats> overhead;
};

// Deterministic stratified fold assignment: per class, samples are
// shuffled by mix_seed(seed, class index) and dealt round-robin. Returns
// the fold index of every sample. Throws when a class has fewer samples
// than folds.
std::vector<int> stratified_folds(const std::vector<std::string>& labels, int folds, std::uint64_t seed);

struct CrossValidateOptions {
    int folds = 10;
    ForestParams forest;
    FeatureOptions features;
    // Optional trace transform applied to every observation (train and
    // test alike) before featurization; the adversary trains on defended
    // traffic. Receives the dataset index for per-observation seeding.
    std::function<Observation(const Observation&, std::size_t)> defense;
};

EvaluationReport cross_validate(const Dataset& ds, const CrossValidateOptions& options);

// Same protocol over a pre-featurized matrix.
EvaluationReport cross_validate_matrix(const FeatureMatrix& matrix, int folds, const ForestParams& params);

// Per-class metrics CSV: label,precision,recall,f1,support.
void write_report_csv(const EvaluationReport& report, std::ostream& out);

}  // namespace wfbench
