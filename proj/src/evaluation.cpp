#include "wfbench/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "wfbench/error.hpp"
#include "wfbench/rng.hpp"

namespace wfbench {

namespace {

void check_square(const ConfusionMatrix& confusion) {
    for (const auto& row : confusion)
        if (row.size() != confusion.size()) throw ValidationError("confusion matrix must be square");
}

}  // namespace

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& confusion) {
    check_square(confusion);
    const std::size_t k = confusion.size();
    std::vector<ClassMetrics> metrics(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::uint64_t tp = confusion[c][c], row_sum = 0, col_sum = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row_sum += confusion[c][j];
            col_sum += confusion[j][c];
        }
        auto& m = metrics[c];
        m.support = row_sum;
        m.precision = col_sum > 0 ? static_cast<double>(tp) / static_cast<double>(col_sum) : 0.0;
        m.recall = row_sum > 0 ? static_cast<double>(tp) / static_cast<double>(row_sum) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    }
    return metrics;
}

double macro_f1(const ConfusionMatrix& confusion) {
    check_square(confusion);
    const auto metrics = per_class_metrics(confusion);
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < confusion.size(); ++c) {
        std::uint64_t col_sum = 0;
        for (std::size_t j = 0; j < confusion.size(); ++j) col_sum += confusion[j][c];
        if (metrics[c].support == 0 && col_sum == 0) continue;  // absent class
        sum += metrics[c].f1;
        ++counted;
    }
    return counted > 0 ? sum / static_cast<double>(counted) : 0.0;
}

std::vector<int> stratified_folds(const std::vector<std::string>& labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw ValidationError("folds must be >= 2");
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<int> fold_of(labels.size(), -1);
    std::size_t class_index = 0;
    for (auto& [label, indices] : by_class) {
        if (indices.size() < static_cast<std::size_t>(folds))
            throw ValidationError("class '" + label + "' has " + std::to_string(indices.size()) +
                                  " samples; need >= " + std::to_string(folds) + " for " +
                                  std::to_string(folds) + "-fold CV");
        Rng rng(mix_seed(seed, class_index++));
        for (std::size_t i = indices.size(); i > 1; --i)
            std::swap(indices[i - 1], indices[rng.bounded(i)]);
        for (std::size_t j = 0; j < indices.size(); ++j)
            fold_of[indices[j]] = static_cast<int>(j % static_cast<std::size_t>(folds));
    }
    return fold_of;
}

EvaluationReport cross_validate_matrix(const FeatureMatrix& matrix, int folds, const ForestParams& params) {
    const auto fold_of = stratified_folds(matrix.labels, folds, params.seed);

    std::vector<std::string> class_list = matrix.labels;
    std::sort(class_list.begin(), class_list.end());
    class_list.erase(std::unique(class_list.begin(), class_list.end()), class_list.end());
    const std::size_t k = class_list.size();
    auto class_of = [&](const std::string& label) {
        return static_cast<std::size_t>(
            std::lower_bound(class_list.begin(), class_list.end(), label) - class_list.begin());
    };

    EvaluationReport report;
    report.class_list = class_list;
    report.confusion.assign(k, std::vector<std::uint64_t>(k, 0));
    report.importances.assign(matrix.rows.empty() ? 0 : matrix.rows.front().size(), 0.0);

    for (int fold = 0; fold < folds; ++fold) {
        FeatureMatrix train_m;
        train_m.schema_version = matrix.schema_version;
        std::vector<std::size_t> test_rows;
        for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
            if (fold_of[i] == fold) {
                test_rows.push_back(i);
            } else {
                train_m.labels.push_back(matrix.labels[i]);
                train_m.rows.push_back(matrix.rows[i]);
            }
        }
        ForestParams fold_params = params;
        fold_params.seed = mix_seed(params.seed, 0x0F0F0F0FULL + static_cast<std::uint64_t>(fold));
        const Forest forest = train(train_m, fold_params);

        ConfusionMatrix fold_confusion(k, std::vector<std::uint64_t>(k, 0));
        for (std::size_t i : test_rows) {
            const auto pred = predict_row(forest, matrix.rows[i]);
            fold_confusion[class_of(matrix.labels[i])][class_of(pred.label)]++;
        }
        report.fold_scores.push_back(macro_f1(fold_confusion));
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < k; ++j) report.confusion[c][j] += fold_confusion[c][j];
        for (std::size_t j = 0; j < report.importances.size(); ++j)
            report.importances[j] += forest.importance[j];
    }

    const double total_importance =
        std::accumulate(report.importances.begin(), report.importances.end(), 0.0);
    if (total_importance > 0.0)
        for (auto& v : report.importances) v /= total_importance;

    report.per_class = per_class_metrics(report.confusion);
    report.macro_f1_mean =
        std::accumulate(report.fold_scores.begin(), report.fold_scores.end(), 0.0) /
        static_cast<double>(report.fold_scores.size());
    double var = 0.0;
    for (double s : report.fold_scores) var += (s - report.macro_f1_mean) * (s - report.macro_f1_mean);
    report.macro_f1_std = std::sqrt(var / static_cast<double>(report.fold_scores.size()));
    return report;
}

EvaluationReport cross_validate(const Dataset& ds, const CrossValidateOptions& options) {
    FeatureMatrix matrix;
    if (options.defense) {
        Dataset defended;
        defended.class_list = ds.class_list;
        defended.observations.reserve(ds.observations.size());
        for (std::size_t i = 0; i < ds.observations.size(); ++i)
            defended.observations.push_back(options.defense(ds.observations[i], i));
        matrix = featurize_dataset(defended, options.features);
    } else {
        matrix = featurize_dataset(ds, options.features);
    }
    return cross_validate_matrix(matrix, options.folds, options.forest);
}

void write_report_csv(const EvaluationReport& report, std::ostream& out) {
    out << "label,precision,recall,f1,support\n";
    char buf[128];
    for (std::size_t c = 0; c < report.class_list.size(); ++c) {
        const auto& m = report.per_class[c];
        const int len = std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%llu\n", m.precision, m.recall,
                                      m.f1, static_cast<unsigned long long>(m.support));
        out << report.class_list[c];
        out.write(buf, len);
    }
}

}  // namespace wfbench
