#include "wfbench/forest.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <thread>

#include "wfbench/error.hpp"
#include "wfbench/rng.hpp"

namespace wfbench {

namespace {

struct TrainContext {
    const FeatureMatrix* matrix;
    std::vector<int> labels;  // class index per row
    std::size_t n_classes;
    std::size_t n_features;
    int max_features;
    int min_samples_leaf;
    int max_depth;
};

double gini(const std::vector<std::uint32_t>& counts, std::size_t total) {
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (std::uint32_t c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

int majority_class(const std::vector<std::uint32_t>& counts) {
    int best = 0;
    for (std::size_t k = 1; k < counts.size(); ++k)
        if (counts[k] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    return best;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

struct TreeBuilder {
    const TrainContext& ctx;
    Rng rng;
    Tree tree;
    std::vector<double> importance;  // raw weighted impurity decrease
    std::vector<std::size_t> sample;  // bootstrap row indices, partitioned in place

    // scratch for split search
    std::vector<std::pair<double, int>> sorted;
    std::vector<std::size_t> feature_pool;

    TreeBuilder(const TrainContext& c, std::uint64_t seed)
        : ctx(c), rng(seed), importance(c.n_features, 0.0) {
        feature_pool.resize(ctx.n_features);
        std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
    }

    void bootstrap() {
        const std::size_t n = ctx.matrix->rows.size();
        sample.resize(n);
        for (auto& s : sample) s = rng.bounded(n);
    }

    std::vector<std::uint32_t> count_classes(std::size_t begin, std::size_t end) const {
        std::vector<std::uint32_t> counts(ctx.n_classes, 0);
        for (std::size_t i = begin; i < end; ++i)
            counts[static_cast<std::size_t>(ctx.labels[sample[i]])]++;
        return counts;
    }

    // Random max_features-sized feature subset, scanned in ascending
    // index order so equal gains resolve to the lowest feature.
    void draw_features(std::vector<std::size_t>& out) {
        const auto k = static_cast<std::size_t>(ctx.max_features);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + rng.bounded(ctx.n_features - i);
            std::swap(feature_pool[i], feature_pool[j]);
        }
        out.assign(feature_pool.begin(), feature_pool.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(out.begin(), out.end());
    }

    SplitChoice best_split(std::size_t begin, std::size_t end, const std::vector<std::uint32_t>& counts,
                           double node_gini) {
        const std::size_t n = end - begin;
        SplitChoice best;
        std::vector<std::size_t> features;
        draw_features(features);
        std::vector<std::uint32_t> left_counts(ctx.n_classes);

        for (std::size_t feat : features) {
            sorted.clear();
            for (std::size_t i = begin; i < end; ++i)
                sorted.emplace_back((*ctx.matrix).rows[sample[i]][feat], ctx.labels[sample[i]]);
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (sorted.front().first == sorted.back().first) continue;

            std::fill(left_counts.begin(), left_counts.end(), 0);
            std::size_t n_left = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_counts[static_cast<std::size_t>(sorted[i].second)]++;
                ++n_left;
                if (sorted[i].first == sorted[i + 1].first) continue;  // split only between distinct values
                const std::size_t n_right = n - n_left;
                if (n_left < static_cast<std::size_t>(ctx.min_samples_leaf) ||
                    n_right < static_cast<std::size_t>(ctx.min_samples_leaf))
                    continue;
                double right_gini;
                {
                    double sum_sq = 0.0;
                    for (std::size_t k = 0; k < ctx.n_classes; ++k) {
                        const double c = static_cast<double>(counts[k] - left_counts[k]);
                        sum_sq += c * c;
                    }
                    right_gini = 1.0 - sum_sq / (static_cast<double>(n_right) * static_cast<double>(n_right));
                }
                const double left_gini = gini(left_counts, n_left);
                const double gain = node_gini -
                                    (static_cast<double>(n_left) * left_gini +
                                     static_cast<double>(n_right) * right_gini) /
                                        static_cast<double>(n);
                if (gain > best.gain) {
                    const double threshold = sorted[i].first + (sorted[i + 1].first - sorted[i].first) / 2.0;
                    best = {static_cast<int>(feat), threshold, gain};
                }
            }
        }
        return best;
    }

    int build_node(std::size_t begin, std::size_t end, int depth) {
        const std::size_t n = end - begin;
        const auto counts = count_classes(begin, end);
        const double node_gini = gini(counts, n);

        const int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        const bool depth_capped = ctx.max_depth > 0 && depth >= ctx.max_depth;
        SplitChoice split;
        if (node_gini > 0.0 && !depth_capped && n >= 2 * static_cast<std::size_t>(ctx.min_samples_leaf))
            split = best_split(begin, end, counts, node_gini);

        if (split.feature < 0 || split.gain <= 1e-12) {
            tree.nodes[static_cast<std::size_t>(node_index)].klass = majority_class(counts);
            return node_index;
        }

        auto mid_it = std::partition(sample.begin() + static_cast<std::ptrdiff_t>(begin),
                                     sample.begin() + static_cast<std::ptrdiff_t>(end),
                                     [&](std::size_t row) {
                                         return (*ctx.matrix).rows[row][static_cast<std::size_t>(split.feature)] <=
                                                split.threshold;
                                     });
        const auto mid = static_cast<std::size_t>(mid_it - sample.begin());
        importance[static_cast<std::size_t>(split.feature)] += static_cast<double>(n) * split.gain;

        tree.nodes[static_cast<std::size_t>(node_index)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(node_index)].threshold = split.threshold;
        const int left = build_node(begin, mid, depth + 1);
        const int right = build_node(mid, end, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_index)].left = left;
        tree.nodes[static_cast<std::size_t>(node_index)].right = right;
        return node_index;
    }

    void build() {
        bootstrap();
        build_node(0, sample.size(), 0);
    }
};

}  // namespace

int Tree::predict(const std::vector<double>& row) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& node = nodes[static_cast<std::size_t>(i)];
        i = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(i)].klass;
}

Forest train(const FeatureMatrix& matrix, const ForestParams& params) {
    if (matrix.rows.empty()) throw ValidationError("cannot train on an empty matrix");
    const std::size_t n_features = matrix.rows.front().size();
    for (const auto& row : matrix.rows)
        if (row.size() != n_features) throw ValidationError("feature rows have inconsistent width");
    if (params.n_trees < 1) throw ValidationError("n_trees must be >= 1");
    if (params.min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");

    TrainContext ctx;
    ctx.matrix = &matrix;
    ctx.n_features = n_features;
    ctx.min_samples_leaf = params.min_samples_leaf;
    ctx.max_depth = params.max_depth;
    ctx.max_features = params.max_features > 0
                           ? std::min<int>(params.max_features, static_cast<int>(n_features))
                           : std::max<int>(1, static_cast<int>(std::sqrt(static_cast<double>(n_features))));

    Forest forest;
    forest.schema_version = matrix.schema_version;
    forest.n_features = n_features;
    forest.class_list = matrix.labels;
    std::sort(forest.class_list.begin(), forest.class_list.end());
    forest.class_list.erase(std::unique(forest.class_list.begin(), forest.class_list.end()),
                            forest.class_list.end());
    if (forest.class_list.size() < 2) throw ValidationError("training requires at least 2 classes");
    ctx.n_classes = forest.class_list.size();

    ctx.labels.reserve(matrix.labels.size());
    for (const auto& label : matrix.labels) {
        const auto it = std::lower_bound(forest.class_list.begin(), forest.class_list.end(), label);
        ctx.labels.push_back(static_cast<int>(it - forest.class_list.begin()));
    }

    const auto n_trees = static_cast<std::size_t>(params.n_trees);
    std::vector<Tree> trees(n_trees);
    std::vector<std::vector<double>> tree_importance(n_trees);
    std::vector<std::vector<std::size_t>> bootstraps(n_trees);

    auto build_range = [&](std::size_t first, std::size_t last) {
        for (std::size_t t = first; t < last; ++t) {
            TreeBuilder builder(ctx, mix_seed(params.seed, t));
            builder.build();
            trees[t] = std::move(builder.tree);
            tree_importance[t] = std::move(builder.importance);
            bootstraps[t] = std::move(builder.sample);
        }
    };

    std::size_t workers = params.threads > 0 ? static_cast<std::size_t>(params.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n_trees);
    if (workers <= 1) {
        build_range(0, n_trees);
    } else {
        std::vector<std::future<void>> tasks;
        const std::size_t chunk = (n_trees + workers - 1) / workers;
        for (std::size_t first = 0; first < n_trees; first += chunk)
            tasks.push_back(std::async(std::launch::async, build_range, first,
                                       std::min(first + chunk, n_trees)));
        for (auto& task : tasks) task.get();
    }
    forest.trees = std::move(trees);

    // importance: normalize per tree, average, renormalize
    forest.importance.assign(n_features, 0.0);
    for (auto& imp : tree_importance) {
        const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
        if (total <= 0.0) continue;
        for (std::size_t j = 0; j < n_features; ++j) forest.importance[j] += imp[j] / total;
    }
    const double total = std::accumulate(forest.importance.begin(), forest.importance.end(), 0.0);
    if (total > 0.0)
        for (auto& v : forest.importance) v /= total;

    // out-of-bag accuracy over samples that some tree skipped
    const std::size_t n_rows = matrix.rows.size();
    std::vector<std::vector<std::uint32_t>> oob_votes(n_rows, std::vector<std::uint32_t>(ctx.n_classes, 0));
    std::vector<char> in_bag(n_rows);
    for (std::size_t t = 0; t < n_trees; ++t) {
        std::fill(in_bag.begin(), in_bag.end(), 0);
        for (std::size_t row : bootstraps[t]) in_bag[row] = 1;
        for (std::size_t row = 0; row < n_rows; ++row)
            if (!in_bag[row]) oob_votes[row][static_cast<std::size_t>(forest.trees[t].predict(matrix.rows[row]))]++;
    }
    std::size_t voted = 0, correct = 0;
    for (std::size_t row = 0; row < n_rows; ++row) {
        const auto& votes = oob_votes[row];
        const std::uint32_t total_votes = std::accumulate(votes.begin(), votes.end(), 0u);
        if (total_votes == 0) continue;
        ++voted;
        if (majority_class(votes) == ctx.labels[row]) ++correct;
    }
    if (voted > 0) forest.oob_accuracy = static_cast<double>(correct) / static_cast<double>(voted);
    return forest;
}

Prediction predict_row(const Forest& forest, const std::vector<double>& row) {
    if (row.size() != forest.n_features) throw ValidationError("feature vector width does not match forest");
    std::vector<double> votes(forest.class_list.size(), 0.0);
    for (const auto& tree : forest.trees) votes[static_cast<std::size_t>(tree.predict(row))] += 1.0;
    for (auto& v : votes) v /= static_cast<double>(forest.trees.size());
    std::size_t best = 0;
    for (std::size_t k = 1; k < votes.size(); ++k)
        if (votes[k] > votes[best]) best = k;  // ties keep the earlier class
    return {forest.class_list[best], std::move(votes)};
}

Prediction predict(const Forest& forest, const FeatureVector& vector) {
    if (vector.schema_version != forest.schema_version)
        throw ValidationError("feature schema version does not match forest");
    return predict_row(forest, vector.values);
}

std::map<std::string, double> feature_importance(const Forest& forest) {
    const auto& schema = feature_schema();
    std::map<std::string, double> out;
    for (std::size_t j = 0; j < forest.importance.size(); ++j) {
        const std::string& name =
            j < schema.names.size() ? schema.names[j] : "feature_" + std::to_string(j);
        out[name] = forest.importance[j];
    }
    return out;
}

}  // namespace wfbench
