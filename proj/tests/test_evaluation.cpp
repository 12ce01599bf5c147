#include <map>
#include <set>

#include "doctest.h"
#include "wfbench/error.hpp"
#include "wfbench/evaluation.hpp"
#include "wfbench/rng.hpp"

using namespace wfbench;

TEST_CASE("macro F1 on hand confusions") {
    CHECK(macro_f1({{10, 0}, {0, 10}}) == 1.0);
    CHECK(macro_f1({{5, 5}, {5, 5}}) == doctest::Approx(0.5));
    // per-class F1 {0.7272..., 0.6666...}
    CHECK(macro_f1({{8, 2}, {4, 6}}) == doctest::Approx(0.696969696969697));
    CHECK_THROWS_AS(macro_f1({{1, 2, 3}, {1, 2, 3}}), ValidationError);
}

TEST_CASE("per-class precision and recall") {
    const auto metrics = per_class_metrics({{8, 2}, {4, 6}});
    CHECK(metrics[0].precision == doctest::Approx(8.0 / 12.0));
    CHECK(metrics[0].recall == doctest::Approx(0.8));
    CHECK(metrics[0].f1 == doctest::Approx(2.0 * (8.0 / 12.0) * 0.8 / (8.0 / 12.0 + 0.8)));
    CHECK(metrics[0].support == 10);
    CHECK(metrics[1].f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("classes with no samples and no predictions are excluded") {
    // third class never appears: macro over the two active ones
    CHECK(macro_f1({{5, 0, 0}, {0, 5, 0}, {0, 0, 0}}) == 1.0);
    // but a class with predictions and no samples counts as a zero
    CHECK(macro_f1({{5, 0, 1}, {0, 5, 0}, {0, 0, 0}}) < 1.0);
}

TEST_CASE("stratified folds partition every class evenly") {
    std::vector<std::string> labels;
    for (int c = 0; c < 3; ++c)
        for (int s = 0; s < 10; ++s) labels.push_back("c" + std::to_string(c));

    const auto folds = stratified_folds(labels, 5, 99);
    REQUIRE(folds.size() == labels.size());
    std::map<std::string, std::map<int, int>> per_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CHECK(folds[i] >= 0);
        CHECK(folds[i] < 5);
        per_class[labels[i]][folds[i]]++;
    }
    for (const auto& [label, counts] : per_class) {
        CHECK(counts.size() == 5);
        for (const auto& [fold, n] : counts) CHECK(n == 2);
    }
    CHECK(stratified_folds(labels, 5, 99) == folds);      // deterministic
    CHECK(stratified_folds(labels, 5, 100) != folds);     // seed-sensitive
    CHECK_THROWS_AS(stratified_folds(labels, 11, 1), ValidationError);
}

TEST_CASE("cross-validation on disjoint class signatures is perfect") {
    FeatureMatrix m;
    Rng rng(4);
    for (int c = 0; c < 3; ++c) {
        for (int s = 0; s < 6; ++s) {
            m.labels.push_back("c" + std::to_string(c));
            m.rows.push_back({static_cast<double>(c), rng.uniform01()});
        }
    }
    ForestParams params;
    params.n_trees = 15;
    params.seed = 2;
    params.max_features = 2;  // tiny matrix: let every node see both features
    const auto report = cross_validate_matrix(m, 3, params);
    CHECK(report.macro_f1_mean == 1.0);
    CHECK(report.macro_f1_std == 0.0);
    CHECK(report.fold_scores.size() == 3);
    // confusion row sums = per-class test counts over all folds
    for (std::size_t c = 0; c < 3; ++c) {
        std::uint64_t row = 0;
        for (std::uint64_t v : report.confusion[c]) row += v;
        CHECK(row == 6);
    }
}

TEST_CASE("randomly permuted labels score at chance level") {
    // permutation-test oracle: with labels detached from features, macro
    // F1 should sit near 1/num_classes
    const int classes = 5, per_class = 10;
    FeatureMatrix m;
    Rng rng(31);
    for (int c = 0; c < classes; ++c)
        for (int s = 0; s < per_class; ++s) {
            m.labels.push_back("c" + std::to_string(c));
            m.rows.push_back({rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()});
        }
    ForestParams params;
    params.n_trees = 40;
    params.seed = 17;
    const auto report = cross_validate_matrix(m, 5, params);
    const double chance = 1.0 / classes;
    const double se = report.macro_f1_std / std::sqrt(static_cast<double>(report.fold_scores.size()));
    CHECK(std::abs(report.macro_f1_mean - chance) <= std::max(3.0 * se, 0.08));
}

TEST_CASE("cross_validate applies the defense hook to every observation") {
    std::vector<Observation> observations;
    for (int c = 0; c < 2; ++c)
        for (int s = 0; s < 4; ++s) {
            Observation obs;
            obs.label = c == 0 ? "a" : "b";
            Flow flow;
            flow.src = "s";
            flow.dst = "d";
            flow.packets.push_back({0.0, c == 0 ? 100 : 1000});
            flow.packets.push_back({0.1, -200});
            obs.flows.push_back(std::move(flow));
            observations.push_back(std::move(obs));
        }
    const Dataset ds = make_dataset(std::move(observations));

    CrossValidateOptions options;
    options.folds = 2;
    options.forest.n_trees = 10;
    options.forest.seed = 1;
    options.forest.max_features = 601;  // two-packet traces carry few informative features
    std::set<std::size_t> touched;
    options.defense = [&touched](const Observation& obs, std::size_t index) {
        touched.insert(index);
        return obs;
    };
    const auto report = cross_validate(ds, options);
    CHECK(touched.size() == ds.observations.size());
    CHECK(report.macro_f1_mean == 1.0);  // classes stay separable through the identity defense
}
