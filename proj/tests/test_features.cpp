#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "feature_oracle.hpp"
#include "wfbench/error.hpp"
#include "wfbench/features.hpp"
#include "wfbench/rng.hpp"

using namespace wfbench;

namespace {

std::size_t fidx(const std::string& name) {
    const auto& names = feature_schema().names;
    const auto it = std::find(names.begin(), names.end(), name);
    REQUIRE(it != names.end());
    return static_cast<std::size_t>(it - names.begin());
}

Observation single_flow(const std::string& label, std::vector<Packet> packets) {
    Observation obs;
    obs.label = label;
    Flow flow;
    flow.src = "10.0.0.2";
    flow.dst = "203.0.113.7";
    flow.packets = std::move(packets);
    obs.flows.push_back(std::move(flow));
    return obs;
}

Observation random_observation(Rng& rng, std::size_t max_packets) {
    Observation obs;
    obs.label = "x";
    const std::size_t n_flows = 1 + rng.bounded(3);
    std::size_t budget = 1 + rng.bounded(max_packets);
    for (std::size_t fi = 0; fi < n_flows && budget > 0; ++fi) {
        Flow flow;
        flow.src = "s";
        flow.dst = "d" + std::to_string(fi);
        const std::size_t n_pkts = fi + 1 == n_flows ? budget : 1 + rng.bounded(budget);
        budget -= n_pkts;
        double t = fi == 0 ? 0.0 : rng.uniform(0.0, 0.5);
        for (std::size_t p = 0; p < n_pkts; ++p) {
            t += rng.uniform(0.0, 0.3);
            const auto size = static_cast<std::int64_t>(1 + rng.bounded(20000));
            flow.packets.push_back({t, rng.bernoulli(0.4) ? size : -size});
        }
        obs.flows.push_back(std::move(flow));
    }
    obs.flows.front().packets.front().time = 0.0;
    return obs;
}

}  // namespace

TEST_CASE("schema is fixed, unique and grouped") {
    const auto& schema = feature_schema();
    REQUIRE(schema.names.size() == kFeatureCount);
    CHECK(std::set<std::string>(schema.names.begin(), schema.names.end()).size() == kFeatureCount);
    CHECK(schema.version == kFeatureSchemaVersion);
    CHECK(feature_group(0) == FeatureGroup::kCounts);
    CHECK(feature_group(5) == FeatureGroup::kVolumes);
    CHECK(feature_group(19) == FeatureGroup::kTiming);
    CHECK(feature_group(44) == FeatureGroup::kEdges);
    CHECK(feature_group(48) == FeatureGroup::kConcentration);
    CHECK(feature_group(74) == FeatureGroup::kRate);
    CHECK(feature_group(79) == FeatureGroup::kOrdering);
    CHECK(feature_group(83) == FeatureGroup::kBursts);
    CHECK(feature_group(89) == FeatureGroup::kHistogram);
    CHECK(feature_group(600) == FeatureGroup::kHistogram);
}

TEST_CASE("three-packet example, hand-computed") {
    const auto obs = single_flow("a", {{0.0, 100}, {0.1, -1400}, {0.2, -1400}});
    const auto f = extract_features(obs).values;
    REQUIRE(f.size() == kFeatureCount);

    CHECK(f[fidx("packet_count")] == 3.0);
    CHECK(f[fidx("packet_count_incoming")] == 2.0);
    CHECK(f[fidx("packet_count_outgoing")] == 1.0);
    CHECK(f[fidx("packet_frac_incoming")] == doctest::Approx(2.0 / 3.0));
    CHECK(f[fidx("packet_frac_outgoing")] == doctest::Approx(1.0 / 3.0));

    CHECK(f[fidx("bytes_total")] == 2900.0);
    CHECK(f[fidx("bytes_incoming")] == 2800.0);
    CHECK(f[fidx("bytes_outgoing")] == 100.0);
    CHECK(f[fidx("size_max")] == 1400.0);
    CHECK(f[fidx("size_mean_incoming")] == 1400.0);
    CHECK(f[fidx("size_std_incoming")] == 0.0);
    CHECK(f[fidx("size_mean_outgoing")] == 100.0);

    CHECK(f[fidx("duration")] == doctest::Approx(0.2));
    CHECK(f[fidx("iat_mean")] == doctest::Approx(0.1));
    CHECK(f[fidx("iat_std")] == doctest::Approx(0.0));
    CHECK(f[fidx("iat_mean_outgoing")] == 0.0);  // single outgoing packet: empty series
    CHECK(f[fidx("ts_p25")] == 0.0);
    CHECK(f[fidx("ts_p50")] == doctest::Approx(0.1));
    CHECK(f[fidx("ts_p75")] == doctest::Approx(0.2));
    CHECK(f[fidx("ts_p25_incoming")] == doctest::Approx(0.1));

    CHECK(f[fidx("order_mean_outgoing")] == 0.0);
    CHECK(f[fidx("order_mean_incoming")] == 1.5);
    CHECK(f[fidx("order_std_incoming")] == 0.5);

    CHECK(f[fidx("burst_count")] == 1.0);
    CHECK(f[fidx("burst_len_max")] == 1.0);

    CHECK(f[fidx("hist_outgoing_1")] == 1.0);   // 100 B -> bin 1
    CHECK(f[fidx("hist_incoming_21")] == 2.0);  // 1400 B -> bin 21

    // the independent oracle agrees everywhere
    const auto expected = oracle_features(obs, false);
    for (std::size_t i = 0; i < kFeatureCount; ++i) CHECK(f[i] == doctest::Approx(expected[i]));
}

TEST_CASE("single outgoing packet degenerates cleanly") {
    const auto f = extract_features(single_flow("a", {{0.0, 64}})).values;
    CHECK(f[fidx("packet_count")] == 1.0);
    CHECK(f[fidx("packet_frac_outgoing")] == 1.0);
    CHECK(f[fidx("duration")] == 0.0);
    CHECK(f[fidx("burst_count")] == 1.0);
    CHECK(f[fidx("burst_len_max")] == 1.0);
    CHECK(f[fidx("burst_len_mean")] == 1.0);
    CHECK(f[fidx("rate_mean")] == 0.0);  // zero-duration trace has no rate series
    CHECK(f[fidx("chunk_outgoing_sum")] == 1.0);
    CHECK(f[fidx("first30_outgoing")] == 1.0);
    CHECK(f[fidx("last30_outgoing")] == 1.0);
    CHECK(f[fidx("hist_outgoing_1")] == 1.0);  // 64/64
    double hist_sum = 0.0;
    for (std::size_t i = 89; i < kFeatureCount; ++i) hist_sum += f[i];
    CHECK(hist_sum == 1.0);
}

TEST_CASE("oversized packets land in the last histogram bin") {
    const auto f = extract_features(single_flow("a", {{0.0, -16384}, {0.1, -20000}, {0.2, 100}})).values;
    CHECK(f[fidx("hist_incoming_255")] == 2.0);
}

TEST_CASE("discard_timings zeroes exactly the 30 timing features") {
    Rng rng(11);
    for (int iter = 0; iter < 5; ++iter) {
        const auto obs = random_observation(rng, 40);
        const auto with = extract_features(obs, {.discard_timings = false}).values;
        const auto without = extract_features(obs, {.discard_timings = true}).values;

        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            const bool timing = feature_group(i) == FeatureGroup::kTiming || feature_group(i) == FeatureGroup::kRate;
            if (timing)
                CHECK(without[i] == 0.0);
            else
                CHECK(without[i] == with[i]);
        }
    }
}

TEST_CASE("extract_features is a pure function") {
    Rng rng(5);
    const auto obs = random_observation(rng, 50);
    const auto a = extract_features(obs).values;
    const auto b = extract_features(obs).values;
    CHECK(a == b);
}

TEST_CASE("count and byte consistency, histogram mass") {
    Rng rng(13);
    for (int iter = 0; iter < 10; ++iter) {
        const auto obs = random_observation(rng, 60);
        const auto f = extract_features(obs).values;
        CHECK(f[1] + f[2] == f[0]);              // in + out counts
        CHECK(f[3] + f[4] == doctest::Approx(1.0));
        CHECK(f[6] + f[7] == doctest::Approx(f[5]));  // in + out bytes
        double hist_sum = 0.0;
        for (std::size_t i = 89; i < kFeatureCount; ++i) hist_sum += f[i];
        CHECK(hist_sum == f[0]);
    }
}

TEST_CASE("oracle equivalence on small random observations") {
    Rng rng(99);
    for (int iter = 0; iter < 10; ++iter) {
        const auto obs = random_observation(rng, 30);
        for (const bool discard : {false, true}) {
            const auto got = extract_features(obs, {.discard_timings = discard}).values;
            const auto expected = oracle_features(obs, discard);
            REQUIRE(got.size() == expected.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                const double tolerance = 1e-9 * std::max(1.0, std::abs(expected[i]));
                CHECK(std::abs(got[i] - expected[i]) <= tolerance);
            }
        }
    }
}

TEST_CASE("empty observation cannot be featurized") {
    Observation obs;
    obs.label = "a";
    CHECK_THROWS_AS(extract_features(obs), ValidationError);
}

TEST_CASE("netflow records become a pseudo-observation") {
    SUBCASE("single record") {
        const std::vector<NetFlowRecord> records{{"s", "d", true, 10, 9000, 0.0, 1.0}};
        const auto obs = netflow_to_pseudo_observation(records, "a");
        REQUIRE(obs.flows.size() == 1);
        REQUIRE(obs.flows[0].packets.size() == 1);
        CHECK(obs.flows[0].packets[0].time == 0.0);
        CHECK(obs.flows[0].packets[0].size == 9000);
    }
    SUBCASE("inter-record gaps become inter-arrival input") {
        const std::vector<NetFlowRecord> records{{"s", "d", true, 4, 100, 0.0, 0.2},
                                                 {"s", "d", false, 2, 300, 0.5, 0.9}};
        const auto f = extract_features(netflow_to_pseudo_observation(records, "a")).values;
        CHECK(f[fidx("iat_mean")] == doctest::Approx(0.5));
        CHECK(f[fidx("packet_count_incoming")] == 0.0);  // direction discarded
        CHECK(f[fidx("bytes_total")] == 400.0);
    }
    SUBCASE("empty record list") {
        CHECK_THROWS_AS(netflow_to_pseudo_observation({}, "a"), ValidationError);
    }
}

TEST_CASE("resource log becomes a pseudo-observation") {
    ResourceLog log;
    log.label = "site";
    log.site_domain = "a.com";
    log.entries.push_back({0.0, 500, 0.2, 30000, "https://a.com/", "a.com", std::nullopt});
    log.entries.push_back({0.1, 200, 0.3, 0, "https://b.com/x", "b.com", std::nullopt});

    const auto obs = resource_log_to_pseudo_observation(log);
    REQUIRE(obs.flows.size() == 2);  // one flow per distinct domain
    CHECK(obs.flows[0].packets[0].time == 0.0);
    CHECK(obs.flows[0].packets[0].size == 500);
    CHECK(obs.flows[0].packets[1].time == doctest::Approx(0.2));
    CHECK(obs.flows[0].packets[1].size == -30000);
    CHECK(obs.flows[1].packets[1].size == -1);  // zero response mapped to one byte

    ResourceLog empty;
    empty.label = "site";
    CHECK_THROWS_AS(resource_log_to_pseudo_observation(empty), ValidationError);
}

TEST_CASE("feature matrix rows follow dataset order and CSV has the schema header") {
    Rng rng(3);
    std::vector<Observation> observations;
    for (int i = 0; i < 4; ++i) {
        auto obs = random_observation(rng, 20);
        obs.label = i < 2 ? "a" : "b";
        observations.push_back(std::move(obs));
    }
    const Dataset ds = make_dataset(std::move(observations));
    const auto matrix = featurize_dataset(ds);
    REQUIRE(matrix.rows.size() == 4);
    CHECK(matrix.labels == std::vector<std::string>{"a", "a", "b", "b"});

    std::ostringstream out;
    write_feature_csv(matrix, out);
    const std::string csv = out.str();
    CHECK(csv.substr(0, 19) == "label,packet_count,");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
