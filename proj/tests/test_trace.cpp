#include <sstream>
#include <tuple>

#include "doctest.h"
#include "wfbench/error.hpp"
#include "wfbench/rng.hpp"
#include "wfbench/trace.hpp"

using namespace wfbench;

namespace {

Observation make_observation(const std::string& label, std::vector<std::vector<Packet>> flows) {
    Observation obs;
    obs.label = label;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        Flow flow;
        flow.src = "10.0.0.2";
        flow.dst = "203.0.113." + std::to_string(i + 1);
        flow.packets = std::move(flows[i]);
        obs.flows.push_back(std::move(flow));
    }
    return obs;
}

// arbitrary valid dataset for property tests
Dataset random_dataset(Rng& rng, std::size_t n_classes, std::size_t samples) {
    std::vector<Observation> observations;
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t s = 0; s < samples; ++s) {
            Observation obs;
            obs.label = "class" + std::to_string(c);
            if (rng.bernoulli(0.5)) obs.meta["browser"] = rng.bernoulli(0.5) ? "firefox" : "chromium";
            const std::size_t n_flows = 1 + rng.bounded(4);
            double t = 0.0;
            for (std::size_t fi = 0; fi < n_flows; ++fi) {
                Flow flow;
                flow.src = "10.0.0.2";
                flow.dst = "203.0.113." + std::to_string(rng.bounded(20));
                if (rng.bernoulli(0.7)) flow.sni = "host" + std::to_string(rng.bounded(10)) + ".example";
                const std::size_t n_pkts = 1 + rng.bounded(20);
                for (std::size_t p = 0; p < n_pkts; ++p) {
                    t += rng.uniform(0.0, 0.01);
                    const auto size = static_cast<std::int64_t>(1 + rng.bounded(1400));
                    flow.packets.push_back({t, rng.bernoulli(0.5) ? size : -size});
                }
                obs.flows.push_back(std::move(flow));
            }
            // keep t=0 at the first packet
            obs.flows.front().packets.front().time = 0.0;
            observations.push_back(std::move(obs));
        }
    }
    return make_dataset(std::move(observations));
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
    if (a.class_list != b.class_list || a.observations.size() != b.observations.size()) return false;
    for (std::size_t i = 0; i < a.observations.size(); ++i) {
        const auto& x = a.observations[i];
        const auto& y = b.observations[i];
        if (x.label != y.label || x.meta != y.meta || x.flows.size() != y.flows.size()) return false;
        for (std::size_t fi = 0; fi < x.flows.size(); ++fi) {
            const auto& fx = x.flows[fi];
            const auto& fy = y.flows[fi];
            if (fx.src != fy.src || fx.dst != fy.dst || fx.sni != fy.sni) return false;
            if (fx.packets.size() != fy.packets.size()) return false;
            for (std::size_t p = 0; p < fx.packets.size(); ++p)
                if (fx.packets[p].time != fy.packets[p].time || fx.packets[p].size != fy.packets[p].size)
                    return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("minimal valid line loads") {
    std::istringstream in(
        R"({"label": "a", "flows": [{"src": "10.0.0.2", "dst": "203.0.113.7", "sni": "example.com", "packets": [[0.0, 120], [0.01, -1400]]}]})"
        "\n"
        R"({"label": "a", "flows": [{"src": "10.0.0.2", "dst": "203.0.113.7", "sni": null, "packets": [[0.0, 80]]}]})"
        "\n");
    const Dataset ds = load_dataset(in);
    CHECK(ds.class_list == std::vector<std::string>{"a"});
    CHECK(ds.observations.size() == 2);
    CHECK(ds.observations[0].packet_count() == 2);
    CHECK(ds.observations[0].flows[0].sni.value() == "example.com");
    CHECK_FALSE(ds.observations[1].flows[0].sni.has_value());
}

TEST_CASE("out-of-order packets are re-sorted by time") {
    std::istringstream in(
        R"({"label": "a", "flows": [{"src": "s", "dst": "d", "packets": [[0.02, 80], [0.0, 100]]}]})"
        "\n"
        R"({"label": "a", "flows": [{"src": "s", "dst": "d", "packets": [[0.0, 1]]}]})"
        "\n");
    const Dataset ds = load_dataset(in);
    const auto& packets = ds.observations[0].flows[0].packets;
    CHECK(packets[0].time == 0.0);
    CHECK(packets[0].size == 100);
    CHECK(packets[1].time == 0.02);
    CHECK(packets[1].size == 80);
}

TEST_CASE("ingestion normalizes absolute timestamps") {
    std::istringstream in(
        R"({"label": "a", "flows": [{"src": "s", "dst": "d", "packets": [[1700000000.5, 10], [1700000001.0, -20]]}]})"
        "\n"
        R"({"label": "a", "flows": [{"src": "s", "dst": "d", "packets": [[3.0, 1]]}]})"
        "\n");
    const Dataset ds = load_dataset(in);
    CHECK(ds.observations[0].flows[0].packets[0].time == 0.0);
    CHECK(ds.observations[0].flows[0].packets[1].time == doctest::Approx(0.5));
    CHECK(ds.observations[1].flows[0].packets[0].time == 0.0);
}

TEST_CASE("validation errors name the line") {
    auto expect_error = [](const std::string& line, const char* needle) {
        std::istringstream in(line + "\n");
        try {
            load_dataset(in);
            FAIL_CHECK("expected a ValidationError for: " << line);
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("line 1") != std::string::npos);
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_error(R"({"label": "a", "flows": [{"src": "s", "dst": "d", "packets": [[0.0, 0]]}]})", "size");
    expect_error(R"({"label": "a", "flows": [{"src": "s", "dst": "d", "packets": [[-1.0, 5]]}]})", "time");
    expect_error(R"({"label": "a", "flows": [{"src": "s", "dst": "d", "packets": []}]})", "packets");
    expect_error(R"({"label": "a", "flows": []})", "flows");
    expect_error(R"({not json)", "malformed");
}

TEST_CASE("duplicate observation identifiers are rejected") {
    std::istringstream in(
        R"({"label": "a", "meta": {"id": "x1"}, "flows": [{"src": "s", "dst": "d", "packets": [[0.0, 5]]}]})"
        "\n"
        R"({"label": "a", "meta": {"id": "x1"}, "flows": [{"src": "s", "dst": "d", "packets": [[0.0, 5]]}]})"
        "\n");
    CHECK_THROWS_AS(load_dataset(in), ValidationError);
}

TEST_CASE("dataset requires two observations per class") {
    std::istringstream in(
        R"({"label": "only", "flows": [{"src": "s", "dst": "d", "packets": [[0.0, 5]]}]})"
        "\n");
    CHECK_THROWS_AS(load_dataset(in), ValidationError);
}

TEST_CASE("save keeps meta verbatim and round-trips") {
    Observation obs = make_observation("site", {{{0.0, 120}, {0.013, -1400}}});
    obs.meta = {{"browser", "firefox"}, {"collected", "2021-03-01"}};
    Dataset ds = make_dataset({obs, obs});
    std::ostringstream out;
    save_dataset(ds, out);
    CHECK(out.str().find("\"browser\":\"firefox\"") != std::string::npos);
    std::istringstream in(out.str());
    CHECK(datasets_equal(load_dataset(in), ds));
}

TEST_CASE("load-save round-trip identity on random datasets") {
    Rng rng(2024);
    for (int iter = 0; iter < 8; ++iter) {
        const Dataset ds = random_dataset(rng, 2 + rng.bounded(3), 2 + rng.bounded(4));
        std::ostringstream out;
        save_dataset(ds, out);
        std::istringstream in(out.str());
        const Dataset back = load_dataset(in);
        REQUIRE(datasets_equal(back, ds));
        // and fully stable: a second pass serializes to identical bytes
        std::ostringstream out2;
        save_dataset(back, out2);
        CHECK(out.str() == out2.str());
    }
}

TEST_CASE("merge_packets ordering and tie-breaks") {
    SUBCASE("interleaves flows by time") {
        const Observation obs =
            make_observation("a", {{{0.0, 10}, {0.1, -20}}, {{0.05, 30}}});
        const auto merged = merge_packets(obs);
        REQUIRE(merged.size() == 3);
        CHECK(merged[0].packet.time == 0.0);
        CHECK(merged[1].packet.time == 0.05);
        CHECK(merged[2].packet.time == 0.1);
        CHECK(merged[1].flow_index == 1);
    }
    SUBCASE("equal timestamps: earlier flow first") {
        const Observation obs = make_observation("a", {{{0.5, 1}}, {{0.5, 2}}, {{0.0, 3}, {0.5, 4}}});
        const auto merged = merge_packets(obs);
        REQUIRE(merged.size() == 4);
        CHECK(merged[0].packet.size == 3);
        CHECK(merged[1].packet.size == 1);
        CHECK(merged[2].packet.size == 2);
        CHECK(merged[3].packet.size == 4);
    }
}

TEST_CASE("merge_packets equals a brute-force stable sort") {
    Rng rng(7);
    for (int iter = 0; iter < 20; ++iter) {
        Observation obs;
        obs.label = "x";
        const std::size_t n_flows = 1 + rng.bounded(4);
        for (std::size_t fi = 0; fi < n_flows; ++fi) {
            Flow flow;
            flow.src = "s";
            flow.dst = "d";
            double t = 0.0;
            const std::size_t n_pkts = 1 + rng.bounded(15);
            for (std::size_t p = 0; p < n_pkts; ++p) {
                // coarse grid so timestamp ties actually happen
                t += 0.1 * static_cast<double>(rng.bounded(3));
                flow.packets.push_back({t, static_cast<std::int64_t>(1 + rng.bounded(100))});
            }
            obs.flows.push_back(std::move(flow));
        }

        // oracle: stable sort of (flow, pos) pairs by time only
        std::vector<std::tuple<double, std::size_t, std::size_t>> expected;
        for (std::size_t fi = 0; fi < obs.flows.size(); ++fi)
            for (std::size_t p = 0; p < obs.flows[fi].packets.size(); ++p)
                expected.emplace_back(obs.flows[fi].packets[p].time, fi, p);
        std::stable_sort(expected.begin(), expected.end(),
                         [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });

        const auto merged = merge_packets(obs);
        REQUIRE(merged.size() == expected.size());
        REQUIRE(merged.size() == obs.packet_count());
        for (std::size_t i = 0; i < merged.size(); ++i) {
            CHECK(merged[i].packet.time == std::get<0>(expected[i]));
            CHECK(merged[i].flow_index == std::get<1>(expected[i]));
            if (i > 0) CHECK(merged[i].packet.time >= merged[i - 1].packet.time);
        }
    }
}
