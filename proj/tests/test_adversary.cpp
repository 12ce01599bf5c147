#include <map>
#include <sstream>

#include "doctest.h"
#include "wfbench/adversary.hpp"
#include "wfbench/error.hpp"
#include "wfbench/net_defenses.hpp"
#include "wfbench/rng.hpp"

using namespace wfbench;

namespace {

Flow make_flow(const std::string& dst, std::optional<std::string> sni, std::vector<Packet> packets) {
    Flow flow;
    flow.src = "10.0.0.2";
    flow.dst = dst;
    flow.sni = std::move(sni);
    flow.packets = std::move(packets);
    return flow;
}

Observation three_flow_observation() {
    Observation obs;
    obs.label = "page";
    obs.flows.push_back(make_flow("198.51.100.1", "a.com", {{0.0, 200}, {0.05, -900}}));
    obs.flows.push_back(make_flow("142.251.0.1", "fonts.gstatic.com", {{0.1, 150}, {0.12, -700}}));
    obs.flows.push_back(make_flow("203.0.113.9", "cdn.other.net", {{0.2, 100}, {0.25, -300}}));
    return obs;
}

PathMap simple_paths() {
    PathMap paths;
    paths.routes["a.com"] = {"AS-CLIENT", "X", "Y", "W"};
    paths.routes["fonts.gstatic.com"] = {"AS-CLIENT", "X", "AS-G"};
    paths.routes["cdn.other.net"] = {"AS-CLIENT", "Z"};
    return paths;
}

}  // namespace

TEST_CASE("as_filter keeps flows routed through the AS") {
    const auto obs = three_flow_observation();
    const auto paths = simple_paths();

    const auto via_y = as_filter(obs, "Y", paths);
    REQUIRE(via_y.has_value());
    REQUIRE(via_y->flows.size() == 1);
    CHECK(via_y->flows[0].sni.value() == "a.com");

    CHECK_FALSE(as_filter(obs, "AS-NOWHERE", paths).has_value());  // page unseen

    // SNI lookup takes precedence; flows with no route entry are dropped
    Observation unknown = obs;
    unknown.flows[2].sni = std::nullopt;  // dst 203.0.113.9 has no route either
    const auto via_z = as_filter(unknown, "Z", paths);
    CHECK_FALSE(via_z.has_value());

    // the client AS sits on every route: identical to the original
    const auto via_client = as_filter(obs, "AS-CLIENT", paths);
    REQUIRE(via_client.has_value());
    CHECK(via_client->flows.size() == obs.flows.size());
}

TEST_CASE("as visibility statistics on a constructed map") {
    // AS "G" on 4 of 5 routes of every page (80%), client AS on all
    std::vector<Observation> observations;
    PathMap paths;
    for (int page = 0; page < 4; ++page) {
        Observation obs;
        obs.label = "site" + std::to_string(page);
        for (int f = 0; f < 5; ++f) {
            const std::string key = "r" + std::to_string(page) + "_" + std::to_string(f);
            obs.flows.push_back(make_flow("dst", key, {{0.05 * f, 100}}));
            std::vector<std::string> route{"AS-CLIENT"};
            if (f != 0) route.push_back("G");
            route.push_back("DEST" + std::to_string(page));
            paths.routes[key] = route;
        }
        obs.flows.front().packets.front().time = 0.0;
        observations.push_back(obs);
        observations.push_back(obs);  // two samples per page
    }
    const Dataset ds = make_dataset(std::move(observations));
    const auto stats = as_visibility_stats(ds, paths);

    CHECK(stats.at("G").pages_seen_fraction == 1.0);
    CHECK(stats.at("G").median_route_fraction() == doctest::Approx(0.8));
    CHECK(stats.at("AS-CLIENT").pages_seen_fraction == 1.0);
    CHECK(stats.at("AS-CLIENT").median_route_fraction() == 1.0);
    // an AS present on exactly one page's routes
    CHECK(stats.at("DEST0").pages_seen_fraction == doctest::Approx(0.25));
}

TEST_CASE("netflow sampling keeps positions 0 mod n") {
    Observation obs;
    obs.label = "a";
    Flow flow = make_flow("d", std::nullopt, {});
    for (int i = 0; i < 10; ++i) flow.packets.push_back({0.1 * i, 100});
    obs.flows.push_back(flow);

    SUBCASE("n=10 on a 10-packet flow keeps one packet") {
        const auto records = netflow_sample(obs, {.sampling_n = 10});
        REQUIRE(records.size() == 1);
        CHECK(records[0].packet_count == 1);
        CHECK(records[0].byte_count == 100);
        CHECK(records[0].t_start == 0.0);
    }
    SUBCASE("n=1 conserves all bytes per (flow, direction)") {
        const auto records = netflow_sample(obs, {.sampling_n = 1});
        REQUIRE(records.size() == 1);
        CHECK(records[0].packet_count == 10);
        CHECK(records[0].byte_count == obs.total_bytes());
        CHECK(records[0].t_end == doctest::Approx(0.9));
    }
}

TEST_CASE("netflow aggregation equals a brute-force oracle") {
    Rng rng(41);
    for (int iter = 0; iter < 10; ++iter) {
        Observation obs;
        obs.label = "r";
        const std::size_t n_flows = 1 + rng.bounded(4);
        for (std::size_t f = 0; f < n_flows; ++f) {
            Flow flow = make_flow("d" + std::to_string(f), std::nullopt, {});
            double t = f == 0 ? 0.0 : rng.uniform(0.0, 0.3);
            const std::size_t n = 1 + rng.bounded(60);
            for (std::size_t p = 0; p < n; ++p) {
                t += rng.uniform(0.0, 0.02);
                const auto size = static_cast<std::int64_t>(1 + rng.bounded(1400));
                flow.packets.push_back({t, rng.bernoulli(0.5) ? size : -size});
            }
            obs.flows.push_back(std::move(flow));
        }
        obs.flows.front().packets.front().time = 0.0;

        const std::uint64_t n = 1 + rng.bounded(12);
        const auto records = netflow_sample(obs, {.sampling_n = n});

        // oracle: enumerate kept positions over the merged order directly
        const auto merged = merge_packets(obs);
        std::map<std::pair<std::size_t, bool>, std::pair<std::uint64_t, std::uint64_t>> expected;
        std::uint64_t kept_bytes = 0, kept_count = 0;
        for (std::size_t pos = 0; pos < merged.size(); pos += n) {
            auto& [count, bytes] = expected[{merged[pos].flow_index, merged[pos].packet.outgoing()}];
            count += 1;
            bytes += merged[pos].packet.bytes();
            kept_bytes += merged[pos].packet.bytes();
            kept_count += 1;
        }
        REQUIRE(records.size() == expected.size());
        std::uint64_t record_bytes = 0, record_count = 0;
        for (const auto& r : records) {
            record_bytes += r.byte_count;
            record_count += r.packet_count;
            CHECK(r.t_start <= r.t_end);
            CHECK(r.byte_count >= r.packet_count);  // every packet is at least one byte
        }
        CHECK(record_bytes == kept_bytes);
        CHECK(record_count == kept_count);
    }
}

TEST_CASE("netflow padding reaches the effective targets exactly") {
    std::vector<NetFlowRecord> records{{"s", "d", true, 100, 500'000, 0.0, 1.0},
                                       {"s", "d", false, 200, 500'000, 0.0, 1.0}};
    SUBCASE("n=1: full targets, split evenly") {
        const auto result = netflow_pad(records, {.byte_target = 22'000'000, .packet_target = 25'000}, 1);
        std::uint64_t bytes = 0, packets = 0;
        for (const auto& r : result.records) {
            bytes += r.byte_count;
            packets += r.packet_count;
        }
        CHECK(bytes == 22'000'000);
        CHECK(packets == 25'000);
        CHECK_FALSE(result.byte_target_exceeded);
        // 21 MB deficit split evenly across 2 records
        CHECK(result.records[0].byte_count == 500'000 + 10'500'000);
        CHECK(result.records[1].byte_count == 500'000 + 10'500'000);
    }
    SUBCASE("sampling scales the targets down") {
        const auto result = netflow_pad(records, {.byte_target = 22'000'000, .packet_target = 25'000}, 100);
        std::uint64_t bytes = 0;
        for (const auto& r : result.records) bytes += r.byte_count;
        CHECK(bytes == std::max<std::uint64_t>(1'000'000, 220'000));  // already above: unchanged
        CHECK(result.byte_target_exceeded);
        std::uint64_t packets = 0;
        for (const auto& r : result.records) packets += r.packet_count;
        CHECK(packets == 300);  // 250 target < 300 observed: unchanged
        CHECK(result.packet_target_exceeded);
    }
    SUBCASE("no record shrinks") {
        const auto result = netflow_pad(records, {.byte_target = 2'000'000, .packet_target = 100}, 1);
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK(result.records[i].byte_count >= records[i].byte_count);
            CHECK(result.records[i].packet_count >= records[i].packet_count);
        }
    }
}

TEST_CASE("google filter extracts ClientHello proxy times") {
    const auto obs = three_flow_observation();
    const auto owners = OwnerMap::default_google();

    const auto fp = google_filter(obs, owners, "Google");
    CHECK(fp.label == "page");
    REQUIRE(fp.times.size() == 1);
    CHECK(fp.times[0] == doctest::Approx(0.1));  // first outgoing packet of the gstatic flow

    SUBCASE("no Google flows: empty fingerprint") {
        Observation plain = obs;
        plain.flows.erase(plain.flows.begin() + 1);
        CHECK(google_filter(plain, owners, "Google").times.empty());
    }
    SUBCASE("endpoint fallback for SNI-less flows") {
        Observation ech = obs;
        ech.flows[1].sni = std::nullopt;
        OwnerMap with_endpoints = owners;
        with_endpoints.endpoints["142.251.0.1"] = "Google";
        CHECK(google_filter(ech, with_endpoints, "Google").times.size() == 1);
        CHECK(google_filter(ech, owners, "Google").times.empty());
    }
    SUBCASE("invariant under size-only defenses") {
        const auto defended = hide_packet_sizes(obs, 1400);
        const auto fp2 = google_filter(defended, owners, "Google");
        CHECK(fp2.times == fp.times);
    }
}

TEST_CASE("fingerprint featurization") {
    TimingFingerprint fp;
    fp.label = "site";
    fp.times = {0.1, 0.4};
    const auto obs = fingerprint_to_pseudo_observation(fp);
    REQUIRE(obs.flows.size() == 1);
    CHECK(obs.flows[0].packets[0].size == 1);

    const auto& names = feature_schema().names;
    const auto vec = fingerprint_features(fp);
    const auto iat_mean =
        static_cast<std::size_t>(std::find(names.begin(), names.end(), "iat_mean") - names.begin());
    CHECK(vec.values[iat_mean] == doctest::Approx(0.3));

    TimingFingerprint single;
    single.label = "s";
    single.times = {0.7};
    const auto dur =
        static_cast<std::size_t>(std::find(names.begin(), names.end(), "duration") - names.begin());
    CHECK(fingerprint_features(single).values[dur] == 0.0);
    CHECK(fingerprint_features(single).values[0] == 1.0);

    CHECK(fingerprint_features(fp).values == vec.values);  // purity

    TimingFingerprint empty;
    CHECK_THROWS_AS(fingerprint_features(empty), ValidationError);
}

TEST_CASE("fingerprint binary round-trip and record size") {
    std::vector<TimingFingerprint> fps;
    fps.push_back({"siteA.com", {0.01, 0.5, 1.25}});
    fps.push_back({"b", {}});
    fps.push_back({"c.example", {0.125}});

    std::stringstream buffer;
    write_fingerprints(fps, buffer);
    const std::string bytes = buffer.str();

    // payload per record: label + 8 bytes per timing value (+ two u32 of framing)
    std::size_t expected = 0;
    for (const auto& fp : fps) expected += 8 + fp.label.size() + 8 * fp.times.size();
    CHECK(bytes.size() == expected);

    const auto back = read_fingerprints(buffer);
    REQUIRE(back.size() == fps.size());
    for (std::size_t i = 0; i < fps.size(); ++i) {
        CHECK(back[i].label == fps[i].label);
        CHECK(back[i].times == fps[i].times);
    }
}

TEST_CASE("ip fingerprint matching") {
    IpFingerprintDb db;
    db.sites["siteA"] = {{"198.51.100.1"}, {{"cdn.x.com", {"203.0.113.1", "203.0.113.2"}}}};
    db.sites["siteB"] = {{"198.51.100.2"}, {{"cdn.y.com", {"203.0.113.2", "203.0.113.3"}}}};

    SUBCASE("unique primary match ranks first even with no secondaries") {
        IpQuery query;
        query.primary_ip = "198.51.100.1";
        const auto ranked = ip_fingerprint_match(query, db, true);
        REQUIRE(ranked.size() == 1);
        CHECK(ranked[0].site == "siteA");
        CHECK(ranked[0].score == 0.0);
    }
    SUBCASE("secondary overlap scores") {
        IpQuery query;
        query.secondary_ips = {"203.0.113.2", "203.0.113.3"};
        const auto ranked = ip_fingerprint_match(query, db, false);
        REQUIRE(ranked.size() == 2);
        CHECK(ranked[0].site == "siteB");
        CHECK(ranked[0].score == 1.0);
        CHECK(ranked[1].score == doctest::Approx(0.5));
    }
    SUBCASE("score ties order by site identifier") {
        IpQuery query;
        query.secondary_ips = {"203.0.113.2"};
        const auto ranked = ip_fingerprint_match(query, db, false);
        CHECK(ranked[0].site == "siteA");
        CHECK(ranked[0].score == ranked[1].score);
    }
}

TEST_CASE("ip ranking equals a brute-force oracle on random pools") {
    Rng rng(77);
    IpFingerprintDb db;
    for (int s = 0; s < 20; ++s) {
        SiteIpFingerprint fp;
        fp.primary_ips.insert("198.51.100." + std::to_string(s));
        const std::size_t n_domains = 1 + rng.bounded(3);
        for (std::size_t d = 0; d < n_domains; ++d) {
            auto& ips = fp.secondary["cdn" + std::to_string(d) + ".s" + std::to_string(s) + ".net"];
            const std::size_t n_ips = 1 + rng.bounded(4);
            for (std::size_t i = 0; i < n_ips; ++i)
                ips.insert("203.0.113." + std::to_string(rng.bounded(30)));
        }
        db.sites["site" + std::to_string(s)] = std::move(fp);
    }

    for (int iter = 0; iter < 50; ++iter) {
        IpQuery query;
        if (rng.bernoulli(0.5)) query.primary_ip = "198.51.100." + std::to_string(rng.bounded(25));
        const std::size_t n_obs = rng.bounded(6);
        for (std::size_t i = 0; i < n_obs; ++i)
            query.secondary_ips.insert("203.0.113." + std::to_string(rng.bounded(30)));
        const bool use_primary = rng.bernoulli(0.5);

        const auto ranked = ip_fingerprint_match(query, db, use_primary);

        // oracle: direct set arithmetic per site, then sort
        std::vector<RankedSite> expected;
        for (const auto& [site, fp] : db.sites) {
            if (use_primary && query.primary_ip && !fp.primary_ips.count(*query.primary_ip)) continue;
            std::size_t hits = 0;
            for (const auto& ip : query.secondary_ips) {
                bool found = false;
                for (const auto& [domain, ips] : fp.secondary) found = found || ips.count(ip) > 0;
                if (found) ++hits;
            }
            const double score = query.secondary_ips.empty()
                                     ? 0.0
                                     : static_cast<double>(hits) / query.secondary_ips.size();
            expected.push_back({site, score});
        }
        std::sort(expected.begin(), expected.end(), [](const RankedSite& a, const RankedSite& b) {
            return a.score != b.score ? a.score > b.score : a.site < b.site;
        });
        REQUIRE(ranked.size() == expected.size());
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            CHECK(ranked[i].site == expected[i].site);
            CHECK(ranked[i].score == expected[i].score);
        }
    }
}
