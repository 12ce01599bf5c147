#include "wfbench/adversary.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "wfbench/domain.hpp"
#include "wfbench/error.hpp"

namespace wfbench {

using nlohmann::ordered_json;

namespace {

ordered_json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return ordered_json::parse(in);
    } catch (const ordered_json::parse_error& e) {
        throw ValidationError(path + ": malformed JSON: " + e.what());
    }
}

void dump_json_file(const ordered_json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

}  // namespace

const std::vector<std::string>* PathMap::lookup(const Flow& flow) const {
    if (flow.sni) {
        const auto it = routes.find(*flow.sni);
        if (it != routes.end()) return &it->second;
    }
    const auto it = routes.find(flow.dst);
    return it != routes.end() ? &it->second : nullptr;
}

PathMap load_path_map_file(const std::string& path) {
    const auto j = parse_json_file(path);
    if (!j.contains("routes") || !j["routes"].is_object())
        throw ValidationError(path + ": missing 'routes' object");
    PathMap map;
    for (const auto& [key, value] : j["routes"].items()) {
        if (!value.is_array() || value.empty())
            throw ValidationError(path + ": route for '" + key + "' must be a non-empty array");
        map.routes[key] = value.get<std::vector<std::string>>();
    }
    return map;
}

void save_path_map_file(const PathMap& map, const std::string& path) {
    ordered_json j;
    j["routes"] = ordered_json::object();
    for (const auto& [key, route] : map.routes) j["routes"][key] = route;
    dump_json_file(j, path);
}

std::optional<Observation> as_filter(const Observation& obs, const std::string& as_id, const PathMap& paths) {
    Observation filtered;
    filtered.label = obs.label;
    filtered.meta = obs.meta;
    for (const auto& flow : obs.flows) {
        const auto* route = paths.lookup(flow);
        if (!route) continue;  // no traceroute info: lower-bound visibility
        if (std::find(route->begin(), route->end(), as_id) != route->end()) filtered.flows.push_back(flow);
    }
    if (filtered.flows.empty()) return std::nullopt;
    return filtered;
}

double AsStats::median_route_fraction() const {
    if (route_fractions.empty()) return 0.0;
    std::vector<double> sorted = route_fractions;
    std::sort(sorted.begin(), sorted.end());
    return sorted[(sorted.size() - 1) / 2];
}

std::map<std::string, AsStats> as_visibility_stats(const Dataset& ds, const PathMap& paths) {
    std::set<std::string> as_ids;
    for (const auto& [key, route] : paths.routes) as_ids.insert(route.begin(), route.end());

    std::map<std::string, AsStats> stats;
    for (const auto& as_id : as_ids) {
        auto& st = stats[as_id];
        std::set<std::string> seen_pages;
        std::vector<std::pair<const Observation*, double>> fractions;
        for (const auto& obs : ds.observations) {
            std::size_t routed = 0, visible = 0;
            for (const auto& flow : obs.flows) {
                const auto* route = paths.lookup(flow);
                if (!route) continue;
                ++routed;
                if (std::find(route->begin(), route->end(), as_id) != route->end()) ++visible;
            }
            if (visible > 0) seen_pages.insert(obs.label);
            if (routed > 0)
                fractions.emplace_back(&obs, static_cast<double>(visible) / static_cast<double>(routed));
        }
        for (const auto& [obs, fraction] : fractions)
            if (seen_pages.count(obs->label)) st.route_fractions.push_back(fraction);
        st.pages_seen_fraction =
            ds.class_list.empty() ? 0.0
                                  : static_cast<double>(seen_pages.size()) / static_cast<double>(ds.class_list.size());
    }
    return stats;
}

std::vector<NetFlowRecord> netflow_sample(const Observation& obs, const NetFlowParams& params) {
    if (params.sampling_n < 1) throw ValidationError("sampling_n must be >= 1");
    const auto merged = merge_packets(obs);

    struct Key {
        std::size_t flow_index;
        bool outgoing;
        bool operator<(const Key& other) const {
            return flow_index != other.flow_index ? flow_index < other.flow_index : outgoing < other.outgoing;
        }
    };
    // records in encounter order of their first kept packet
    std::map<Key, std::size_t> index_of;
    std::vector<NetFlowRecord> records;
    for (std::size_t pos = 0; pos < merged.size(); pos += params.sampling_n) {
        const auto& mp = merged[pos];
        const Key key{mp.flow_index, mp.packet.outgoing()};
        auto [it, inserted] = index_of.try_emplace(key, records.size());
        if (inserted) {
            NetFlowRecord r;
            r.src = obs.flows[mp.flow_index].src;
            r.dst = obs.flows[mp.flow_index].dst;
            r.outgoing = mp.packet.outgoing();
            r.t_start = mp.packet.time;
            r.t_end = mp.packet.time;
            records.push_back(std::move(r));
        }
        auto& r = records[it->second];
        r.packet_count += 1;
        r.byte_count += mp.packet.bytes();
        r.t_start = std::min(r.t_start, mp.packet.time);
        r.t_end = std::max(r.t_end, mp.packet.time);
    }
    return records;
}

NetFlowPadResult netflow_pad(const std::vector<NetFlowRecord>& records, const NetFlowPadTargets& targets,
                             std::uint64_t sampling_n) {
    if (records.empty()) throw ValidationError("cannot pad an empty record list");
    if (sampling_n < 1) throw ValidationError("sampling_n must be >= 1");
    if (targets.byte_target < 1 || targets.packet_target < 1)
        throw ValidationError("pad targets must be positive");

    NetFlowPadResult result;
    result.records = records;
    const std::uint64_t n = records.size();
    const std::uint64_t byte_target = (targets.byte_target + sampling_n - 1) / sampling_n;
    const std::uint64_t packet_target = (targets.packet_target + sampling_n - 1) / sampling_n;

    std::uint64_t bytes = 0, packets = 0;
    for (const auto& r : records) {
        bytes += r.byte_count;
        packets += r.packet_count;
    }

    auto spread = [&](std::uint64_t deficit, auto field) {
        const std::uint64_t each = deficit / n;
        const std::uint64_t extra_from = n - deficit % n;
        for (std::uint64_t i = 0; i < n; ++i)
            result.records[i].*field += each + (i >= extra_from ? 1 : 0);
    };

    if (bytes >= byte_target)
        result.byte_target_exceeded = bytes > byte_target;
    else
        spread(byte_target - bytes, &NetFlowRecord::byte_count);
    if (packets >= packet_target)
        result.packet_target_exceeded = packets > packet_target;
    else
        spread(packet_target - packets, &NetFlowRecord::packet_count);
    return result;
}

OwnerMap OwnerMap::default_google() {
    OwnerMap map;
    for (const char* d : {"google.com", "gstatic.com", "youtube.com", "doubleclick.com", "ggpht.com"})
        map.domains[d] = "Google";
    return map;
}

std::optional<std::string> OwnerMap::owner_of_domain(const std::string& domain) const {
    const auto reg = etld_plus_one(domain);
    if (!reg) return std::nullopt;
    const auto it = domains.find(*reg);
    if (it == domains.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> OwnerMap::owner_of(const Flow& flow) const {
    if (flow.sni) {
        if (auto owner = owner_of_domain(*flow.sni)) return owner;
    }
    const auto it = endpoints.find(flow.dst);
    if (it != endpoints.end()) return it->second;
    return std::nullopt;
}

OwnerMap load_owner_map_file(const std::string& path) {
    const auto j = parse_json_file(path);
    OwnerMap map;
    if (j.contains("domains"))
        for (const auto& [k, v] : j["domains"].items()) map.domains[k] = v.get<std::string>();
    if (j.contains("endpoints"))
        for (const auto& [k, v] : j["endpoints"].items()) map.endpoints[k] = v.get<std::string>();
    if (map.domains.empty() && map.endpoints.empty())
        throw ValidationError(path + ": owner map has no 'domains' or 'endpoints'");
    return map;
}

void save_owner_map_file(const OwnerMap& map, const std::string& path) {
    ordered_json j;
    j["domains"] = ordered_json::object();
    for (const auto& [k, v] : map.domains) j["domains"][k] = v;
    j["endpoints"] = ordered_json::object();
    for (const auto& [k, v] : map.endpoints) j["endpoints"][k] = v;
    dump_json_file(j, path);
}

TimingFingerprint google_filter(const Observation& obs, const OwnerMap& owners, const std::string& target_owner) {
    TimingFingerprint fp;
    fp.label = obs.label;
    for (const auto& flow : obs.flows) {
        const auto owner = owners.owner_of(flow);
        if (!owner || *owner != target_owner) continue;
        // ClientHello proxy: the flow's first outgoing packet
        for (const auto& p : flow.packets) {
            if (p.outgoing()) {
                fp.times.push_back(p.time);
                break;
            }
        }
    }
    std::sort(fp.times.begin(), fp.times.end());
    return fp;
}

Observation fingerprint_to_pseudo_observation(const TimingFingerprint& fp) {
    if (fp.times.empty()) throw ValidationError("cannot featurize an empty fingerprint");
    Flow flow;
    flow.src = "client";
    flow.dst = "fingerprint";
    for (double t : fp.times) flow.packets.push_back({t, 1});
    Observation obs;
    obs.label = fp.label;
    obs.flows.push_back(std::move(flow));
    return obs;
}

FeatureVector fingerprint_features(const TimingFingerprint& fp, const FeatureOptions& options) {
    return extract_features(fingerprint_to_pseudo_observation(fp), options);
}

void write_fingerprints(const std::vector<TimingFingerprint>& fps, std::ostream& out) {
    auto put_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    for (const auto& fp : fps) {
        put_u32(static_cast<std::uint32_t>(fp.label.size()));
        out.write(fp.label.data(), static_cast<std::streamsize>(fp.label.size()));
        put_u32(static_cast<std::uint32_t>(fp.times.size()));
        for (double t : fp.times) {
            std::uint64_t bits;
            std::memcpy(&bits, &t, sizeof bits);
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
            out.write(reinterpret_cast<const char*>(b), 8);
        }
    }
    if (!out) throw PipelineError("failed writing fingerprints");
}

std::vector<TimingFingerprint> read_fingerprints(std::istream& in) {
    auto get_u32 = [&](std::uint32_t& v) -> bool {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
        v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
            (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
        return true;
    };
    std::vector<TimingFingerprint> fps;
    std::uint32_t label_len;
    while (get_u32(label_len)) {
        TimingFingerprint fp;
        fp.label.resize(label_len);
        if (!in.read(fp.label.data(), label_len)) throw ValidationError("truncated fingerprint file");
        std::uint32_t count;
        if (!get_u32(count)) throw ValidationError("truncated fingerprint file");
        fp.times.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            unsigned char b[8];
            if (!in.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("truncated fingerprint file");
            std::uint64_t bits = 0;
            for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
            double t;
            std::memcpy(&t, &bits, sizeof t);
            fp.times.push_back(t);
        }
        fps.push_back(std::move(fp));
    }
    return fps;
}

void write_fingerprints_file(const std::vector<TimingFingerprint>& fps, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("cannot open '" + path + "' for writing");
    write_fingerprints(fps, out);
}

std::vector<TimingFingerprint> read_fingerprints_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return read_fingerprints(in);
}

std::set<std::string> SiteIpFingerprint::secondary_union() const {
    std::set<std::string> all;
    for (const auto& [domain, ips] : secondary) all.insert(ips.begin(), ips.end());
    return all;
}

IpFingerprintDb load_ip_db_file(const std::string& path) {
    const auto j = parse_json_file(path);
    IpFingerprintDb db;
    for (const auto& [site, entry] : j.items()) {
        SiteIpFingerprint fp;
        if (!entry.contains("primary") || !entry["primary"].is_array() || entry["primary"].empty())
            throw ValidationError(path + ": site '" + site + "' needs a non-empty 'primary' array");
        for (const auto& ip : entry["primary"]) fp.primary_ips.insert(ip.get<std::string>());
        if (entry.contains("secondary"))
            for (const auto& [domain, ips] : entry["secondary"].items())
                for (const auto& ip : ips) fp.secondary[domain].insert(ip.get<std::string>());
        db.sites[site] = std::move(fp);
    }
    if (db.sites.empty()) throw ValidationError(path + ": fingerprint database is empty");
    return db;
}

void save_ip_db_file(const IpFingerprintDb& db, const std::string& path) {
    ordered_json j = ordered_json::object();
    for (const auto& [site, fp] : db.sites) {
        ordered_json entry;
        entry["primary"] = std::vector<std::string>(fp.primary_ips.begin(), fp.primary_ips.end());
        entry["secondary"] = ordered_json::object();
        for (const auto& [domain, ips] : fp.secondary)
            entry["secondary"][domain] = std::vector<std::string>(ips.begin(), ips.end());
        j[site] = std::move(entry);
    }
    dump_json_file(j, path);
}

IpQuery make_ip_query(const Observation& obs) {
    IpQuery query;
    query.primary_ip = obs.flows.front().dst;
    for (std::size_t fi = 1; fi < obs.flows.size(); ++fi)
        if (obs.flows[fi].dst != *query.primary_ip) query.secondary_ips.insert(obs.flows[fi].dst);
    return query;
}

std::vector<RankedSite> ip_fingerprint_match(const IpQuery& query, const IpFingerprintDb& db, bool use_primary) {
    if (db.sites.empty()) throw ValidationError("fingerprint database is empty");
    std::vector<RankedSite> ranked;
    for (const auto& [site, fp] : db.sites) {
        if (use_primary && query.primary_ip && !fp.primary_ips.count(*query.primary_ip)) continue;
        double score = 0.0;
        if (!query.secondary_ips.empty()) {
            const auto site_ips = fp.secondary_union();
            std::size_t hits = 0;
            for (const auto& ip : query.secondary_ips) hits += site_ips.count(ip);
            score = static_cast<double>(hits) / static_cast<double>(query.secondary_ips.size());
        }
        ranked.push_back({site, score});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedSite& a, const RankedSite& b) {
        return a.score != b.score ? a.score > b.score : a.site < b.site;
    });
    return ranked;
}

}  // namespace wfbench
