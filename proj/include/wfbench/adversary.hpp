#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wfbench/features.hpp"
#include "wfbench/trace.hpp"

namespace wfbench {

// Destination -> ordered AS path, keyed by SNI when present, else by the
// destination endpoint.
// JSON: {"routes": {"example.com": ["AS1299", "AS15169"], "203.0.113.7": [...]}}
struct PathMap {
    std::map<std::string, std::vector<std::string>> routes;

    const std::vector<std::string>* lookup(const Flow& flow) const;
};

PathMap load_path_map_file(const std::string& path);
void save_path_map_file(const PathMap& map, const std::string& path);

// Keeps exactly the flows whose route contains as_id. Flows without a
// route entry are dropped (lower-bound visibility). nullopt = the AS sees
// nothing of this page visit ("page unseen"), not a failure.
std::optional<Observation> as_filter(const Observation& obs, const std::string& as_id, const PathMap& paths);

struct AsStats {
    double pages_seen_fraction = 0.0;
    // visible flows / flows with routes, one value per observation of a
    // seen page
    std::vector<double> route_fractions;

    double median_route_fraction() const;
};

// Visibility of every AS present in the path map; a page counts as seen
// when the AS observes at least one flow of at least one of its visits.
std::map<std::string, AsStats> as_visibility_stats(const Dataset& ds, const PathMap& paths);

// Deterministic 1-in-N packet sampling: sampling_n = 1 keeps everything,
// 10 keeps 10%, and so on. No randomness.
struct NetFlowParams {
    std::uint64_t sampling_n = 1;
};

// Samples the merged global packet order at positions == 0 (mod n) and
// aggregates kept packets into unidirectional records keyed by
// (flow src, dst, direction). Flows with no kept packets produce no
// record; a fully sampled-out observation yields an empty list.
std::vector<NetFlowRecord> netflow_sample(const Observation& obs, const NetFlowParams& params);

struct NetFlowPadTargets {
    std::uint64_t byte_target = 22'000'000;
    std::uint64_t packet_target = 25'000;
};

struct NetFlowPadResult {
    std::vector<NetFlowRecord> records;
    // set when the corresponding total already exceeded its effective
    // target, in which case that dimension is left unchanged
    bool byte_target_exceeded = false;
    bool packet_target_exceeded = false;
};

// Pads record totals up to ceil(target / sampling_n) (targets shrink with
// the sampling rate); deficits are spread as evenly as possible across
// records with the remainder going to the last ones. No record shrinks.
NetFlowPadResult netflow_pad(const std::vector<NetFlowRecord>& records, const NetFlowPadTargets& targets,
                             std::uint64_t sampling_n);

// Domain (eTLD+1) and endpoint ownership.
// JSON: {"domains": {"gstatic.com": "Google"}, "endpoints": {"1.2.3.4": "Google"}}
struct OwnerMap {
    std::map<std::string, std::string> domains;    // eTLD+1 -> owner
    std::map<std::string, std::string> endpoints;  // endpoint -> owner

    static OwnerMap default_google();
    std::optional<std::string> owner_of(const Flow& flow) const;
    std::optional<std::string> owner_of_domain(const std::string& domain) const;
};

OwnerMap load_owner_map_file(const std::string& path);
void save_owner_map_file(const OwnerMap& map, const std::string& path);

// Send times of the first outgoing packet (the ClientHello proxy) of
// every flow owned by one entity. May be empty: the site uses no
// resources of that owner.
struct TimingFingerprint {
    std::string label;
    std::vector<double> times;  // sorted ascending
};

TimingFingerprint google_filter(const Observation& obs, const OwnerMap& owners, const std::string& target_owner);

// Standard featurization of a fingerprint: outgoing unit-size packets at
// the fingerprint times. Timing and count groups carry the signal.
Observation fingerprint_to_pseudo_observation(const TimingFingerprint& fp);
FeatureVector fingerprint_features(const TimingFingerprint& fp, const FeatureOptions& options = {});

// Binary fingerprint records: u32 label length, label bytes, u32 count,
// count little-endian f64 times. Payload per record is label + 8*count
// bytes, matching the storage-cost accounting.
void write_fingerprints(const std::vector<TimingFingerprint>& fps, std::ostream& out);
std::vector<TimingFingerprint> read_fingerprints(std::istream& in);
void write_fingerprints_file(const std::vector<TimingFingerprint>& fps, const std::string& path);
std::vector<TimingFingerprint> read_fingerprints_file(const std::string& path);

// Per-site IP fingerprints from repeated DNS resolutions.
// JSON: {"siteA": {"primary": ["198.51.100.1"], "secondary": {"cdn.x.com": ["..."]}}}
struct SiteIpFingerprint {
    std::set<std::string> primary_ips;
    std::map<std::string, std::set<std::string>> secondary;  // domain -> IPs

    std::set<std::string> secondary_union() const;
};

struct IpFingerprintDb {
    std::map<std::string, SiteIpFingerprint> sites;
};

IpFingerprintDb load_ip_db_file(const std::string& path);
void save_ip_db_file(const IpFingerprintDb& db, const std::string& path);

struct IpQuery {
    std::optional<std::string> primary_ip;
    std::set<std::string> secondary_ips;
};

// Query derived from an observation: the first flow's destination is the
// primary IP, every other distinct destination is a secondary.
IpQuery make_ip_query(const Observation& obs);

struct RankedSite {
    std::string site;
    double score = 0.0;
};

// Candidates are the sites whose primary set contains the observed
// primary (when use_primary and one is present), else all sites. Score =
// |observed secondaries ∩ site secondaries| / |observed secondaries|
// (0 when none were observed). Sorted by score descending, ties by site
// identifier ascending.
std::vector<RankedSite> ip_fingerprint_match(const IpQuery& query, const IpFingerprintDb& db, bool use_primary);

}  // namespace wfbench
