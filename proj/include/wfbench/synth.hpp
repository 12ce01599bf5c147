#pragma once

#include <cstdint>
#include <vector>

#include "wfbench/adversary.hpp"
#include "wfbench/resource_log.hpp"
#include "wfbench/trace.hpp"

namespace wfbench {

// Desk-scale synthetic corpus: per class, a signature (flow count,
// per-flow size/volume/timing parameters, endpoint pools) is drawn once;
// samples are noisy realizations of it. overlap linearly interpolates
// every signature value toward a common center: 0 keeps the signatures
// disjoint, 1 makes all classes draw from one distribution, so attack
// accuracy should span separable to chance.
struct SynthParams {
    int num_classes = 20;
    int samples_per_class = 20;
    int min_flows = 3;
    int max_flows = 8;
    int min_packets = 20;   // per flow
    int max_packets = 60;
    double overlap = 0.0;
    double google_fraction = 0.3;  // probability a secondary flow uses a Google-owned SNI
    std::uint64_t seed = 1;
};

// Traces plus the consistent side-channel artifacts: resource logs whose
// entry sizes sum to the per-flow trace volumes, a path map with the
// client AS on every route and a Google AS on google-tagged routes, the
// Google owner map, and an IP fingerprint database with per-site primary
// IPs and partially shared secondary pools.
struct SynthBundle {
    Dataset dataset;
    std::vector<ResourceLog> logs;  // one per observation, same order
    PathMap paths;
    OwnerMap owners;
    IpFingerprintDb ip_db;
};

inline constexpr const char* kSynthClientAs = "AS-CLIENT";
inline constexpr const char* kSynthGoogleAs = "AS-G";

SynthBundle generate_synthetic(const SynthParams& params);

}  // namespace wfbench
