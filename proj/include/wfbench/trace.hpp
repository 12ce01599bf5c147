#pragma once

#include <cstdint>
#include <cstdlib>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wfbench {

// One observed packet. Times are seconds relative to the first packet of
// the observation; positive sizes flow client->server, negative sizes
// server->client. size == 0 is invalid.
struct Packet {
    double time = 0.0;
    std::int64_t size = 0;

    bool outgoing() const { return size > 0; }
    std::uint64_t bytes() const { return static_cast<std::uint64_t>(size < 0 ? -size : size); }
};

// Packets sharing one connection. packets are kept sorted by time;
// ties preserve input order.
struct Flow {
    std::string src;
    std::string dst;
    std::optional<std::string> sni;
    std::vector<Packet> packets;
};

// All flows generated by one page visit, labeled with the site.
struct Observation {
    std::string label;
    std::vector<Flow> flows;
    std::map<std::string, std::string> meta;

    std::size_t packet_count() const;
    std::uint64_t total_bytes() const;  // sum of |size|
};

struct Dataset {
    std::vector<Observation> observations;
    std::vector<std::string> class_list;  // sorted distinct labels
};

struct MergedPacket {
    std::size_t flow_index;
    Packet packet;
};

// Global packet order of an observation: non-decreasing time, ties broken
// by flow order as stored, then intra-flow order.
std::vector<MergedPacket> merge_packets(const Observation& obs);

// Validates a single observation (label non-empty, flows/packets non-empty,
// sizes nonzero, times finite and >= 0). Throws ValidationError.
void validate_observation(const Observation& obs, const std::string& context);

// Builds a Dataset from observations: validates each, computes class_list.
// min_per_class = 2 matches the stratified-folding requirement; pass 1 for
// intermediate (post-view) datasets that get re-checked later.
Dataset make_dataset(std::vector<Observation> observations, std::size_t min_per_class = 2);

// Trace JSONL, one observation per line:
// {"label": "...", "meta": {...}, "flows": [{"src": "...", "dst": "...",
//  "sni": "..."|null, "packets": [[t, size], ...]}]}
// Ingestion normalizes times by the observation minimum and re-sorts
// packets by time within each flow.
Dataset load_dataset(std::istream& in);
Dataset load_dataset_file(const std::string& path);
void save_dataset(const Dataset& ds, std::ostream& out);
void save_dataset_file(const Dataset& ds, const std::string& path);

}  // namespace wfbench
