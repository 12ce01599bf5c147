#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wfbench/resource_log.hpp"
#include "wfbench/trace.hpp"

namespace wfbench {

// Fixed 601-dimension trace statistics vector, computed on the merged
// global packet order of an observation:
//   A counts        (5)   packet totals and direction fractions
//   B volumes       (14)  byte totals, fractions, |size| mean/std/max
//   C timing        (25)  duration, inter-arrival stats, timestamp percentiles
//   D edges         (4)   direction counts in the first/last 30 packets
//   E concentration (26)  outgoing counts per 20-packet chunk
//   F rate          (5)   packets per 1-second bucket
//   G ordering      (4)   mean/std of global indices per direction
//   H bursts        (6)   maximal runs of consecutive outgoing packets
//   I size histogram(512) 64-byte bins over [0,16384), incoming then outgoing
// Percentiles are nearest-rank; std is the population formula; statistics
// of an empty series are 0.
inline constexpr std::size_t kFeatureCount = 601;
inline constexpr const char* kFeatureSchemaVersion = "wf-features-v1";

enum class FeatureGroup { kCounts, kVolumes, kTiming, kEdges, kConcentration, kRate, kOrdering, kBursts, kHistogram };

struct FeatureSchema {
    std::vector<std::string> names;  // kFeatureCount entries, stable order
    std::string version;
};

const FeatureSchema& feature_schema();
FeatureGroup feature_group(std::size_t index);

struct FeatureOptions {
    // Compute timing groups (C and F) with all timestamps forced to 0;
    // they collapse to constants and carry no signal.
    bool discard_timings = false;
};

struct FeatureVector {
    std::vector<double> values;
    std::string schema_version = kFeatureSchemaVersion;
};

struct FeatureMatrix {
    std::string schema_version = kFeatureSchemaVersion;
    std::vector<std::string> labels;           // one per row
    std::vector<std::vector<double>> rows;     // row-major, kFeatureCount wide
};

FeatureVector extract_features(const Observation& obs, const FeatureOptions& options = {});

// Featurizes every observation; row order equals dataset order.
FeatureMatrix featurize_dataset(const Dataset& ds, const FeatureOptions& options = {});

// CSV export: header "label,<name>,...", one row per observation.
void write_feature_csv(const FeatureMatrix& m, std::ostream& out);

// NetFlow summary of one unidirectional (flow, direction) aggregate.
struct NetFlowRecord {
    std::string src;
    std::string dst;
    bool outgoing = false;
    std::uint64_t packet_count = 0;
    std::uint64_t byte_count = 0;  // unsigned sum of |size|
    double t_start = 0.0;
    double t_end = 0.0;
};

// Each record becomes a single pseudo-packet (t_start, +byte_count) in
// one pseudo-flow; direction information is deliberately discarded (all
// pseudo-packets outgoing), so direction-split features degenerate
// instead of misleading. Inter-packet timings become inter-flow timings.
Observation netflow_to_pseudo_observation(const std::vector<NetFlowRecord>& records, const std::string& label);

// Each entry yields an outgoing packet (t_request, +size_request) and an
// incoming packet (t_response, -size_response); one flow per distinct
// entry domain. Zero sizes map to 1 byte so the packet invariant holds
// while still recording that a request happened. Application-layer
// experiments featurize the result with discard_timings on.
Observation resource_log_to_pseudo_observation(const ResourceLog& log);

}  // namespace wfbench
