#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wfbench/adversary.hpp"
#include "wfbench/resource_log.hpp"

namespace wfbench {

// Tags every entry FIRST when its domain shares the page's eTLD+1, THIRD
// otherwise. Unparseable domains are tagged THIRD; the returned counter
// reports how many.
struct PartyLabelResult {
    ResourceLog log;
    std::size_t unparseable = 0;
};
PartyLabelResult label_parties(const ResourceLog& log);

// FIRST / THIRD keep the corresponding party partition; an owner name
// keeps entries whose domain the owner map attributes to that owner
// (e.g. a Google-only view). nullopt = no visible traffic.
struct PartyFilter {
    enum class Kind { kFirst, kThird, kOwner } kind = Kind::kFirst;
    std::string owner;             // for kOwner
    const OwnerMap* owners = nullptr;
};
std::optional<ResourceLog> filter_party(const ResourceLog& log, const PartyFilter& filter);

enum class PadTarget { kResources, kTotalIncoming, kTotalOutgoing };

// Sorted group maxima fitted as equal-density quantiles; padding rounds a
// value up to the smallest boundary at or above it.
// JSON: {"target": "RESOURCES", "boundaries": [5580, 21000, 3600000]}
struct PadScheme {
    PadTarget target = PadTarget::kResources;
    std::vector<std::uint64_t> boundaries;  // strictly increasing, last = observed max
    bool collapsed = false;                 // n_groups exceeded the distinct value count
};

PadScheme load_pad_scheme_file(const std::string& path);
void save_pad_scheme_file(const PadScheme& scheme, const std::string& path);

// Fits n_groups equal-density boundaries over the dataset: all response
// sizes for kResources, per-log response totals for kTotalIncoming,
// per-log request totals for kTotalOutgoing. Boundaries are nearest-rank
// quantiles at k/N, de-duplicated; the last boundary is the maximum.
PadScheme fit_pad_scheme(std::span<const ResourceLog> logs, int n_groups, PadTarget target);

struct PadResourcesOptions {
    bool pad_requests = true;  // pad request sizes with the same scheme
};

struct PaddedLog {
    ResourceLog log;
    std::size_t clamped = 0;  // values above the largest boundary (scheme/dataset mismatch)
};

// Rounds each response (and request) size up to its scheme boundary.
PaddedLog pad_resources(const ResourceLog& log, const PadScheme& scheme, const PadResourcesOptions& options = {});

// Pads the log's total incoming (response) and outgoing (request) sizes
// up to their scheme boundaries, spreading each deficit as evenly as
// possible across entries with the remainder on the last ones.
PaddedLog pad_total_app(const ResourceLog& log, const PadScheme& scheme_in, const PadScheme& scheme_out);

// Chains of injectable resources; a chain step is (request size,
// response size, offset seconds from the chain anchor).
// JSON: {"chains": [[[300, 12000, 0.0], [200, 4000, 0.05]]]}
struct DummyChainStep {
    std::uint64_t size_request = 0;
    std::uint64_t size_response = 0;
    double offset = 0.0;
};

struct DummyPool {
    std::vector<std::vector<DummyChainStep>> chains;
};

DummyPool load_dummy_pool_file(const std::string& path);
void save_dummy_pool_file(const DummyPool& pool, const std::string& path);

struct InjectParams {
    double p = 0.5;        // keep probability per candidate chain
    int m = 10;            // candidate chains drawn (with replacement)
    std::uint64_t seed = 0;
    // The pool format carries sizes only; injected entries need a domain
    // for party/owner views. Popular third-party static assets mimic the
    // most plausible chaff.
    std::string domain = "gstatic.com";
};

// Draws m candidate chains, keeps each with probability p, and anchors
// every kept chain at a uniform time within the log's duration. Injected
// entries are flagged dummy in memory but serialize like any other.
ResourceLog inject_dummy_resources(const ResourceLog& log, const DummyPool& pool, const InjectParams& params);

struct AppOverhead {
    double per_request_mean = 0.0;    // bytes added per original entry
    double per_request_median = 0.0;
    std::uint64_t per_page_bytes = 0; // total added bytes (padding + dummies)
};

// Added bytes of a defended log relative to its original: padding on the
// surviving entries plus all dummy bytes. Errors when an entry shrank.
AppOverhead app_overhead(const ResourceLog& original, const ResourceLog& defended);

}  // namespace wfbench
