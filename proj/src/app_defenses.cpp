#include "wfbench/app_defenses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "wfbench/domain.hpp"
#include "wfbench/error.hpp"
#include "wfbench/rng.hpp"

namespace wfbench {

using nlohmann::ordered_json;

PartyLabelResult label_parties(const ResourceLog& log) {
    PartyLabelResult result;
    result.log = log;
    const auto site = etld_plus_one(log.site_domain);
    for (auto& entry : result.log.entries) {
        const auto domain = etld_plus_one(entry.domain);
        if (!domain || !site) {
            entry.party = Party::kThird;
            ++result.unparseable;
        } else {
            entry.party = (*domain == *site) ? Party::kFirst : Party::kThird;
        }
    }
    return result;
}

std::optional<ResourceLog> filter_party(const ResourceLog& log, const PartyFilter& filter) {
    ResourceLog labeled = label_parties(log).log;
    ResourceLog filtered;
    filtered.label = log.label;
    filtered.site_domain = log.site_domain;
    for (const auto& entry : labeled.entries) {
        bool keep = false;
        switch (filter.kind) {
            case PartyFilter::Kind::kFirst:
                keep = entry.party == Party::kFirst;
                break;
            case PartyFilter::Kind::kThird:
                keep = entry.party == Party::kThird;
                break;
            case PartyFilter::Kind::kOwner: {
                if (!filter.owners) throw ValidationError("owner filter requires an owner map");
                const auto owner = filter.owners->owner_of_domain(entry.domain);
                keep = owner && *owner == filter.owner;
                break;
            }
        }
        if (keep) filtered.entries.push_back(entry);
    }
    if (filtered.entries.empty()) return std::nullopt;
    return filtered;
}

namespace {

const char* pad_target_name(PadTarget target) {
    switch (target) {
        case PadTarget::kResources: return "RESOURCES";
        case PadTarget::kTotalIncoming: return "TOTAL_IN";
        case PadTarget::kTotalOutgoing: return "TOTAL_OUT";
    }
    return "RESOURCES";
}

PadTarget pad_target_from_name(const std::string& name) {
    if (name == "RESOURCES") return PadTarget::kResources;
    if (name == "TOTAL_IN") return PadTarget::kTotalIncoming;
    if (name == "TOTAL_OUT") return PadTarget::kTotalOutgoing;
    throw ValidationError("unknown pad target '" + name + "'");
}

// smallest boundary >= value; clamps to the largest when none qualifies
std::uint64_t round_up(const std::vector<std::uint64_t>& boundaries, std::uint64_t value, std::size_t& clamped) {
    const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), value);
    if (it == boundaries.end()) {
        ++clamped;
        return boundaries.back();
    }
    return *it;
}

}  // namespace

PadScheme load_pad_scheme_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const ordered_json::parse_error& e) {
        throw ValidationError(path + ": malformed JSON: " + e.what());
    }
    PadScheme scheme;
    scheme.target = pad_target_from_name(j.value("target", std::string("RESOURCES")));
    if (!j.contains("boundaries") || !j["boundaries"].is_array() || j["boundaries"].empty())
        throw ValidationError(path + ": 'boundaries' must be a non-empty array");
    scheme.boundaries = j["boundaries"].get<std::vector<std::uint64_t>>();
    if (!std::is_sorted(scheme.boundaries.begin(), scheme.boundaries.end()))
        throw ValidationError(path + ": boundaries must be increasing");
    return scheme;
}

void save_pad_scheme_file(const PadScheme& scheme, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot open '" + path + "' for writing");
    ordered_json j;
    j["target"] = pad_target_name(scheme.target);
    j["boundaries"] = scheme.boundaries;
    out << j.dump(2) << '\n';
}

PadScheme fit_pad_scheme(std::span<const ResourceLog> logs, int n_groups, PadTarget target) {
    if (n_groups < 1) throw ValidationError("n_groups must be >= 1");
    if (logs.empty()) throw ValidationError("cannot fit a pad scheme on an empty dataset");

    std::vector<std::uint64_t> values;
    for (const auto& log : logs) {
        switch (target) {
            case PadTarget::kResources:
                for (const auto& e : log.entries) values.push_back(e.size_response);
                break;
            case PadTarget::kTotalIncoming:
                values.push_back(log.total_response_bytes());
                break;
            case PadTarget::kTotalOutgoing:
                values.push_back(log.total_request_bytes());
                break;
        }
    }
    std::sort(values.begin(), values.end());

    PadScheme scheme;
    scheme.target = target;
    const auto n = static_cast<double>(values.size());
    for (int k = 1; k <= n_groups; ++k) {
        auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(k) * n / n_groups));
        rank = std::clamp<std::size_t>(rank, 1, values.size());
        scheme.boundaries.push_back(values[rank - 1]);
    }
    scheme.boundaries.back() = values.back();
    scheme.boundaries.erase(std::unique(scheme.boundaries.begin(), scheme.boundaries.end()),
                            scheme.boundaries.end());
    scheme.collapsed = scheme.boundaries.size() < static_cast<std::size_t>(n_groups);
    return scheme;
}

PaddedLog pad_resources(const ResourceLog& log, const PadScheme& scheme, const PadResourcesOptions& options) {
    if (scheme.boundaries.empty()) throw ValidationError("pad scheme has no boundaries");
    PaddedLog result;
    result.log = log;
    for (auto& entry : result.log.entries) {
        entry.size_response = round_up(scheme.boundaries, entry.size_response, result.clamped);
        if (options.pad_requests)
            entry.size_request = round_up(scheme.boundaries, entry.size_request, result.clamped);
    }
    return result;
}

namespace {

// deficit spread: floor(d/n) everywhere, remainder one byte each on the
// last (d mod n) entries
void spread_deficit(std::vector<ResourceEntry>& entries, std::uint64_t deficit,
                    std::uint64_t ResourceEntry::* field) {
    if (deficit == 0 || entries.empty()) return;
    const std::uint64_t n = entries.size();
    const std::uint64_t each = deficit / n;
    const std::uint64_t extra_from = n - deficit % n;
    for (std::uint64_t i = 0; i < n; ++i) entries[i].*field += each + (i >= extra_from ? 1 : 0);
}

}  // namespace

PaddedLog pad_total_app(const ResourceLog& log, const PadScheme& scheme_in, const PadScheme& scheme_out) {
    if (scheme_in.target != PadTarget::kTotalIncoming || scheme_out.target != PadTarget::kTotalOutgoing)
        throw ValidationError("pad_total_app needs TOTAL_IN and TOTAL_OUT schemes");
    PaddedLog result;
    result.log = log;

    const std::uint64_t in_total = log.total_response_bytes();
    const std::uint64_t in_target = round_up(scheme_in.boundaries, in_total, result.clamped);
    if (in_target > in_total)
        spread_deficit(result.log.entries, in_target - in_total, &ResourceEntry::size_response);

    const std::uint64_t out_total = log.total_request_bytes();
    const std::uint64_t out_target = round_up(scheme_out.boundaries, out_total, result.clamped);
    if (out_target > out_total)
        spread_deficit(result.log.entries, out_target - out_total, &ResourceEntry::size_request);
    return result;
}

DummyPool load_dummy_pool_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const ordered_json::parse_error& e) {
        throw ValidationError(path + ": malformed JSON: " + e.what());
    }
    DummyPool pool;
    if (!j.contains("chains") || !j["chains"].is_array() || j["chains"].empty())
        throw ValidationError(path + ": 'chains' must be a non-empty array");
    for (const auto& jc : j["chains"]) {
        std::vector<DummyChainStep> chain;
        for (const auto& js : jc) {
            if (!js.is_array() || js.size() != 3)
                throw ValidationError(path + ": chain step must be [size_req, size_resp, offset]");
            DummyChainStep step;
            step.size_request = js[0].get<std::uint64_t>();
            step.size_response = js[1].get<std::uint64_t>();
            step.offset = js[2].get<double>();
            if (step.size_request < 1 || step.size_response < 1)
                throw ValidationError(path + ": chain step sizes must be >= 1");
            chain.push_back(step);
        }
        if (chain.empty()) throw ValidationError(path + ": empty chain");
        pool.chains.push_back(std::move(chain));
    }
    return pool;
}

void save_dummy_pool_file(const DummyPool& pool, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot open '" + path + "' for writing");
    ordered_json j;
    j["chains"] = ordered_json::array();
    for (const auto& chain : pool.chains) {
        ordered_json jc = ordered_json::array();
        for (const auto& step : chain) jc.push_back({step.size_request, step.size_response, step.offset});
        j["chains"].push_back(std::move(jc));
    }
    out << j.dump() << '\n';
}

ResourceLog inject_dummy_resources(const ResourceLog& log, const DummyPool& pool, const InjectParams& params) {
    if (params.p < 0.0 || params.p > 1.0) throw ValidationError("p must be in [0, 1]");
    if (params.m < 0) throw ValidationError("m must be >= 0");
    if (pool.chains.empty()) throw ValidationError("dummy pool is empty");

    double t_min = log.entries.front().t_request, t_max = log.entries.front().t_response;
    for (const auto& e : log.entries) {
        t_min = std::min(t_min, e.t_request);
        t_max = std::max(t_max, e.t_response);
    }

    ResourceLog defended = log;
    Rng rng(params.seed);
    for (int i = 0; i < params.m; ++i) {
        const auto& chain = pool.chains[rng.bounded(pool.chains.size())];
        const bool keep = rng.bernoulli(params.p);
        const double anchor = rng.uniform(t_min, t_max);  // draw regardless so replay is stable per candidate
        if (!keep) continue;
        for (const auto& step : chain) {
            ResourceEntry entry;
            entry.t_request = anchor + step.offset;
            entry.t_response = entry.t_request;
            entry.size_request = step.size_request;
            entry.size_response = step.size_response;
            entry.domain = params.domain;
            entry.url = "https://" + params.domain + "/asset";
            entry.dummy = true;
            defended.entries.push_back(std::move(entry));
        }
    }
    // interleave by request time; stable, so surviving entries keep their
    // relative order
    std::stable_sort(defended.entries.begin(), defended.entries.end(),
                     [](const ResourceEntry& a, const ResourceEntry& b) { return a.t_request < b.t_request; });
    return defended;
}

AppOverhead app_overhead(const ResourceLog& original, const ResourceLog& defended) {
    // padding keeps entry order, dummy injection re-sorts by request time;
    // stable-sorting both sides by time pairs surviving entries either way
    // (padding never changes times)
    const auto by_time = [](const ResourceEntry& a, const ResourceEntry& b) {
        return a.t_request < b.t_request;
    };
    std::vector<ResourceEntry> originals = original.entries;
    std::stable_sort(originals.begin(), originals.end(), by_time);
    std::uint64_t dummy_bytes = 0;
    std::vector<ResourceEntry> survivors;
    survivors.reserve(originals.size());
    for (const auto& entry : defended.entries) {
        if (entry.dummy)
            dummy_bytes += entry.size_request + entry.size_response;
        else
            survivors.push_back(entry);
    }
    std::stable_sort(survivors.begin(), survivors.end(), by_time);
    if (survivors.size() != originals.size())
        throw ValidationError("defended log does not preserve the original entries");

    std::vector<double> added;
    added.reserve(originals.size());
    for (std::size_t i = 0; i < originals.size(); ++i) {
        const auto& orig = originals[i];
        const auto& entry = survivors[i];
        if (entry.size_request < orig.size_request || entry.size_response < orig.size_response)
            throw ValidationError("defended entry shrank");
        added.push_back(static_cast<double>((entry.size_request - orig.size_request) +
                                            (entry.size_response - orig.size_response)));
    }

    AppOverhead result;
    double sum = 0.0;
    for (double a : added) sum += a;
    result.per_page_bytes = static_cast<std::uint64_t>(sum) + dummy_bytes;
    if (!added.empty()) {
        result.per_request_mean = sum / static_cast<double>(added.size());
        std::sort(added.begin(), added.end());
        result.per_request_median = added[(added.size() - 1) / 2];
    }
    return result;
}

}  // namespace wfbench
