#include "wfbench/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "wfbench/error.hpp"

namespace wfbench {

namespace {

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

double max_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return *std::max_element(v.begin(), v.end());
}

double min_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return *std::min_element(v.begin(), v.end());
}

double sum_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

// Nearest-rank percentile of an unsorted series; empty series -> 0.
double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
    rank = std::clamp<std::size_t>(rank, 1, v.size());
    return v[rank - 1];
}

std::vector<double> diffs(const std::vector<double>& times) {
    std::vector<double> d;
    if (times.size() < 2) return d;
    d.reserve(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) d.push_back(times[i] - times[i - 1]);
    return d;
}

void push_interarrival_stats(std::vector<double>& out, const std::vector<double>& times) {
    const auto d = diffs(times);
    out.push_back(mean_of(d));
    out.push_back(population_std(d));
    out.push_back(max_of(d));
    out.push_back(percentile(d, 75.0));
}

void push_timestamp_percentiles(std::vector<double>& out, const std::vector<double>& times) {
    for (double p : {25.0, 50.0, 75.0, 100.0}) out.push_back(percentile(times, p));
}

std::vector<std::string> build_names() {
    std::vector<std::string> names;
    names.reserve(kFeatureCount);
    // A
    names.insert(names.end(), {"packet_count", "packet_count_incoming", "packet_count_outgoing",
                               "packet_frac_incoming", "packet_frac_outgoing"});
    // B
    names.insert(names.end(), {"bytes_total", "bytes_incoming", "bytes_outgoing", "bytes_frac_incoming",
                               "bytes_frac_outgoing"});
    for (const char* dir : {"", "_incoming", "_outgoing"})
        for (const char* stat : {"mean", "std", "max"}) names.push_back(std::string("size_") + stat + dir);
    // C
    names.push_back("duration");
    for (const char* dir : {"", "_incoming", "_outgoing"})
        for (const char* stat : {"mean", "std", "max", "p75"}) names.push_back(std::string("iat_") + stat + dir);
    for (const char* dir : {"", "_incoming", "_outgoing"})
        for (const char* p : {"25", "50", "75", "100"}) names.push_back(std::string("ts_p") + p + dir);
    // D
    names.insert(names.end(),
                 {"first30_incoming", "first30_outgoing", "last30_incoming", "last30_outgoing"});
    // E
    for (const char* stat : {"mean", "std", "median", "min", "max", "sum"})
        names.push_back(std::string("chunk_outgoing_") + stat);
    for (int i = 0; i < 20; ++i) names.push_back("chunk_outgoing_" + std::to_string(i));
    // F
    for (const char* stat : {"mean", "std", "median", "min", "max"})
        names.push_back(std::string("rate_") + stat);
    // G
    names.insert(names.end(), {"order_mean_outgoing", "order_std_outgoing", "order_mean_incoming",
                               "order_std_incoming"});
    // H
    names.insert(names.end(),
                 {"burst_count", "burst_len_max", "burst_len_mean", "bursts_gt5", "bursts_gt10", "bursts_gt15"});
    // I
    for (const char* dir : {"incoming", "outgoing"})
        for (int b = 0; b < 256; ++b) names.push_back(std::string("hist_") + dir + "_" + std::to_string(b));
    return names;
}

}  // namespace

const FeatureSchema& feature_schema() {
    static const FeatureSchema schema{build_names(), kFeatureSchemaVersion};
    return schema;
}

FeatureGroup feature_group(std::size_t index) {
    if (index < 5) return FeatureGroup::kCounts;
    if (index < 19) return FeatureGroup::kVolumes;
    if (index < 44) return FeatureGroup::kTiming;
    if (index < 48) return FeatureGroup::kEdges;
    if (index < 74) return FeatureGroup::kConcentration;
    if (index < 79) return FeatureGroup::kRate;
    if (index < 83) return FeatureGroup::kOrdering;
    if (index < 89) return FeatureGroup::kBursts;
    return FeatureGroup::kHistogram;
}

FeatureVector extract_features(const Observation& obs, const FeatureOptions& options) {
    const auto merged = merge_packets(obs);
    if (merged.empty()) throw ValidationError("cannot featurize an observation without packets");

    const std::size_t n = merged.size();
    std::vector<double> sizes, sizes_in, sizes_out;
    std::vector<double> times, times_in, times_out;
    sizes.reserve(n);
    times.reserve(n);
    for (const auto& mp : merged) {
        const double sz = static_cast<double>(mp.packet.bytes());
        const double t = options.discard_timings ? 0.0 : mp.packet.time;
        sizes.push_back(sz);
        times.push_back(t);
        if (mp.packet.outgoing()) {
            sizes_out.push_back(sz);
            times_out.push_back(t);
        } else {
            sizes_in.push_back(sz);
            times_in.push_back(t);
        }
    }
    const auto n_in = static_cast<double>(sizes_in.size());
    const auto n_out = static_cast<double>(sizes_out.size());

    std::vector<double> f;
    f.reserve(kFeatureCount);

    // A: counts
    f.push_back(static_cast<double>(n));
    f.push_back(n_in);
    f.push_back(n_out);
    f.push_back(n_in / static_cast<double>(n));
    f.push_back(n_out / static_cast<double>(n));

    // B: volumes
    const double bytes_in = sum_of(sizes_in);
    const double bytes_out = sum_of(sizes_out);
    const double bytes_total = bytes_in + bytes_out;
    f.push_back(bytes_total);
    f.push_back(bytes_in);
    f.push_back(bytes_out);
    f.push_back(bytes_total > 0 ? bytes_in / bytes_total : 0.0);
    f.push_back(bytes_total > 0 ? bytes_out / bytes_total : 0.0);
    for (const auto* s : {&sizes, &sizes_in, &sizes_out}) {
        f.push_back(mean_of(*s));
        f.push_back(population_std(*s));
        f.push_back(max_of(*s));
    }

    // C: timing
    const double duration = times.empty() ? 0.0 : times.back() - times.front();
    f.push_back(duration);
    push_interarrival_stats(f, times);
    push_interarrival_stats(f, times_in);
    push_interarrival_stats(f, times_out);
    push_timestamp_percentiles(f, times);
    push_timestamp_percentiles(f, times_in);
    push_timestamp_percentiles(f, times_out);

    // D: edges
    const std::size_t edge = std::min<std::size_t>(30, n);
    double first_in = 0, first_out = 0, last_in = 0, last_out = 0;
    for (std::size_t i = 0; i < edge; ++i) (merged[i].packet.outgoing() ? first_out : first_in) += 1;
    for (std::size_t i = n - edge; i < n; ++i) (merged[i].packet.outgoing() ? last_out : last_in) += 1;
    f.insert(f.end(), {first_in, first_out, last_in, last_out});

    // E: concentration over 20-packet chunks
    std::vector<double> chunks;
    for (std::size_t start = 0; start < n; start += 20) {
        double out_count = 0;
        for (std::size_t i = start; i < std::min(start + 20, n); ++i)
            if (merged[i].packet.outgoing()) out_count += 1;
        chunks.push_back(out_count);
    }
    f.push_back(mean_of(chunks));
    f.push_back(population_std(chunks));
    f.push_back(percentile(chunks, 50.0));
    f.push_back(min_of(chunks));
    f.push_back(max_of(chunks));
    f.push_back(sum_of(chunks));
    for (std::size_t i = 0; i < 20; ++i) f.push_back(i < chunks.size() ? chunks[i] : 0.0);

    // F: packets per 1-second bucket; zero-duration traces have no rate series
    std::vector<double> rate;
    if (duration > 0.0) {
        rate.assign(static_cast<std::size_t>(std::floor(duration)) + 1, 0.0);
        for (double t : times) {
            auto b = static_cast<std::size_t>(std::floor(t));
            if (b >= rate.size()) b = rate.size() - 1;
            rate[b] += 1;
        }
    }
    f.push_back(mean_of(rate));
    f.push_back(population_std(rate));
    f.push_back(percentile(rate, 50.0));
    f.push_back(min_of(rate));
    f.push_back(max_of(rate));

    // G: ordering (0-based global indices per direction)
    std::vector<double> idx_out, idx_in;
    for (std::size_t i = 0; i < n; ++i)
        (merged[i].packet.outgoing() ? idx_out : idx_in).push_back(static_cast<double>(i));
    f.push_back(mean_of(idx_out));
    f.push_back(population_std(idx_out));
    f.push_back(mean_of(idx_in));
    f.push_back(population_std(idx_in));

    // H: maximal runs of consecutive outgoing packets
    std::vector<double> bursts;
    std::size_t run = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (merged[i].packet.outgoing()) {
            ++run;
        } else if (run > 0) {
            bursts.push_back(static_cast<double>(run));
            run = 0;
        }
    }
    if (run > 0) bursts.push_back(static_cast<double>(run));
    f.push_back(static_cast<double>(bursts.size()));
    f.push_back(max_of(bursts));
    f.push_back(mean_of(bursts));
    for (double threshold : {5.0, 10.0, 15.0})
        f.push_back(static_cast<double>(std::count_if(bursts.begin(), bursts.end(),
                                                      [threshold](double b) { return b > threshold; })));

    // I: 64-byte size histogram over [0, 16384), incoming then outgoing
    std::vector<double> hist(512, 0.0);
    for (const auto& mp : merged) {
        auto bin = static_cast<std::size_t>(mp.packet.bytes() / 64);
        if (bin > 255) bin = 255;
        hist[(mp.packet.outgoing() ? 256 : 0) + bin] += 1;
    }
    f.insert(f.end(), hist.begin(), hist.end());

    for (double x : f)
        if (!std::isfinite(x)) throw PipelineError("non-finite feature value");
    return FeatureVector{std::move(f)};
}

FeatureMatrix featurize_dataset(const Dataset& ds, const FeatureOptions& options) {
    FeatureMatrix m;
    m.labels.reserve(ds.observations.size());
    m.rows.reserve(ds.observations.size());
    for (const auto& obs : ds.observations) {
        m.labels.push_back(obs.label);
        m.rows.push_back(extract_features(obs, options).values);
    }
    return m;
}

void write_feature_csv(const FeatureMatrix& m, std::ostream& out) {
    out << "label";
    for (const auto& name : feature_schema().names) out << ',' << name;
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        out << m.labels[r];
        for (double v : m.rows[r]) {
            const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',';
            out.write(buf, len);
        }
        out << '\n';
    }
}

Observation netflow_to_pseudo_observation(const std::vector<NetFlowRecord>& records, const std::string& label) {
    if (records.empty()) throw ValidationError("cannot build a pseudo-observation from zero NetFlow records");
    Flow flow;
    flow.src = "netflow";
    flow.dst = "netflow";
    for (const auto& r : records)
        flow.packets.push_back({r.t_start, static_cast<std::int64_t>(r.byte_count == 0 ? 1 : r.byte_count)});
    std::stable_sort(flow.packets.begin(), flow.packets.end(),
                     [](const Packet& a, const Packet& b) { return a.time < b.time; });
    Observation obs;
    obs.label = label;
    obs.flows.push_back(std::move(flow));
    return obs;
}

Observation resource_log_to_pseudo_observation(const ResourceLog& log) {
    if (log.entries.empty()) throw ValidationError("cannot build a pseudo-observation from an empty resource log");
    std::map<std::string, std::size_t> flow_of_domain;
    Observation obs;
    obs.label = log.label;
    for (const auto& e : log.entries) {
        auto [it, inserted] = flow_of_domain.try_emplace(e.domain, obs.flows.size());
        if (inserted) {
            Flow flow;
            flow.src = "client";
            flow.dst = e.domain;
            flow.sni = e.domain;
            obs.flows.push_back(std::move(flow));
        }
        auto& packets = obs.flows[it->second].packets;
        const auto req = static_cast<std::int64_t>(e.size_request == 0 ? 1 : e.size_request);
        const auto resp = static_cast<std::int64_t>(e.size_response == 0 ? 1 : e.size_response);
        packets.push_back({e.t_request, req});
        packets.push_back({e.t_response, -resp});
    }
    for (auto& flow : obs.flows)
        std::stable_sort(flow.packets.begin(), flow.packets.end(),
                         [](const Packet& a, const Packet& b) { return a.time < b.time; });
    return obs;
}

}  // namespace wfbench
