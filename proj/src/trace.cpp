#include "wfbench/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wfbench/error.hpp"

namespace wfbench {

using nlohmann::ordered_json;

std::size_t Observation::packet_count() const {
    std::size_t n = 0;
    for (const auto& f : flows) n += f.packets.size();
    return n;
}

std::uint64_t Observation::total_bytes() const {
    std::uint64_t total = 0;
    for (const auto& f : flows)
        for (const auto& p : f.packets) total += p.bytes();
    return total;
}

std::vector<MergedPacket> merge_packets(const Observation& obs) {
    std::vector<MergedPacket> merged;
    merged.reserve(obs.packet_count());
    for (std::size_t fi = 0; fi < obs.flows.size(); ++fi)
        for (const auto& p : obs.flows[fi].packets) merged.push_back({fi, p});
    // stable sort keeps (flow order, intra-flow order) for equal times
    std::stable_sort(merged.begin(), merged.end(),
                     [](const MergedPacket& a, const MergedPacket& b) { return a.packet.time < b.packet.time; });
    return merged;
}

void validate_observation(const Observation& obs, const std::string& context) {
    if (obs.label.empty()) throw ValidationError(context + ": empty label");
    if (obs.flows.empty()) throw ValidationError(context + ": observation has no flows");
    for (std::size_t fi = 0; fi < obs.flows.size(); ++fi) {
        const auto& flow = obs.flows[fi];
        if (flow.packets.empty())
            throw ValidationError(context + ": flow " + std::to_string(fi) + " has no packets");
        double prev = -std::numeric_limits<double>::infinity();
        for (const auto& p : flow.packets) {
            if (p.size == 0)
                throw ValidationError(context + ": flow " + std::to_string(fi) + ": packet size must be nonzero");
            if (!std::isfinite(p.time) || p.time < 0.0)
                throw ValidationError(context + ": flow " + std::to_string(fi) + ": negative or non-finite packet time");
            if (p.time < prev)
                throw ValidationError(context + ": flow " + std::to_string(fi) + ": packets not sorted by time");
            prev = p.time;
        }
    }
}

Dataset make_dataset(std::vector<Observation> observations, std::size_t min_per_class) {
    Dataset ds;
    ds.observations = std::move(observations);
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < ds.observations.size(); ++i) {
        validate_observation(ds.observations[i], "observation " + std::to_string(i));
        counts[ds.observations[i].label]++;
    }
    for (const auto& [label, n] : counts) {
        if (n < min_per_class)
            throw ValidationError("class '" + label + "' has " + std::to_string(n) + " observation(s); need >= " +
                                  std::to_string(min_per_class));
        ds.class_list.push_back(label);
    }
    return ds;
}

namespace {

Observation parse_observation(const ordered_json& j, const std::string& context) {
    if (!j.is_object()) throw ValidationError(context + ": expected a JSON object");
    Observation obs;
    if (!j.contains("label") || !j["label"].is_string())
        throw ValidationError(context + ": missing string field 'label'");
    obs.label = j["label"].get<std::string>();
    if (j.contains("meta") && !j["meta"].is_null()) {
        if (!j["meta"].is_object()) throw ValidationError(context + ": 'meta' must be an object");
        for (const auto& [k, v] : j["meta"].items()) {
            if (!v.is_string()) throw ValidationError(context + ": meta values must be strings");
            obs.meta[k] = v.get<std::string>();
        }
    }
    if (!j.contains("flows") || !j["flows"].is_array() || j["flows"].empty())
        throw ValidationError(context + ": 'flows' must be a non-empty array");

    double min_time = std::numeric_limits<double>::infinity();
    for (const auto& jf : j["flows"]) {
        Flow flow;
        flow.src = jf.value("src", std::string{});
        flow.dst = jf.value("dst", std::string{});
        if (jf.contains("sni") && !jf["sni"].is_null()) flow.sni = jf["sni"].get<std::string>();
        if (!jf.contains("packets") || !jf["packets"].is_array() || jf["packets"].empty())
            throw ValidationError(context + ": flow with empty 'packets'");
        for (const auto& jp : jf["packets"]) {
            if (!jp.is_array() || jp.size() != 2 || !jp[0].is_number() || !jp[1].is_number_integer())
                throw ValidationError(context + ": packet must be [time_seconds, signed_size_bytes]");
            Packet p;
            p.time = jp[0].get<double>();
            p.size = jp[1].get<std::int64_t>();
            if (p.size == 0) throw ValidationError(context + ": field 'size' must be nonzero");
            if (!std::isfinite(p.time) || p.time < 0.0)
                throw ValidationError(context + ": field 'time' must be a finite non-negative number");
            min_time = std::min(min_time, p.time);
            flow.packets.push_back(p);
        }
        obs.flows.push_back(std::move(flow));
    }
    // times relative to the first packet of the observation
    for (auto& flow : obs.flows) {
        for (auto& p : flow.packets) p.time -= min_time;
        std::stable_sort(flow.packets.begin(), flow.packets.end(),
                         [](const Packet& a, const Packet& b) { return a.time < b.time; });
    }
    return obs;
}

}  // namespace

Dataset load_dataset(std::istream& in) {
    std::vector<Observation> observations;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string context = "line " + std::to_string(line_no);
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw ValidationError(context + ": malformed JSON: " + e.what());
        }
        Observation obs = parse_observation(j, context);
        auto id = obs.meta.find("id");
        if (id != obs.meta.end() && !seen_ids.insert(id->second).second)
            throw ValidationError(context + ": duplicate observation identifier '" + id->second + "'");
        observations.push_back(std::move(obs));
    }
    if (observations.empty()) throw ValidationError("input contains no observations");
    return make_dataset(std::move(observations));
}

Dataset load_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return load_dataset(in);
}

void save_dataset(const Dataset& ds, std::ostream& out) {
    for (const auto& obs : ds.observations) {
        ordered_json j;
        j["label"] = obs.label;
        j["meta"] = ordered_json::object();
        for (const auto& [k, v] : obs.meta) j["meta"][k] = v;
        j["flows"] = ordered_json::array();
        for (const auto& flow : obs.flows) {
            ordered_json jf;
            jf["src"] = flow.src;
            jf["dst"] = flow.dst;
            jf["sni"] = flow.sni ? ordered_json(*flow.sni) : ordered_json(nullptr);
            jf["packets"] = ordered_json::array();
            for (const auto& p : flow.packets) jf["packets"].push_back({p.time, p.size});
            j["flows"].push_back(std::move(jf));
        }
        out << j.dump() << '\n';
    }
    if (!out) throw PipelineError("failed writing dataset");
}

void save_dataset_file(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot open '" + path + "' for writing");
    save_dataset(ds, out);
}

}  // namespace wfbench
