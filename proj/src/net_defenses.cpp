#include "wfbench/net_defenses.hpp"

#include <algorithm>
#include <cmath>

#include "wfbench/error.hpp"
#include "wfbench/rng.hpp"

namespace wfbench {

Observation hide_packet_sizes(const Observation& obs, std::int64_t target_size) {
    if (target_size < 1) throw ValidationError("target size must be >= 1");
    for (const auto& flow : obs.flows)
        for (const auto& p : flow.packets)
            if (static_cast<std::int64_t>(p.bytes()) > target_size)
                throw ValidationError("target size " + std::to_string(target_size) +
                                      " is smaller than an existing packet (" + std::to_string(p.bytes()) + " B)");
    Observation defended = obs;
    for (auto& flow : defended.flows)
        for (auto& p : flow.packets) p.size = p.size > 0 ? target_size : -target_size;
    return defended;
}

Observation hide_timings(const Observation& obs) {
    Observation defended = obs;
    for (auto& flow : defended.flows)
        for (auto& p : flow.packets) p.time = 0.0;
    return defended;
}

Observation pad_total(const Observation& obs, const PadTotalParams& params) {
    if (params.quantum < 1) throw ValidationError("quantum must be >= 1");
    const std::uint64_t total = obs.total_bytes();
    const std::uint64_t remainder = total % params.quantum;
    if (remainder == 0) return obs;
    const std::uint64_t deficit = params.quantum - remainder;

    const auto merged = merge_packets(obs);
    const std::uint64_t n = merged.size();
    const std::uint64_t per_packet = deficit / n;
    const std::uint64_t extra_from = n - deficit % n;  // last (deficit mod n) packets get one more byte

    // per-flow cursors follow the merged order back to the stored packets
    Observation defended = obs;
    std::vector<std::size_t> cursor(defended.flows.size(), 0);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::size_t fi = merged[i].flow_index;
        auto& p = defended.flows[fi].packets[cursor[fi]++];
        const auto add = static_cast<std::int64_t>(per_packet + (i >= extra_from ? 1 : 0));
        p.size += p.size > 0 ? add : -add;
    }
    return defended;
}

Observation front_defend(const Observation& obs, const FrontParams& params) {
    if (params.n_client < 1 || params.n_server < 1) throw ValidationError("FRONT dummy budgets must be >= 1");
    if (!(params.w_min > 0.0) || params.w_max < params.w_min)
        throw ValidationError("FRONT window must satisfy 0 < w_min <= w_max");
    if (params.dummy_size < 1) throw ValidationError("dummy size must be >= 1");

    Observation defended = obs;
    Rng rng(params.seed);
    const std::string src = obs.flows.front().src;
    const std::string dst = obs.flows.front().dst;
    const auto sni = obs.flows.front().sni;

    for (const bool client_side : {true, false}) {
        const int budget = client_side ? params.n_client : params.n_server;
        const auto count = static_cast<std::size_t>(rng.uniform_int(1, budget));
        const double window = rng.uniform(params.w_min, params.w_max);
        Flow dummy_flow;
        dummy_flow.src = src;
        dummy_flow.dst = dst;
        dummy_flow.sni = sni;
        dummy_flow.packets.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            dummy_flow.packets.push_back(
                {rng.rayleigh(window), client_side ? params.dummy_size : -params.dummy_size});
        std::stable_sort(dummy_flow.packets.begin(), dummy_flow.packets.end(),
                         [](const Packet& a, const Packet& b) { return a.time < b.time; });
        defended.flows.push_back(std::move(dummy_flow));
    }
    return defended;
}

double overhead(const Observation& original, const Observation& defended) {
    const std::uint64_t before = original.total_bytes();
    const std::uint64_t after = defended.total_bytes();
    if (after < before) throw ValidationError("defended trace is smaller than the original");
    if (before == 0) throw ValidationError("original trace has zero bytes");
    return static_cast<double>(after - before) / static_cast<double>(before);
}

}  // namespace wfbench
