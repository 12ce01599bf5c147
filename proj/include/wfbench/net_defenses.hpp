#pragma once

#include <cstdint>

#include "wfbench/trace.hpp"

namespace wfbench {

// Dummy-injection schedule in the style of FRONT: each side draws a
// dummy budget in [1, N] and a window in [w_min, w_max], then schedules
// that many fixed-size dummies at Rayleigh-distributed times, which
// front-loads them where traces are most identifying.
struct FrontParams {
    int n_client = 1300;
    int n_server = 1300;
    double w_min = 0.2;
    double w_max = 3.0;
    std::int64_t dummy_size = 1400;
    std::uint64_t seed = 0;
};

struct PadTotalParams {
    std::uint64_t quantum = 1'000'000;  // decimal MB
};

// Sets every packet's |size| to target_size (sign preserved). Errors when
// target_size is smaller than an existing packet.
Observation hide_packet_sizes(const Observation& obs, std::int64_t target_size);

// Sets all timestamps to 0; the global order becomes the stored order
// (flow order, then intra-flow order). Feature-level model of an
// idealized constant-rate channel.
Observation hide_timings(const Observation& obs);

// Pads the observation's total |size| up to the next multiple of
// params.quantum; exact multiples are left unchanged. The deficit is
// spread as evenly as possible over packets in global order, the
// remainder going one byte each to the last (deficit mod n) packets.
Observation pad_total(const Observation& obs, const PadTotalParams& params);

// Injects dummy packets per the FRONT schedule into one dedicated flow
// per direction. The dummy flows inherit the first flow's endpoints and
// SNI so that party/AS views treat the chaff as first-party traffic.
// Deterministic replay from params.seed.
Observation front_defend(const Observation& obs, const FrontParams& params);

// Bandwidth overhead: (defended bytes - original bytes) / original bytes,
// bytes = sum of |size|. Errors when the defended trace is smaller.
double overhead(const Observation& original, const Observation& defended);

}  // namespace wfbench
