#pragma once

#include <vector>

#include "wfbench/trace.hpp"

// Brute-force re-derivation of the 601 trace statistics, written
// independently of the library extractor (per-feature passes, own
// percentile/std helpers). Used as the reference the fast path is
// checked against.
std::vector<double> oracle_features(const wfbench::Observation& obs, bool discard_timings);
