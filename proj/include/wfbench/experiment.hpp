#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wfbench/adversary.hpp"
#include "wfbench/app_defenses.hpp"
#include "wfbench/evaluation.hpp"
#include "wfbench/net_defenses.hpp"
#include "wfbench/trace.hpp"

namespace wfbench {

struct NetDefenseStage {
    enum class Kind { kPadSizes, kHideTimings, kPadTotal, kFront } kind = Kind::kPadSizes;
    std::int64_t target = 1400;  // pad-sizes
    PadTotalParams pad_total;
    FrontParams front;  // seed is derived from the master seed at apply time
};

struct AppDefenseStage {
    enum class Kind { kPadResources, kPadTotal, kDummies } kind = Kind::kPadResources;
    int n_groups = 3;
    bool pad_requests = true;
    double dummy_p = 0.5;
    int dummy_m = 10;
    std::string pool_path;
    std::string dummy_domain = "gstatic.com";
};

struct ViewSpec {
    enum class Kind { kNone, kAs, kNetflow, kGoogle, kParty } kind = Kind::kNone;
    // as
    std::string as_id;
    std::string paths_path;
    // netflow
    NetFlowParams netflow;
    std::optional<NetFlowPadTargets> netflow_pad;
    // google / party owner
    std::string owners_path;
    std::string owner = "Google";
    // party: "first" | "third" | "owner"
    std::string party;
};

struct ExperimentConfig {
    enum class InputKind { kTraces, kLogs, kFingerprints } input_kind = InputKind::kTraces;
    std::string input_path;
    ViewSpec view;
    std::vector<NetDefenseStage> net_defenses;
    std::vector<AppDefenseStage> app_defenses;
    int folds = 10;
    ForestParams forest;
    bool discard_timings = false;  // forced on for log inputs unless overridden
    std::optional<bool> discard_timings_set;
    std::uint64_t seed = 0;
    // undefended dataset of the same shape; enables overhead statistics
    // when the input was defended externally
    std::string baseline_path;
    std::string report_path;
    std::string report_csv_path;
};

ExperimentConfig parse_experiment_config(const std::string& path);
nlohmann::ordered_json experiment_config_json(const ExperimentConfig& config);

// Applies the stages in order. FRONT randomness is seeded per observation
// from (master seed, stage index, observation index), so batches replay
// identically regardless of parallelism or ordering.
Dataset apply_net_chain(const Dataset& ds, const std::vector<NetDefenseStage>& chain, std::uint64_t seed);

struct ViewResult {
    std::vector<Observation> observations;          // visible part, original order
    std::vector<std::size_t> source_index;          // into the input dataset
    std::vector<TimingFingerprint> fingerprints;    // google view only
    std::size_t observations_in = 0;
    std::size_t unseen = 0;  // observations with an empty view
};

ViewResult apply_view(const Dataset& ds, const ViewSpec& view);

struct AppChainResult {
    std::vector<ResourceLog> logs;
    std::vector<AppOverhead> overheads;  // vs the chain input, per log
};

AppChainResult apply_app_chain(const std::vector<ResourceLog>& logs, const std::vector<AppDefenseStage>& chain,
                               std::uint64_t seed);

// Rebuilds a dataset from surviving observations, dropping classes left
// with fewer than min_per_class samples (counted in classes_dropped).
struct RebuildResult {
    Dataset dataset;
    std::size_t classes_dropped = 0;
    std::size_t observations_dropped = 0;
};
RebuildResult rebuild_dataset(std::vector<Observation> observations, std::size_t min_per_class);

// Full pipeline: load -> view -> defend -> featurize -> cross-validate ->
// report. Every stage contributes an in/out audit entry; an empty
// post-view dataset yields a "no_visible_traffic" report instead of an
// error. Writes report JSON/CSV when paths are set and returns the JSON.
nlohmann::ordered_json run_experiment(const ExperimentConfig& config);

}  // namespace wfbench
