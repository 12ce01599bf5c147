#include "wfbench/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "wfbench/error.hpp"
#include "wfbench/features.hpp"
#include "wfbench/rng.hpp"

namespace wfbench {

using nlohmann::ordered_json;

namespace {

const char* view_kind_name(ViewSpec::Kind kind) {
    switch (kind) {
        case ViewSpec::Kind::kNone: return "none";
        case ViewSpec::Kind::kAs: return "as";
        case ViewSpec::Kind::kNetflow: return "netflow";
        case ViewSpec::Kind::kGoogle: return "google";
        case ViewSpec::Kind::kParty: return "party";
    }
    return "none";
}

const char* net_stage_name(NetDefenseStage::Kind kind) {
    switch (kind) {
        case NetDefenseStage::Kind::kPadSizes: return "pad-sizes";
        case NetDefenseStage::Kind::kHideTimings: return "hide-timings";
        case NetDefenseStage::Kind::kPadTotal: return "pad-total";
        case NetDefenseStage::Kind::kFront: return "front";
    }
    return "?";
}

const char* app_stage_name(AppDefenseStage::Kind kind) {
    switch (kind) {
        case AppDefenseStage::Kind::kPadResources: return "pad-resources";
        case AppDefenseStage::Kind::kPadTotal: return "pad-total";
        case AppDefenseStage::Kind::kDummies: return "dummies";
    }
    return "?";
}

OverheadStats overhead_stats(std::vector<double> values) {
    OverheadStats stats;
    if (values.empty()) return stats;
    double sum = 0.0;
    for (double v : values) sum += v;
    stats.mean = sum / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(var / static_cast<double>(values.size()));
    std::sort(values.begin(), values.end());
    stats.median = values[(values.size() - 1) / 2];
    return stats;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const ordered_json::parse_error& e) {
        throw ValidationError(path + ": malformed JSON: " + e.what());
    }

    ExperimentConfig config;
    config.input_path = j.value("input", std::string{});
    if (config.input_path.empty()) throw ValidationError(path + ": missing 'input'");
    const std::string kind = j.value("input_kind", std::string("traces"));
    if (kind == "traces")
        config.input_kind = ExperimentConfig::InputKind::kTraces;
    else if (kind == "logs")
        config.input_kind = ExperimentConfig::InputKind::kLogs;
    else if (kind == "fingerprints")
        config.input_kind = ExperimentConfig::InputKind::kFingerprints;
    else
        throw ValidationError(path + ": input_kind must be 'traces', 'logs' or 'fingerprints'");
    if (!j.contains("seed")) throw ValidationError(path + ": missing 'seed' (runs must be reproducible)");
    config.seed = j["seed"].get<std::uint64_t>();

    if (j.contains("view") && !j["view"].is_null()) {
        const auto& jv = j["view"];
        const std::string vk = jv.value("kind", std::string("none"));
        auto& view = config.view;
        if (vk == "none") {
            view.kind = ViewSpec::Kind::kNone;
        } else if (vk == "as") {
            view.kind = ViewSpec::Kind::kAs;
            view.as_id = jv.value("as_id", std::string{});
            view.paths_path = jv.value("paths", std::string{});
            if (view.as_id.empty() || view.paths_path.empty())
                throw ValidationError(path + ": as view needs 'as_id' and 'paths'");
        } else if (vk == "netflow") {
            view.kind = ViewSpec::Kind::kNetflow;
            view.netflow.sampling_n = jv.value("sampling_n", std::uint64_t{1});
            if (jv.contains("pad_bytes") || jv.contains("pad_packets")) {
                NetFlowPadTargets targets;
                targets.byte_target = jv.value("pad_bytes", targets.byte_target);
                targets.packet_target = jv.value("pad_packets", targets.packet_target);
                view.netflow_pad = targets;
            }
        } else if (vk == "google") {
            view.kind = ViewSpec::Kind::kGoogle;
            view.owners_path = jv.value("owners", std::string{});
            view.owner = jv.value("owner", std::string("Google"));
        } else if (vk == "party") {
            view.kind = ViewSpec::Kind::kParty;
            view.party = jv.value("party", std::string{});
            view.owner = jv.value("owner", std::string{});
            view.owners_path = jv.value("owners", std::string{});
            if (view.party != "first" && view.party != "third" && view.party != "owner")
                throw ValidationError(path + ": party must be 'first', 'third' or 'owner'");
        } else {
            throw ValidationError(path + ": unknown view kind '" + vk + "'");
        }
    }

    if (j.contains("net_defenses")) {
        for (const auto& js : j["net_defenses"]) {
            NetDefenseStage stage;
            const std::string sk = js.value("kind", std::string{});
            if (sk == "pad-sizes") {
                stage.kind = NetDefenseStage::Kind::kPadSizes;
                stage.target = js.value("target", std::int64_t{1400});
            } else if (sk == "hide-timings") {
                stage.kind = NetDefenseStage::Kind::kHideTimings;
            } else if (sk == "pad-total") {
                stage.kind = NetDefenseStage::Kind::kPadTotal;
                stage.pad_total.quantum = js.value("quantum", std::uint64_t{1'000'000});
            } else if (sk == "front") {
                stage.kind = NetDefenseStage::Kind::kFront;
                stage.front.n_client = js.value("n_client", 1300);
                stage.front.n_server = js.value("n_server", 1300);
                stage.front.w_min = js.value("w_min", 0.2);
                stage.front.w_max = js.value("w_max", 3.0);
                stage.front.dummy_size = js.value("dummy_size", std::int64_t{1400});
            } else {
                throw ValidationError(path + ": unknown net defense '" + sk + "'");
            }
            config.net_defenses.push_back(stage);
        }
    }

    if (j.contains("app_defenses")) {
        for (const auto& js : j["app_defenses"]) {
            AppDefenseStage stage;
            const std::string sk = js.value("kind", std::string{});
            if (sk == "pad-resources") {
                stage.kind = AppDefenseStage::Kind::kPadResources;
                stage.n_groups = js.value("n", 3);
                stage.pad_requests = js.value("pad_requests", true);
            } else if (sk == "pad-total") {
                stage.kind = AppDefenseStage::Kind::kPadTotal;
                stage.n_groups = js.value("n", 2);
            } else if (sk == "dummies") {
                stage.kind = AppDefenseStage::Kind::kDummies;
                stage.dummy_p = js.value("p", 0.5);
                stage.dummy_m = js.value("m", 10);
                stage.pool_path = js.value("pool", std::string{});
                stage.dummy_domain = js.value("domain", std::string("gstatic.com"));
                if (stage.pool_path.empty()) throw ValidationError(path + ": dummies stage needs 'pool'");
            } else {
                throw ValidationError(path + ": unknown app defense '" + sk + "'");
            }
            config.app_defenses.push_back(stage);
        }
    }

    if (!config.net_defenses.empty() && config.input_kind != ExperimentConfig::InputKind::kTraces)
        throw ValidationError(path + ": net_defenses require trace input");
    if (!config.app_defenses.empty() && config.input_kind != ExperimentConfig::InputKind::kLogs)
        throw ValidationError(path + ": app_defenses require log input");
    if (config.view.kind == ViewSpec::Kind::kParty && config.input_kind != ExperimentConfig::InputKind::kLogs)
        throw ValidationError(path + ": party view requires log input");

    if (j.contains("classifier")) {
        const auto& jc = j["classifier"];
        config.forest.n_trees = jc.value("trees", 100);
        config.forest.max_features = jc.value("max_features", 0);
        config.forest.min_samples_leaf = jc.value("min_samples_leaf", 1);
        config.forest.max_depth = jc.value("max_depth", 0);
        config.forest.threads = jc.value("threads", 0);
        config.folds = jc.value("folds", 10);
    }
    config.forest.seed = config.seed;

    if (j.contains("discard_timings")) config.discard_timings_set = j["discard_timings"].get<bool>();
    config.discard_timings = config.discard_timings_set.value_or(
        config.input_kind == ExperimentConfig::InputKind::kLogs);

    config.baseline_path = j.value("baseline", std::string{});
    config.report_path = j.value("report", std::string{});
    config.report_csv_path = j.value("report_csv", std::string{});
    return config;
}

ordered_json experiment_config_json(const ExperimentConfig& config) {
    ordered_json j;
    j["input"] = config.input_path;
    switch (config.input_kind) {
        case ExperimentConfig::InputKind::kTraces: j["input_kind"] = "traces"; break;
        case ExperimentConfig::InputKind::kLogs: j["input_kind"] = "logs"; break;
        case ExperimentConfig::InputKind::kFingerprints: j["input_kind"] = "fingerprints"; break;
    }
    if (!config.baseline_path.empty()) j["baseline"] = config.baseline_path;
    j["seed"] = config.seed;

    ordered_json jv;
    jv["kind"] = view_kind_name(config.view.kind);
    switch (config.view.kind) {
        case ViewSpec::Kind::kAs:
            jv["as_id"] = config.view.as_id;
            jv["paths"] = config.view.paths_path;
            break;
        case ViewSpec::Kind::kNetflow:
            jv["sampling_n"] = config.view.netflow.sampling_n;
            if (config.view.netflow_pad) {
                jv["pad_bytes"] = config.view.netflow_pad->byte_target;
                jv["pad_packets"] = config.view.netflow_pad->packet_target;
            }
            break;
        case ViewSpec::Kind::kGoogle:
            jv["owners"] = config.view.owners_path;
            jv["owner"] = config.view.owner;
            break;
        case ViewSpec::Kind::kParty:
            jv["party"] = config.view.party;
            if (config.view.party == "owner") {
                jv["owner"] = config.view.owner;
                jv["owners"] = config.view.owners_path;
            }
            break;
        case ViewSpec::Kind::kNone:
            break;
    }
    j["view"] = std::move(jv);

    j["net_defenses"] = ordered_json::array();
    for (const auto& stage : config.net_defenses) {
        ordered_json js;
        js["kind"] = net_stage_name(stage.kind);
        switch (stage.kind) {
            case NetDefenseStage::Kind::kPadSizes:
                js["target"] = stage.target;
                break;
            case NetDefenseStage::Kind::kPadTotal:
                js["quantum"] = stage.pad_total.quantum;
                break;
            case NetDefenseStage::Kind::kFront:
                js["n_client"] = stage.front.n_client;
                js["n_server"] = stage.front.n_server;
                js["w_min"] = stage.front.w_min;
                js["w_max"] = stage.front.w_max;
                js["dummy_size"] = stage.front.dummy_size;
                break;
            case NetDefenseStage::Kind::kHideTimings:
                break;
        }
        j["net_defenses"].push_back(std::move(js));
    }

    j["app_defenses"] = ordered_json::array();
    for (const auto& stage : config.app_defenses) {
        ordered_json js;
        js["kind"] = app_stage_name(stage.kind);
        switch (stage.kind) {
            case AppDefenseStage::Kind::kPadResources:
                js["n"] = stage.n_groups;
                js["pad_requests"] = stage.pad_requests;
                break;
            case AppDefenseStage::Kind::kPadTotal:
                js["n"] = stage.n_groups;
                break;
            case AppDefenseStage::Kind::kDummies:
                js["p"] = stage.dummy_p;
                js["m"] = stage.dummy_m;
                js["pool"] = stage.pool_path;
                js["domain"] = stage.dummy_domain;
                break;
        }
        j["app_defenses"].push_back(std::move(js));
    }

    j["classifier"] = {{"trees", config.forest.n_trees},
                       {"folds", config.folds},
                       {"max_features", config.forest.max_features},
                       {"min_samples_leaf", config.forest.min_samples_leaf},
                       {"max_depth", config.forest.max_depth}};
    j["discard_timings"] = config.discard_timings;
    return j;
}

Dataset apply_net_chain(const Dataset& ds, const std::vector<NetDefenseStage>& chain, std::uint64_t seed) {
    Dataset out = ds;
    for (std::size_t si = 0; si < chain.size(); ++si) {
        const auto& stage = chain[si];
        const std::uint64_t stage_seed = mix_seed(seed, 0xDEF0ULL + si);
        for (std::size_t i = 0; i < out.observations.size(); ++i) {
            auto& obs = out.observations[i];
            switch (stage.kind) {
                case NetDefenseStage::Kind::kPadSizes:
                    obs = hide_packet_sizes(obs, stage.target);
                    break;
                case NetDefenseStage::Kind::kHideTimings:
                    obs = hide_timings(obs);
                    break;
                case NetDefenseStage::Kind::kPadTotal:
                    obs = pad_total(obs, stage.pad_total);
                    break;
                case NetDefenseStage::Kind::kFront: {
                    FrontParams params = stage.front;
                    params.seed = mix_seed(stage_seed, i);
                    obs = front_defend(obs, params);
                    break;
                }
            }
        }
    }
    return out;
}

ViewResult apply_view(const Dataset& ds, const ViewSpec& view) {
    ViewResult result;
    result.observations_in = ds.observations.size();

    switch (view.kind) {
        case ViewSpec::Kind::kNone: {
            result.observations = ds.observations;
            result.source_index.resize(ds.observations.size());
            for (std::size_t i = 0; i < ds.observations.size(); ++i) result.source_index[i] = i;
            break;
        }
        case ViewSpec::Kind::kAs: {
            const PathMap paths = load_path_map_file(view.paths_path);
            for (std::size_t i = 0; i < ds.observations.size(); ++i) {
                auto filtered = as_filter(ds.observations[i], view.as_id, paths);
                if (!filtered) {
                    ++result.unseen;
                    continue;
                }
                result.observations.push_back(std::move(*filtered));
                result.source_index.push_back(i);
            }
            break;
        }
        case ViewSpec::Kind::kNetflow: {
            for (std::size_t i = 0; i < ds.observations.size(); ++i) {
                auto records = netflow_sample(ds.observations[i], view.netflow);
                if (records.empty()) {
                    ++result.unseen;
                    continue;
                }
                if (view.netflow_pad)
                    records = netflow_pad(records, *view.netflow_pad, view.netflow.sampling_n).records;
                result.observations.push_back(
                    netflow_to_pseudo_observation(records, ds.observations[i].label));
                result.source_index.push_back(i);
            }
            break;
        }
        case ViewSpec::Kind::kGoogle: {
            const OwnerMap owners =
                view.owners_path.empty() ? OwnerMap::default_google() : load_owner_map_file(view.owners_path);
            for (std::size_t i = 0; i < ds.observations.size(); ++i) {
                auto fp = google_filter(ds.observations[i], owners, view.owner);
                if (fp.times.empty()) {
                    ++result.unseen;
                    continue;
                }
                result.observations.push_back(fingerprint_to_pseudo_observation(fp));
                result.source_index.push_back(i);
                result.fingerprints.push_back(std::move(fp));
            }
            break;
        }
        case ViewSpec::Kind::kParty:
            throw PipelineError("party view applies to resource logs, not traces");
    }
    return result;
}

AppChainResult apply_app_chain(const std::vector<ResourceLog>& logs, const std::vector<AppDefenseStage>& chain,
                               std::uint64_t seed) {
    AppChainResult result;
    result.logs = logs;
    for (std::size_t si = 0; si < chain.size(); ++si) {
        const auto& stage = chain[si];
        const std::uint64_t stage_seed = mix_seed(seed, 0xA9D0ULL + si);
        switch (stage.kind) {
            case AppDefenseStage::Kind::kPadResources: {
                const auto scheme = fit_pad_scheme(result.logs, stage.n_groups, PadTarget::kResources);
                for (auto& log : result.logs)
                    log = pad_resources(log, scheme, {.pad_requests = stage.pad_requests}).log;
                break;
            }
            case AppDefenseStage::Kind::kPadTotal: {
                const auto scheme_in = fit_pad_scheme(result.logs, stage.n_groups, PadTarget::kTotalIncoming);
                const auto scheme_out = fit_pad_scheme(result.logs, stage.n_groups, PadTarget::kTotalOutgoing);
                for (auto& log : result.logs) log = pad_total_app(log, scheme_in, scheme_out).log;
                break;
            }
            case AppDefenseStage::Kind::kDummies: {
                const DummyPool pool = load_dummy_pool_file(stage.pool_path);
                for (std::size_t i = 0; i < result.logs.size(); ++i) {
                    InjectParams params;
                    params.p = stage.dummy_p;
                    params.m = stage.dummy_m;
                    params.domain = stage.dummy_domain;
                    params.seed = mix_seed(stage_seed, i);
                    result.logs[i] = inject_dummy_resources(result.logs[i], pool, params);
                }
                break;
            }
        }
    }
    result.overheads.reserve(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i)
        result.overheads.push_back(app_overhead(logs[i], result.logs[i]));
    return result;
}

RebuildResult rebuild_dataset(std::vector<Observation> observations, std::size_t min_per_class) {
    RebuildResult result;
    std::map<std::string, std::size_t> counts;
    for (const auto& obs : observations) counts[obs.label]++;
    std::vector<Observation> kept;
    for (auto& obs : observations) {
        if (counts[obs.label] >= min_per_class)
            kept.push_back(std::move(obs));
        else
            ++result.observations_dropped;
    }
    for (const auto& [label, n] : counts)
        if (n < min_per_class) ++result.classes_dropped;
    if (!kept.empty()) result.dataset = make_dataset(std::move(kept), min_per_class);
    return result;
}

ordered_json run_experiment(const ExperimentConfig& config) {
    ordered_json report;
    report["config"] = experiment_config_json(config);
    report["seed"] = config.seed;
    auto stages = ordered_json::array();
    auto audit = [&stages](const std::string& name, std::size_t in, std::size_t out) {
        stages.push_back({{"stage", name}, {"observations_in", in}, {"observations_out", out}});
    };

    FeatureOptions feature_options{.discard_timings = config.discard_timings};
    FeatureMatrix matrix;
    std::optional<OverheadStats> net_overhead;
    ordered_json app_overhead_json;
    std::size_t unseen = 0;

    if (config.input_kind == ExperimentConfig::InputKind::kTraces) {
        const Dataset loaded = load_dataset_file(config.input_path);
        audit("load", loaded.observations.size(), loaded.observations.size());

        if (!config.baseline_path.empty()) {
            const Dataset baseline = load_dataset_file(config.baseline_path);
            if (baseline.observations.size() != loaded.observations.size())
                throw ValidationError("baseline dataset size does not match the input");
            std::vector<double> per_obs;
            per_obs.reserve(loaded.observations.size());
            for (std::size_t i = 0; i < loaded.observations.size(); ++i)
                per_obs.push_back(overhead(baseline.observations[i], loaded.observations[i]));
            net_overhead = overhead_stats(std::move(per_obs));
        }

        ViewResult viewed = apply_view(loaded, config.view);
        unseen = viewed.unseen;
        audit(std::string("view:") + view_kind_name(config.view.kind), viewed.observations_in,
              viewed.observations.size());

        auto rebuilt = rebuild_dataset(std::move(viewed.observations),
                                       static_cast<std::size_t>(std::max(config.folds, 2)));
        if (rebuilt.classes_dropped > 0)
            audit("drop-small-classes", viewed.source_index.size(),
                  rebuilt.dataset.observations.size());
        if (rebuilt.dataset.observations.empty() || rebuilt.dataset.class_list.size() < 2) {
            report["result"] = "no_visible_traffic";
            report["unseen_observations"] = unseen;
            report["stages"] = std::move(stages);
            if (!config.report_path.empty()) {
                std::ofstream out(config.report_path);
                out << report.dump(2) << '\n';
            }
            return report;
        }
        Dataset visible = std::move(rebuilt.dataset);

        Dataset defended = visible;
        if (!config.net_defenses.empty()) {
            defended = apply_net_chain(visible, config.net_defenses, config.seed);
            audit("defend", visible.observations.size(), defended.observations.size());
            std::vector<double> per_obs;
            per_obs.reserve(visible.observations.size());
            for (std::size_t i = 0; i < visible.observations.size(); ++i)
                per_obs.push_back(overhead(visible.observations[i], defended.observations[i]));
            net_overhead = overhead_stats(std::move(per_obs));
        }

        matrix = featurize_dataset(defended, feature_options);
        audit("featurize", defended.observations.size(), matrix.rows.size());
    } else if (config.input_kind == ExperimentConfig::InputKind::kFingerprints) {
        const auto fingerprints = read_fingerprints_file(config.input_path);
        audit("load", fingerprints.size(), fingerprints.size());
        std::vector<Observation> pseudo;
        for (const auto& fp : fingerprints) {
            if (fp.times.empty()) {
                ++unseen;
                continue;
            }
            pseudo.push_back(fingerprint_to_pseudo_observation(fp));
        }
        auto rebuilt = rebuild_dataset(std::move(pseudo), static_cast<std::size_t>(std::max(config.folds, 2)));
        if (rebuilt.dataset.observations.empty() || rebuilt.dataset.class_list.size() < 2) {
            report["result"] = "no_visible_traffic";
            report["unseen_observations"] = unseen;
            report["stages"] = std::move(stages);
            if (!config.report_path.empty()) {
                std::ofstream out(config.report_path);
                out << report.dump(2) << '\n';
            }
            return report;
        }
        matrix = featurize_dataset(rebuilt.dataset, feature_options);
        audit("featurize", rebuilt.dataset.observations.size(), matrix.rows.size());
    } else {
        auto logs = load_resource_logs_file(config.input_path);
        audit("load", logs.size(), logs.size());

        if (config.view.kind == ViewSpec::Kind::kParty) {
            PartyFilter filter;
            OwnerMap owners;
            if (config.view.party == "first") {
                filter.kind = PartyFilter::Kind::kFirst;
            } else if (config.view.party == "third") {
                filter.kind = PartyFilter::Kind::kThird;
            } else {
                filter.kind = PartyFilter::Kind::kOwner;
                filter.owner = config.view.owner;
                owners = config.view.owners_path.empty() ? OwnerMap::default_google()
                                                         : load_owner_map_file(config.view.owners_path);
                filter.owners = &owners;
            }
            std::vector<ResourceLog> visible;
            for (const auto& log : logs) {
                auto filtered = filter_party(log, filter);
                if (!filtered)
                    ++unseen;
                else
                    visible.push_back(std::move(*filtered));
            }
            audit("view:party", logs.size(), visible.size());
            logs = std::move(visible);
        } else if (config.view.kind != ViewSpec::Kind::kNone) {
            throw ValidationError("log input supports only the party view");
        }

        if (logs.empty()) {
            report["result"] = "no_visible_traffic";
            report["unseen_observations"] = unseen;
            report["stages"] = std::move(stages);
            if (!config.report_path.empty()) {
                std::ofstream out(config.report_path);
                out << report.dump(2) << '\n';
            }
            return report;
        }

        std::vector<ResourceLog> defended = logs;
        if (!config.app_defenses.empty()) {
            auto chained = apply_app_chain(logs, config.app_defenses, config.seed);
            defended = std::move(chained.logs);
            audit("appdefend", logs.size(), defended.size());
            std::vector<double> per_request, per_page;
            for (const auto& oh : chained.overheads) {
                per_request.push_back(oh.per_request_mean);
                per_page.push_back(static_cast<double>(oh.per_page_bytes));
            }
            const auto request_stats = overhead_stats(std::move(per_request));
            const auto page_stats = overhead_stats(std::move(per_page));
            app_overhead_json = {{"per_request_mean", request_stats.mean},
                                 {"per_request_median", request_stats.median},
                                 {"per_page_mean", page_stats.mean},
                                 {"per_page_median", page_stats.median}};
        }

        std::vector<Observation> pseudo;
        pseudo.reserve(defended.size());
        for (const auto& log : defended) pseudo.push_back(resource_log_to_pseudo_observation(log));
        auto rebuilt = rebuild_dataset(std::move(pseudo), static_cast<std::size_t>(std::max(config.folds, 2)));
        if (rebuilt.dataset.observations.empty() || rebuilt.dataset.class_list.size() < 2) {
            report["result"] = "no_visible_traffic";
            report["unseen_observations"] = unseen;
            report["stages"] = std::move(stages);
            if (!config.report_path.empty()) {
                std::ofstream out(config.report_path);
                out << report.dump(2) << '\n';
            }
            return report;
        }
        matrix = featurize_dataset(rebuilt.dataset, feature_options);
        audit("featurize", rebuilt.dataset.observations.size(), matrix.rows.size());
    }

    EvaluationReport eval;
    try {
        eval = cross_validate_matrix(matrix, config.folds, config.forest);
    } catch (const ValidationError& e) {
        throw PipelineError(std::string("evaluate: ") + e.what());
    }
    audit("evaluate", matrix.rows.size(), matrix.rows.size());

    report["result"] = "ok";
    report["macro_f1"] = eval.macro_f1_mean;
    report["macro_f1_std"] = eval.macro_f1_std;
    report["fold_scores"] = eval.fold_scores;
    report["class_list"] = eval.class_list;
    report["per_class"] = ordered_json::object();
    for (std::size_t c = 0; c < eval.class_list.size(); ++c) {
        const auto& m = eval.per_class[c];
        report["per_class"][eval.class_list[c]] = {
            {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    }
    report["confusion"] = eval.confusion;

    // top-20 importances, ties by name
    std::vector<std::pair<std::string, double>> ranked;
    const auto& names = feature_schema().names;
    for (std::size_t i = 0; i < eval.importances.size(); ++i) ranked.emplace_back(names[i], eval.importances[i]);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    auto topk = ordered_json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(20, ranked.size()); ++i)
        topk.push_back({ranked[i].first, ranked[i].second});
    report["importances_topk"] = std::move(topk);

    if (net_overhead)
        report["overhead"] = {{"mean", net_overhead->mean},
                              {"median", net_overhead->median},
                              {"std", net_overhead->stddev}};
    else if (!app_overhead_json.is_null())
        report["overhead"] = std::move(app_overhead_json);
    else
        report["overhead"] = nullptr;
    report["unseen_observations"] = unseen;
    report["stages"] = std::move(stages);

    if (!config.report_path.empty()) {
        std::ofstream out(config.report_path);
        if (!out) throw PipelineError("cannot open '" + config.report_path + "' for writing");
        out << report.dump(2) << '\n';
    }
    if (!config.report_csv_path.empty()) {
        std::ofstream out(config.report_csv_path);
        if (!out) throw PipelineError("cannot open '" + config.report_csv_path + "' for writing");
        write_report_csv(eval, out);
    }
    return report;
}

}  // namespace wfbench
