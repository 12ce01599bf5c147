// wfbench: website-fingerprinting workbench CLI.
//
// Subcommands: synth, defend, view, appdefend, evaluate, features, ipfp,
// run. Exit codes: 0 success, 1 validation error, 2 pipeline error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wfbench/adversary.hpp"
#include "wfbench/app_defenses.hpp"
#include "wfbench/domain.hpp"
#include "wfbench/error.hpp"
#include "wfbench/experiment.hpp"
#include "wfbench/features.hpp"
#include "wfbench/synth.hpp"
#include "wfbench/trace.hpp"

using namespace wfbench;
using nlohmann::ordered_json;

namespace {

struct SynthCli {
    SynthParams params;
    std::string out_traces;
    std::string out_logs, out_paths, out_owners, out_ipdb;
    std::pair<int, int> flows{3, 8};
    std::pair<int, int> packets{20, 60};
};

struct DefendCli {
    std::vector<std::string> defenses;
    std::int64_t target = 1400;
    std::uint64_t quantum = 1'000'000;
    FrontParams front;
    std::uint64_t seed = 0;
    std::string in, out;
};

struct ViewCli {
    std::string as_id, paths;
    std::uint64_t netflow_n = 0;
    std::string netflow_pad;  // "BYTES:PACKETS"
    bool google = false;
    std::string owners;
    std::string owner = "Google";
    std::string party;
    std::string in, out;
};

struct AppDefendCli {
    std::vector<std::string> defenses;
    int pad_n = 3;
    bool no_pad_requests = false;
    int total_n = 2;
    double p = 0.5;
    int m = 10;
    std::string pool;
    std::string domain = "gstatic.com";
    std::uint64_t seed = 0;
    std::string in, out;
};

struct EvaluateCli {
    std::string in, baseline;
    bool logs = false;
    bool fingerprints = false;
    std::optional<bool> discard_timings;
    int folds = 10;
    ForestParams forest;
    std::uint64_t seed = 0;
    std::string report = "report.json";
    std::string report_csv;
};

struct FeaturesCli {
    std::string in, out;
    bool logs = false;
    bool discard_timings = false;
};

struct IpfpCli {
    std::string db, in, out;
    bool no_primary = false;
};

struct AsVisCli {
    std::string paths, in, out;
};

int run_synth(const SynthCli& cli) {
    SynthParams params = cli.params;
    params.min_flows = cli.flows.first;
    params.max_flows = cli.flows.second;
    params.min_packets = cli.packets.first;
    params.max_packets = cli.packets.second;
    const SynthBundle bundle = generate_synthetic(params);
    save_dataset_file(bundle.dataset, cli.out_traces);
    if (!cli.out_logs.empty()) save_resource_logs_file(bundle.logs, cli.out_logs);
    if (!cli.out_paths.empty()) save_path_map_file(bundle.paths, cli.out_paths);
    if (!cli.out_owners.empty()) save_owner_map_file(bundle.owners, cli.out_owners);
    if (!cli.out_ipdb.empty()) save_ip_db_file(bundle.ip_db, cli.out_ipdb);
    std::cerr << "synth: " << bundle.dataset.observations.size() << " observations, "
              << bundle.dataset.class_list.size() << " classes -> " << cli.out_traces << "\n";
    return 0;
}

std::vector<NetDefenseStage> parse_net_chain(const DefendCli& cli) {
    std::vector<NetDefenseStage> chain;
    for (const auto& name : cli.defenses) {
        NetDefenseStage stage;
        if (name == "pad-sizes") {
            stage.kind = NetDefenseStage::Kind::kPadSizes;
            stage.target = cli.target;
        } else if (name == "hide-timings") {
            stage.kind = NetDefenseStage::Kind::kHideTimings;
        } else if (name == "pad-total") {
            stage.kind = NetDefenseStage::Kind::kPadTotal;
            stage.pad_total.quantum = cli.quantum;
        } else if (name == "front") {
            stage.kind = NetDefenseStage::Kind::kFront;
            stage.front = cli.front;
        } else {
            throw ValidationError("unknown defense '" + name +
                                  "' (expected pad-sizes, hide-timings, pad-total or front)");
        }
        chain.push_back(stage);
    }
    return chain;
}

int run_defend(const DefendCli& cli) {
    const auto chain = parse_net_chain(cli);
    const Dataset input = load_dataset_file(cli.in);
    const Dataset defended = apply_net_chain(input, chain, cli.seed);
    save_dataset_file(defended, cli.out);
    std::cerr << "defend: " << defended.observations.size() << " observations -> " << cli.out << "\n";
    return 0;
}

int run_view(const ViewCli& cli) {
    if (!cli.party.empty()) {
        // application-layer view over resource logs
        PartyFilter filter;
        OwnerMap owners;
        if (cli.party == "first") {
            filter.kind = PartyFilter::Kind::kFirst;
        } else if (cli.party == "third") {
            filter.kind = PartyFilter::Kind::kThird;
        } else if (cli.party == "owner") {
            filter.kind = PartyFilter::Kind::kOwner;
            filter.owner = cli.owner;
            owners = cli.owners.empty() ? OwnerMap::default_google() : load_owner_map_file(cli.owners);
            filter.owners = &owners;
        } else {
            throw ValidationError("--party must be first, third or owner");
        }
        const auto logs = load_resource_logs_file(cli.in);
        std::vector<ResourceLog> visible;
        std::size_t unseen = 0;
        for (const auto& log : logs) {
            auto filtered = filter_party(log, filter);
            if (filtered)
                visible.push_back(std::move(*filtered));
            else
                ++unseen;
        }
        if (visible.empty()) throw PipelineError("view:party: no visible traffic");
        save_resource_logs_file(visible, cli.out);
        std::cerr << "view: kept " << visible.size() << "/" << logs.size() << " logs (" << unseen
                  << " unseen) -> " << cli.out << "\n";
        return 0;
    }

    const Dataset input = load_dataset_file(cli.in);
    ViewSpec view;
    if (!cli.as_id.empty()) {
        view.kind = ViewSpec::Kind::kAs;
        view.as_id = cli.as_id;
        view.paths_path = cli.paths;
        if (cli.paths.empty()) throw ValidationError("--as requires --paths");
    } else if (cli.netflow_n > 0) {
        view.kind = ViewSpec::Kind::kNetflow;
        view.netflow.sampling_n = cli.netflow_n;
        if (!cli.netflow_pad.empty()) {
            NetFlowPadTargets targets;
            const auto colon = cli.netflow_pad.find(':');
            if (colon == std::string::npos) throw ValidationError("--netflow-pad expects BYTES:PACKETS");
            targets.byte_target = std::stoull(cli.netflow_pad.substr(0, colon));
            targets.packet_target = std::stoull(cli.netflow_pad.substr(colon + 1));
            view.netflow_pad = targets;
        }
    } else if (cli.google) {
        view.kind = ViewSpec::Kind::kGoogle;
        view.owners_path = cli.owners;
        view.owner = cli.owner;
    } else {
        throw ValidationError("view needs one of --as, --netflow-n, --google or --party");
    }

    const ViewResult result = apply_view(input, view);
    if (view.kind == ViewSpec::Kind::kGoogle) {
        // fingerprints have their own compact binary format; JSONL would
        // re-normalize times and destroy the page-start offsets
        write_fingerprints_file(result.fingerprints, cli.out);
        std::cerr << "view: " << result.fingerprints.size() << " fingerprints (" << result.unseen
                  << " unseen) -> " << cli.out << "\n";
        return 0;
    }
    auto rebuilt = rebuild_dataset(result.observations, 2);
    if (rebuilt.dataset.observations.empty()) throw PipelineError("view: no visible traffic");
    save_dataset_file(rebuilt.dataset, cli.out);
    std::cerr << "view: kept " << rebuilt.dataset.observations.size() << "/" << result.observations_in
              << " observations (" << result.unseen << " unseen, " << rebuilt.classes_dropped
              << " classes dropped) -> " << cli.out << "\n";
    return 0;
}

int run_appdefend(const AppDefendCli& cli) {
    std::vector<AppDefenseStage> chain;
    for (const auto& name : cli.defenses) {
        AppDefenseStage stage;
        if (name == "pad-resources") {
            stage.kind = AppDefenseStage::Kind::kPadResources;
            stage.n_groups = cli.pad_n;
            stage.pad_requests = !cli.no_pad_requests;
        } else if (name == "pad-total") {
            stage.kind = AppDefenseStage::Kind::kPadTotal;
            stage.n_groups = cli.total_n;
        } else if (name == "dummies") {
            stage.kind = AppDefenseStage::Kind::kDummies;
            stage.dummy_p = cli.p;
            stage.dummy_m = cli.m;
            stage.pool_path = cli.pool;
            stage.dummy_domain = cli.domain;
            if (cli.pool.empty()) throw ValidationError("dummies defense requires --pool");
        } else {
            throw ValidationError("unknown app defense '" + name +
                                  "' (expected pad-resources, pad-total or dummies)");
        }
        chain.push_back(stage);
    }
    const auto logs = load_resource_logs_file(cli.in);
    const auto result = apply_app_chain(logs, chain, cli.seed);
    save_resource_logs_file(result.logs, cli.out);
    std::uint64_t added = 0;
    for (const auto& oh : result.overheads) added += oh.per_page_bytes;
    std::cerr << "appdefend: " << result.logs.size() << " logs, " << added << " B added -> " << cli.out
              << "\n";
    return 0;
}

int run_evaluate(const EvaluateCli& cli) {
    ExperimentConfig config;
    config.input_path = cli.in;
    config.input_kind = cli.fingerprints ? ExperimentConfig::InputKind::kFingerprints
                        : cli.logs       ? ExperimentConfig::InputKind::kLogs
                                         : ExperimentConfig::InputKind::kTraces;
    config.folds = cli.folds;
    config.forest = cli.forest;
    config.forest.seed = cli.seed;
    config.seed = cli.seed;
    config.discard_timings =
        cli.discard_timings.value_or(config.input_kind == ExperimentConfig::InputKind::kLogs);
    config.baseline_path = cli.baseline;
    config.report_path = cli.report;
    config.report_csv_path = cli.report_csv;
    const auto report = run_experiment(config);
    std::cerr << "evaluate: result=" << report.value("result", std::string{});
    if (report.contains("macro_f1") && report["macro_f1"].is_number())
        std::cerr << " macro_f1=" << report["macro_f1"].get<double>();
    std::cerr << " -> " << cli.report << "\n";
    return 0;
}

int run_features(const FeaturesCli& cli) {
    FeatureMatrix matrix;
    FeatureOptions options{.discard_timings = cli.discard_timings};
    if (cli.logs) {
        const auto logs = load_resource_logs_file(cli.in);
        std::vector<Observation> pseudo;
        pseudo.reserve(logs.size());
        for (const auto& log : logs) pseudo.push_back(resource_log_to_pseudo_observation(log));
        Dataset ds;
        ds.observations = std::move(pseudo);
        matrix = featurize_dataset(ds, options);
    } else {
        matrix = featurize_dataset(load_dataset_file(cli.in), options);
    }
    std::ofstream out(cli.out);
    if (!out) throw PipelineError("cannot open '" + cli.out + "' for writing");
    write_feature_csv(matrix, out);
    std::cerr << "features: " << matrix.rows.size() << " rows -> " << cli.out << "\n";
    return 0;
}

int run_ipfp(const IpfpCli& cli) {
    const auto db = load_ip_db_file(cli.db);
    const Dataset input = load_dataset_file(cli.in);
    const bool use_primary = !cli.no_primary;

    std::size_t correct = 0;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // label -> (correct, total)
    for (const auto& obs : input.observations) {
        const auto ranked = ip_fingerprint_match(make_ip_query(obs), db, use_primary);
        auto& [hits, total] = per_class[obs.label];
        ++total;
        if (!ranked.empty() && ranked.front().site == obs.label) {
            ++hits;
            ++correct;
        }
    }

    ordered_json report;
    report["use_primary"] = use_primary;
    report["observations"] = input.observations.size();
    report["top1_accuracy"] =
        static_cast<double>(correct) / static_cast<double>(input.observations.size());
    report["per_class"] = ordered_json::object();
    for (const auto& [label, counts] : per_class)
        report["per_class"][label] = {{"correct", counts.first}, {"total", counts.second}};
    if (cli.out.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream out(cli.out);
        if (!out) throw PipelineError("cannot open '" + cli.out + "' for writing");
        out << report.dump(2) << '\n';
        std::cerr << "ipfp: top1=" << report["top1_accuracy"].get<double>() << " -> " << cli.out << "\n";
    }
    return 0;
}

int run_asvis(const AsVisCli& cli) {
    const auto paths = load_path_map_file(cli.paths);
    const Dataset input = load_dataset_file(cli.in);
    const auto stats = as_visibility_stats(input, paths);

    ordered_json report = ordered_json::object();
    for (const auto& [as_id, st] : stats) {
        report[as_id] = {{"pages_seen_fraction", st.pages_seen_fraction},
                         {"median_route_fraction", st.median_route_fraction()},
                         {"route_fractions", st.route_fractions}};
    }
    if (cli.out.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream out(cli.out);
        if (!out) throw PipelineError("cannot open '" + cli.out + "' for writing");
        out << report.dump(2) << '\n';
        std::cerr << "asvis: " << stats.size() << " ASes -> " << cli.out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"website-fingerprinting attack/defense workbench"};
    app.require_subcommand(1);

    SynthCli synth_cli;
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    synth->add_option("--classes", synth_cli.params.num_classes, "number of sites")->default_val(20);
    synth->add_option("--samples", synth_cli.params.samples_per_class, "samples per site")->default_val(20);
    synth->add_option("--overlap", synth_cli.params.overlap, "class similarity in [0,1]")->default_val(0.0);
    synth->add_option("--google-fraction", synth_cli.params.google_fraction,
                      "probability a secondary flow uses a Google SNI")
        ->default_val(0.3);
    synth->add_option("--flows", synth_cli.flows, "min max flows per observation");
    synth->add_option("--packets", synth_cli.packets, "min max packets per flow");
    synth->add_option("--seed", synth_cli.params.seed, "PRNG seed")->required();
    synth->add_option("-o,--out", synth_cli.out_traces, "trace JSONL output")->required();
    synth->add_option("--logs-out", synth_cli.out_logs, "resource-log JSONL output");
    synth->add_option("--paths-out", synth_cli.out_paths, "AS path map JSON output");
    synth->add_option("--owners-out", synth_cli.out_owners, "owner map JSON output");
    synth->add_option("--ipdb-out", synth_cli.out_ipdb, "IP fingerprint DB JSON output");

    DefendCli defend_cli;
    auto* defend = app.add_subcommand("defend", "apply network-layer defenses");
    defend
        ->add_option("--defense", defend_cli.defenses,
                     "stage chain, in order: pad-sizes, hide-timings, pad-total, front")
        ->required();
    defend->add_option("--target", defend_cli.target, "per-packet size for pad-sizes")->default_val(1400);
    defend->add_option("--quantum", defend_cli.quantum, "byte quantum for pad-total")
        ->default_val(1'000'000);
    defend->add_option("--nc", defend_cli.front.n_client, "FRONT max client dummies")->default_val(1300);
    defend->add_option("--ns", defend_cli.front.n_server, "FRONT max server dummies")->default_val(1300);
    defend->add_option("--wmin", defend_cli.front.w_min, "FRONT min window (s)")->default_val(0.2);
    defend->add_option("--wmax", defend_cli.front.w_max, "FRONT max window (s)")->default_val(3.0);
    defend->add_option("--dummy-size", defend_cli.front.dummy_size, "FRONT dummy packet size")
        ->default_val(1400);
    defend->add_option("--seed", defend_cli.seed, "PRNG seed")->required();
    defend->add_option("-i,--in", defend_cli.in, "trace JSONL input")->required();
    defend->add_option("-o,--out", defend_cli.out, "trace JSONL output")->required();

    ViewCli view_cli;
    auto* view = app.add_subcommand("view", "constrain the adversary's view");
    view->add_option("--as", view_cli.as_id, "keep flows routed through this AS");
    view->add_option("--paths", view_cli.paths, "path map JSON (for --as)");
    view->add_option("--netflow-n", view_cli.netflow_n, "sampled NetFlow: keep 1 of every N packets");
    view->add_option("--netflow-pad", view_cli.netflow_pad, "NetFlow padding targets BYTES:PACKETS");
    view->add_flag("--google", view_cli.google, "ClientHello-timing filter; output is binary fingerprints");
    view->add_option("--owners", view_cli.owners, "owner map JSON (default: bundled Google set)");
    view->add_option("--owner", view_cli.owner, "target owner name")->default_val("Google");
    view->add_option("--party", view_cli.party, "resource-log party filter: first, third or owner");
    view->add_option("-i,--in", view_cli.in, "input (traces, or logs for --party)")->required();
    view->add_option("-o,--out", view_cli.out, "output")->required();

    AppDefendCli app_cli;
    auto* appdefend = app.add_subcommand("appdefend", "apply application-layer defenses to resource logs");
    appdefend
        ->add_option("--defense", app_cli.defenses,
                     "stage chain, in order: pad-resources, pad-total, dummies")
        ->required();
    appdefend->add_option("--n", app_cli.pad_n, "size groups for pad-resources")->default_val(3);
    appdefend->add_flag("--no-pad-requests", app_cli.no_pad_requests, "pad only response sizes");
    appdefend->add_option("--total-n", app_cli.total_n, "size groups for pad-total")->default_val(2);
    appdefend->add_option("--p", app_cli.p, "dummy keep probability")->default_val(0.5);
    appdefend->add_option("--m", app_cli.m, "dummy candidate count")->default_val(10);
    appdefend->add_option("--pool", app_cli.pool, "dummy chain pool JSON");
    appdefend->add_option("--domain", app_cli.domain, "domain of injected entries")
        ->default_val("gstatic.com");
    appdefend->add_option("--seed", app_cli.seed, "PRNG seed")->required();
    appdefend->add_option("-i,--in", app_cli.in, "resource-log JSONL input")->required();
    appdefend->add_option("-o,--out", app_cli.out, "resource-log JSONL output")->required();

    EvaluateCli eval_cli;
    auto* evaluate = app.add_subcommand("evaluate", "cross-validated attack and report");
    evaluate->add_option("-i,--in", eval_cli.in, "dataset input")->required();
    evaluate->add_flag("--logs", eval_cli.logs, "input is resource-log JSONL");
    evaluate->add_flag("--fingerprints", eval_cli.fingerprints, "input is binary fingerprints");
    evaluate->add_option("--baseline", eval_cli.baseline, "undefended traces for overhead statistics");
    evaluate->add_option("--folds", eval_cli.folds, "stratified folds")->default_val(10);
    evaluate->add_option("--trees", eval_cli.forest.n_trees, "forest size")->default_val(100);
    evaluate->add_option("--max-features", eval_cli.forest.max_features, "features per split, 0 = sqrt")
        ->default_val(0);
    evaluate->add_option("--min-samples-leaf", eval_cli.forest.min_samples_leaf, "")->default_val(1);
    evaluate->add_option("--max-depth", eval_cli.forest.max_depth, "0 = unlimited")->default_val(0);
    evaluate->add_option("--threads", eval_cli.forest.threads, "0 = hardware")->default_val(0);
    auto* discard =
        evaluate->add_flag("--discard-timings", "zero the timing features (default for --logs)");
    auto* keep = evaluate->add_flag("--keep-timings", "keep timing features even for --logs");
    evaluate->add_option("--seed", eval_cli.seed, "PRNG seed")->default_val(0);
    evaluate->add_option("-o,--report", eval_cli.report, "report JSON output")->default_val("report.json");
    evaluate->add_option("--report-csv", eval_cli.report_csv, "per-class metrics CSV output");

    FeaturesCli features_cli;
    auto* features = app.add_subcommand("features", "export the feature matrix as CSV");
    features->add_option("-i,--in", features_cli.in, "dataset input")->required();
    features->add_flag("--logs", features_cli.logs, "input is resource-log JSONL");
    features->add_flag("--discard-timings", features_cli.discard_timings, "zero the timing features");
    features->add_option("-o,--out", features_cli.out, "CSV output")->required();

    IpfpCli ipfp_cli;
    auto* ipfp = app.add_subcommand("ipfp", "basic IP fingerprint matching");
    ipfp->add_option("--db", ipfp_cli.db, "IP fingerprint DB JSON")->required();
    ipfp->add_flag("--no-primary", ipfp_cli.no_primary, "match on secondary IPs only");
    ipfp->add_option("-i,--in", ipfp_cli.in, "trace JSONL input")->required();
    ipfp->add_option("-o,--out", ipfp_cli.out, "report JSON output (default: stdout)");

    AsVisCli asvis_cli;
    auto* asvis = app.add_subcommand("asvis", "per-AS traffic visibility statistics");
    asvis->add_option("--paths", asvis_cli.paths, "path map JSON")->required();
    asvis->add_option("-i,--in", asvis_cli.in, "trace JSONL input")->required();
    asvis->add_option("-o,--out", asvis_cli.out, "stats JSON output (default: stdout)");

    std::string run_config;
    auto* run = app.add_subcommand("run", "run a full experiment from a config JSON");
    run->add_option("-c,--config", run_config, "experiment config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return run_synth(synth_cli);
        if (defend->parsed()) return run_defend(defend_cli);
        if (view->parsed()) return run_view(view_cli);
        if (appdefend->parsed()) return run_appdefend(app_cli);
        if (evaluate->parsed()) {
            if (discard->count() > 0) eval_cli.discard_timings = true;
            if (keep->count() > 0) eval_cli.discard_timings = false;
            return run_evaluate(eval_cli);
        }
        if (features->parsed()) return run_features(features_cli);
        if (ipfp->parsed()) return run_ipfp(ipfp_cli);
        if (asvis->parsed()) return run_asvis(asvis_cli);
        if (run->parsed()) {
            const auto report = run_experiment(parse_experiment_config(run_config));
            std::cerr << "run: result=" << report.value("result", std::string{}) << "\n";
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const PipelineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
