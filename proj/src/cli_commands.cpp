#include "synapse/cli_commands.hpp"

#include <algorithm>
#include <filesystem>
#include <memory>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "synapse/errors.hpp"
#include "synapse/evalbench.hpp"
#include "synapse/federation.hpp"
#include "synapse/util.hpp"

#ifndef SYNAPSE_GIT_HASH
#define SYNAPSE_GIT_HASH "unknown"
#endif

namespace synapse {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void pull(const json& doc, const char* key, T& into) {
    if (doc.contains(key)) into = doc.at(key).get<T>();
}

}  // namespace

void apply_config_json(RunConfig& c, const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    pull(doc, "topology", c.topology);
    pull(doc, "clients", c.clients);
    pull(doc, "edges", c.edges);
    pull(doc, "rounds", c.rounds);
    pull(doc, "per_client", c.per_client);
    pull(doc, "per_client_cap", c.per_client_cap);
    pull(doc, "shards_per_client", c.shards_per_client);
    pull(doc, "partition_scheme", c.partition_scheme);
    pull(doc, "dataset", c.dataset);
    pull(doc, "dataset_name", c.dataset_name);
    pull(doc, "probes", c.probes);
    pull(doc, "snapshot", c.snapshot);
    pull(doc, "attack_clients", c.attack_clients);
    pull(doc, "mode", c.mode);
    pull(doc, "llm", c.llm);
    pull(doc, "mock_script", c.mock_script);
    pull(doc, "endpoint", c.endpoint);
    pull(doc, "model", c.model);
    pull(doc, "privacy", c.privacy);
    pull(doc, "epsilon", c.epsilon);
    pull(doc, "lambda", c.lambda);
    pull(doc, "sensitivity", c.sensitivity);
    pull(doc, "delta", c.delta);
    pull(doc, "l_max", c.l_max);
    pull(doc, "s_max", c.s_max);
    pull(doc, "noise_regime", c.noise_regime);
    pull(doc, "k", c.k);
    pull(doc, "dim", c.dim);
    pull(doc, "bm25", c.bm25);
    pull(doc, "k1", c.k1);
    pull(doc, "b", c.b);
    pull(doc, "dedup_threshold", c.dedup_threshold);
    pull(doc, "textgrad", c.textgrad);
    pull(doc, "textgrad_steps", c.textgrad_steps);
    pull(doc, "textgrad_batch", c.textgrad_batch);
    pull(doc, "edge_summarize", c.edge_summarize);
    pull(doc, "adversarial_mode", c.adversarial_mode);
    pull(doc, "adversarial_fraction", c.adversarial_fraction);
    pull(doc, "train_ratio", c.train_ratio);
    pull(doc, "val_ratio", c.val_ratio);
    pull(doc, "test_ratio", c.test_ratio);
    pull(doc, "eps_grid", c.eps_grid);
    pull(doc, "lambda_grid", c.lambda_grid);
    pull(doc, "recall_ks", c.recall_ks);
    pull(doc, "fractions", c.fractions);
    pull(doc, "sizes", c.sizes);
    pull(doc, "convergence_rounds", c.convergence_rounds);
    pull(doc, "seed", c.seed);
    pull(doc, "out", c.out);
    pull(doc, "jobs", c.jobs);
}

RunConfig load_config_file(const std::string& path) {
    RunConfig config;
    apply_config_json(config, read_file(path));
    return config;
}

std::string config_to_json(const RunConfig& c) {
    json doc;
    doc["topology"] = c.topology;
    doc["clients"] = c.clients;
    doc["edges"] = c.edges;
    doc["rounds"] = c.rounds;
    doc["per_client"] = c.per_client;
    doc["per_client_cap"] = c.per_client_cap;
    doc["shards_per_client"] = c.shards_per_client;
    doc["partition_scheme"] = c.partition_scheme;
    doc["dataset"] = c.dataset;
    doc["dataset_name"] = c.dataset_name;
    doc["probes"] = c.probes;
    doc["snapshot"] = c.snapshot;
    doc["attack_clients"] = c.attack_clients;
    doc["mode"] = c.mode;
    doc["llm"] = c.llm;
    doc["mock_script"] = c.mock_script;
    doc["endpoint"] = c.endpoint;
    doc["model"] = c.model;
    doc["privacy"] = c.privacy;
    doc["epsilon"] = c.epsilon;
    doc["lambda"] = c.lambda;
    doc["sensitivity"] = c.sensitivity;
    doc["delta"] = c.delta;
    doc["l_max"] = c.l_max;
    doc["s_max"] = c.s_max;
    doc["noise_regime"] = c.noise_regime;
    doc["k"] = c.k;
    doc["dim"] = c.dim;
    doc["bm25"] = c.bm25;
    doc["k1"] = c.k1;
    doc["b"] = c.b;
    doc["dedup_threshold"] = c.dedup_threshold;
    doc["textgrad"] = c.textgrad;
    doc["textgrad_steps"] = c.textgrad_steps;
    doc["textgrad_batch"] = c.textgrad_batch;
    doc["edge_summarize"] = c.edge_summarize;
    doc["adversarial_mode"] = c.adversarial_mode;
    doc["adversarial_fraction"] = c.adversarial_fraction;
    doc["train_ratio"] = c.train_ratio;
    doc["val_ratio"] = c.val_ratio;
    doc["test_ratio"] = c.test_ratio;
    doc["eps_grid"] = c.eps_grid;
    doc["lambda_grid"] = c.lambda_grid;
    doc["recall_ks"] = c.recall_ks;
    doc["fractions"] = c.fractions;
    doc["sizes"] = c.sizes;
    doc["convergence_rounds"] = c.convergence_rounds;
    doc["seed"] = c.seed;
    doc["out"] = c.out;
    doc["jobs"] = c.jobs;
    return canonical_dump(doc);
}

void validate_run_config(const RunConfig& c, bool needs_dataset) {
    if (c.clients < 1) throw ConfigError("clients must be >= 1");
    if (c.rounds < 1) throw ConfigError("rounds must be >= 1");
    if (c.k < 1) throw ConfigError("k must be >= 1");
    if (c.dim < 1) throw ConfigError("dim must be >= 1");
    if (c.l_max < 1 || c.s_max < 1) throw ConfigError("l_max and s_max must be >= 1");
    if (c.privacy && c.epsilon <= 0.0) throw ConfigError("epsilon must be positive");
    if (c.lambda < 0.0) throw ConfigError("lambda must be non-negative");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (c.adversarial_fraction < 0.0 || c.adversarial_fraction > 1.0) {
        throw ConfigError("adversarial_fraction must lie in [0,1]");
    }
    if (c.llm != "mock" && c.llm != "http") throw ConfigError("llm must be mock or http");
    topology_from_string(c.topology);
    partition_scheme_from_string(c.partition_scheme);
    noise_regime_from_string(c.noise_regime);
    adversarial_mode_from_string(c.adversarial_mode);
    if (!c.mode.empty()) routing_mode_from_string(c.mode);
    if (needs_dataset) {
        if (c.dataset.empty()) throw ConfigError("dataset path is required");
        if (!fs::exists(c.dataset)) throw ConfigError("dataset not found: " + c.dataset);
    }
    if (!c.mock_script.empty() && !fs::exists(c.mock_script)) {
        throw ConfigError("mock script not found: " + c.mock_script);
    }
    if (!c.probes.empty() && !fs::exists(c.probes)) {
        throw ConfigError("probes file not found: " + c.probes);
    }
    if (c.out.empty()) throw ConfigError("out directory is required");
}

// ---------------------------------------------------------------------------
// Shared wiring
// ---------------------------------------------------------------------------

namespace {

void apply_jobs(const RunConfig& config) {
#ifdef _OPENMP
    if (config.jobs > 0) omp_set_num_threads(config.jobs);
#else
    (void)config;
#endif
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& config) {
    if (config.llm == "http") {
        HttpConfig http = HttpGateway::config_from_env();
        if (!config.endpoint.empty()) http.endpoint = config.endpoint;
        if (!config.model.empty()) http.model = config.model;
        return std::make_unique<HttpGateway>(http);
    }
    MockScript script;
    if (!config.mock_script.empty()) {
        script = MockScript::from_json_text(read_file(config.mock_script));
    } else {
        script.default_response = "1";
    }
    return std::make_unique<MockGateway>(std::move(script));
}

PrivacyPolicy policy_from(const RunConfig& config) {
    PrivacyPolicy policy;
    policy.enabled = config.privacy;
    policy.epsilon = config.epsilon;
    policy.lambda_mask = config.lambda;
    policy.sensitivity = config.sensitivity;
    policy.delta = config.delta;
    policy.l_max = config.l_max;
    policy.s_max = config.s_max;
    policy.noise_regime = noise_regime_from_string(config.noise_regime);
    policy.seed = config.seed;
    return policy;
}

FederationConfig federation_from(const RunConfig& config) {
    FederationConfig fed;
    fed.topology = topology_from_string(config.topology);
    fed.clients = config.clients;
    fed.edges = config.edges;
    fed.rounds = config.rounds;
    fed.per_client_cap = config.per_client_cap;
    fed.curation.l_max = config.l_max;
    fed.curation.s_max = config.s_max;
    fed.curation.dedup_threshold = config.dedup_threshold;
    fed.policy = policy_from(config);
    fed.textgrad = config.textgrad;
    fed.textgrad_steps = config.textgrad_steps;
    fed.textgrad_batch = config.textgrad_batch;
    fed.edge_summarize = config.edge_summarize;
    fed.adversarial_mode = adversarial_mode_from_string(config.adversarial_mode);
    fed.adversarial_fraction = config.adversarial_fraction;
    fed.seed = config.seed;
    fed.embedding_dim = config.dim;
    return fed;
}

RoutingConfig routing_from(const RunConfig& config) {
    RoutingConfig routing;
    routing.k = config.k;
    routing.use_bm25 = config.bm25;
    routing.bm25_k1 = config.k1;
    routing.bm25_b = config.b;
    return routing;
}

struct Workbench {
    std::vector<DataItem> items;
    DataSplit split;
    Partition train_partition;
    Partition test_partition;
    std::size_t per_client = 0;
};

Workbench make_workbench(const RunConfig& config) {
    Workbench bench;
    bench.items = ingest(config.dataset);
    SplitRatios ratios{config.train_ratio, config.val_ratio, config.test_ratio};
    bench.split = split_items(bench.items, ratios, config.seed);
    bench.per_client =
        config.per_client > 0 ? config.per_client : bench.split.train.size() / config.clients;
    if (bench.per_client == 0) {
        throw InsufficientData("training split too small for " + std::to_string(config.clients) +
                               " clients");
    }
    const auto scheme = partition_scheme_from_string(config.partition_scheme);
    bench.train_partition = make_partition(bench.split.train, scheme, config.clients,
                                           bench.per_client, config.seed,
                                           config.shards_per_client);
    if (!bench.split.test.empty()) {
        const std::size_t per_client_test =
            std::max<std::size_t>(1, bench.split.test.size() / config.clients);
        // Test shards follow the same scheme so client-level statistics are
        // measured on matching distributions; shard granularity collapses to
        // one shard per client when counts do not divide evenly.
        std::size_t shards = config.shards_per_client;
        if (per_client_test % shards != 0) shards = 1;
        bench.test_partition = make_partition(bench.split.test, scheme, config.clients,
                                              per_client_test, config.seed, shards);
    }
    return bench;
}

void ensure_out_dir(const std::string& out) { fs::create_directories(out); }

std::string manifest_json(const RunConfig& config, const std::string& command) {
    json doc;
    doc["command"] = command;
    doc["config"] = json::parse(config_to_json(config));
    doc["git_hash"] = SYNAPSE_GIT_HASH;
    doc["seed"] = config.seed;
    return canonical_dump(doc);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += "\"";
    return out;
}

json trace_to_json(const RoutingTrace& trace) {
    json doc;
    doc["query"] = trace.query;
    json retrieved = json::array();
    for (const auto& [uid, score] : trace.retrieved.ranked) {
        retrieved.push_back({{"uid", uid}, {"score", score}});
    }
    doc["retrieved"] = retrieved;
    doc["rerank_choice"] = trace.rerank_choice;
    doc["rerank_scores"] = trace.rerank_scores;
    doc["plan"] = {{"plan_rationale", trace.plan.plan_rationale},
                   {"scenario_name", trace.plan.scenario_name},
                   {"parent_tool_name", trace.plan.parent_tool_name},
                   {"fallback", trace.plan.fallback},
                   {"normalized", trace.plan.normalized}};
    doc["tool_used"] = trace.tool_used;
    doc["raw_answer"] = trace.raw_answer;
    doc["extracted_answer"] = trace.extracted_answer;
    if (trace.correct) doc["correct"] = *trace.correct;
    doc["mode"] = to_string(trace.mode);
    doc["rerank_parse_failure"] = trace.rerank_parse_failure;
    doc["answer_format_miss"] = trace.answer_format_miss;
    return doc;
}

std::vector<PrivacyProbe> load_probes(const std::string& path) {
    json doc = json::parse(read_file(path));
    std::vector<PrivacyProbe> probes;
    for (const auto& p : doc.at("probes")) {
        PrivacyProbe probe;
        probe.query = p.at("query").get<std::string>();
        probe.gold_scenario_name = p.value("gold_scenario", std::string{});
        probes.push_back(std::move(probe));
    }
    if (probes.empty()) throw ConfigError("probes file contains no probes");
    return probes;
}

GlobalSnapshot load_snapshot(const std::string& path, std::size_t dim) {
    const Compendium c = parse_compendium(read_file(path));
    return make_snapshot(c, c.version, dim);
}

std::string dataset_label(const RunConfig& config) {
    if (!config.dataset_name.empty()) return config.dataset_name;
    if (config.dataset.empty()) return "dataset";
    return fs::path(config.dataset).stem().string();
}

}  // namespace

// ---------------------------------------------------------------------------
// federate
// ---------------------------------------------------------------------------

void cmd_federate(const RunConfig& config) {
    validate_run_config(config, /*needs_dataset=*/true);
    apply_jobs(config);
    const Workbench bench = make_workbench(config);
    const ToolRegistry registry = default_registry();
    auto gateway = make_gateway(config);

    const FederationConfig fed_config = federation_from(config);
    const RunOutputs outputs =
        run_topology(fed_config, bench.split.train, bench.train_partition, registry, *gateway);

    ensure_out_dir(config.out);
    fs::create_directories(fs::path(config.out) / "snapshots");
    for (std::size_t r = 0; r < outputs.snapshots.size(); ++r) {
        const std::string path = (fs::path(config.out) / "snapshots" /
                                  ("round_" + std::to_string(r + 1) + ".compendium.json"))
                                     .string();
        write_file(path, serialize_compendium(outputs.snapshots[r].compendium));
    }
    for (const auto& [client_id, snapshot] : outputs.local_snapshots) {
        const std::string path = (fs::path(config.out) / "snapshots" /
                                  ("local_" + client_id + ".compendium.json"))
                                     .string();
        write_file(path, serialize_compendium(snapshot.compendium));
    }

    std::ostringstream ledger;
    ledger << "round,sender,bytes_up,bytes_down\n";
    for (const auto& e : outputs.ledger.entries) {
        ledger << e.round << "," << csv_escape(e.sender) << "," << e.bytes_up << ","
               << e.bytes_down << "\n";
    }
    write_file((fs::path(config.out) / "ledger.csv").string(), ledger.str());

    const CommArithmetic arithmetic = comm_arithmetic(bench.split.train, config.seed);
    const std::uint64_t effective_rounds =
        fed_config.topology == Topology::static_global ? 1 : config.rounds;
    const double avg_up = outputs.ledger.mean_client_bytes_up(effective_rounds);
    const double total_up = static_cast<double>(outputs.ledger.client_total_up());
    std::ostringstream comm;
    comm << "baseline,clients,avg_bytes_per_client_per_round,total_bytes_all_clients,"
            "ratio_vs_weight_share\n";
    comm << config.topology << "," << config.clients << "," << num_str(avg_up) << ","
         << num_str(total_up) << ","
         << num_str(avg_up > 0.0 ? arithmetic.weight_share_bytes_per_client / avg_up : 0.0)
         << "\n";
    comm << "fed_icl," << config.clients << ","
         << num_str(arithmetic.fed_icl_bytes_per_client) << ","
         << num_str(arithmetic.fed_icl_bytes_per_client * static_cast<double>(config.clients))
         << ",\n";
    // 8e9 parameters x 4 bytes (fp32), up and down: 64 GB per client per round.
    comm << "weight_share_llama31_8b_fp32," << config.clients << ","
         << num_str(arithmetic.weight_share_bytes_per_client) << ","
         << num_str(arithmetic.weight_share_bytes_per_client *
                    static_cast<double>(config.clients))
         << ",\n";
    write_file((fs::path(config.out) / "report_comm.csv").string(), comm.str());

    json metrics;
    metrics["topology"] = config.topology;
    metrics["rounds"] = outputs.snapshots.size();
    metrics["eval_mode"] = to_string(outputs.eval_mode);
    const PrivacyLedger ledger_privacy = compose_privacy(
        config.epsilon, config.delta, std::max<std::uint64_t>(1, effective_rounds));
    metrics["privacy_ledger"] = {{"rounds", ledger_privacy.rounds},
                                 {"per_round_epsilon", ledger_privacy.per_round_epsilon},
                                 {"per_round_delta", ledger_privacy.per_round_delta},
                                 {"composed_epsilon", ledger_privacy.composed_epsilon},
                                 {"composed_delta", ledger_privacy.composed_delta}};
    json failures = json::array();
    for (const auto& round : outputs.rounds) {
        for (const auto& client : round.failed_clients) {
            failures.push_back({{"round", round.round}, {"client", client}});
        }
    }
    metrics["failed_clients"] = failures;
    json sizes = json::array();
    for (const auto& snapshot : outputs.snapshots) {
        sizes.push_back({{"version", snapshot.version},
                         {"scenarios", snapshot.compendium.scenarios.size()},
                         {"bytes", serialize_compendium(snapshot.compendium).size()}});
    }
    metrics["snapshots"] = sizes;
    write_file((fs::path(config.out) / "metrics.json").string(), canonical_dump(metrics));
    write_file((fs::path(config.out) / "manifest.json").string(),
               manifest_json(config, "federate"));
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

void cmd_eval(const RunConfig& config, const std::string& snapshot_path) {
    validate_run_config(config, /*needs_dataset=*/true);
    if (!fs::exists(snapshot_path)) throw ConfigError("snapshot not found: " + snapshot_path);
    apply_jobs(config);

    const Workbench bench = make_workbench(config);
    const ToolRegistry registry = default_registry();
    auto gateway = make_gateway(config);
    const GlobalSnapshot snapshot = load_snapshot(snapshot_path, config.dim);

    const RoutingMode mode = config.mode.empty()
                                 ? eval_mode_for(topology_from_string(config.topology))
                                 : routing_mode_from_string(config.mode);
    EvalOutcome outcome = evaluate(snapshot, registry, *gateway, bench.split.test, mode,
                                   bench.test_partition.assignment, routing_from(config));
    const auto [div_mean, div_std] =
        partition_divergence(bench.train_partition, bench.split.train);
    outcome.report.divergence_mean = div_mean;
    outcome.report.divergence_std = div_std;

    ensure_out_dir(config.out);
    std::ostringstream report;
    report << "metric,value\n";
    report << "global_acc," << num_str(outcome.report.global_acc) << "\n";
    report << "macro_acc," << num_str(outcome.report.macro_acc) << "\n";
    report << "spread," << num_str(outcome.report.spread) << "\n";
    report << "std_dev," << num_str(outcome.report.std_dev) << "\n";
    for (const auto& [k, recall] : outcome.report.recall_at) {
        report << "recall@" << k << "," << num_str(recall) << "\n";
    }
    report << "divergence_mean," << num_str(outcome.report.divergence_mean) << "\n";
    report << "divergence_std," << num_str(outcome.report.divergence_std) << "\n";
    for (const auto& [client, acc] : outcome.report.per_client_acc) {
        report << "client_acc:" << client << "," << num_str(acc) << "\n";
    }
    write_file((fs::path(config.out) / "report_eval.csv").string(), report.str());

    std::ostringstream table;
    table << "dataset,split,metric,value\n";
    const std::string label = dataset_label(config);
    const std::string split_label =
        config.partition_scheme == "iid" ? "iid" : "noniid";
    table << label << "," << split_label << ",global_acc,"
          << num_str(outcome.report.global_acc) << "\n";
    table << label << "," << split_label << ",macro_acc," << num_str(outcome.report.macro_acc)
          << "\n";
    table << label << "," << split_label << ",spread," << num_str(outcome.report.spread) << "\n";
    table << label << "," << split_label << ",std_dev," << num_str(outcome.report.std_dev)
          << "\n";
    table << label << "," << split_label << ",divergence_mean,"
          << num_str(outcome.report.divergence_mean) << "\n";
    table << label << "," << split_label << ",divergence_std,"
          << num_str(outcome.report.divergence_std) << "\n";
    write_file((fs::path(config.out) / "report_iid_vs_noniid.csv").string(), table.str());

    std::ostringstream traces;
    for (const auto& trace : outcome.traces) {
        traces << canonical_dump(trace_to_json(trace)) << "\n";
    }
    write_file((fs::path(config.out) / "traces.jsonl").string(), traces.str());
    write_file((fs::path(config.out) / "manifest.json").string(), manifest_json(config, "eval"));
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

namespace {

void sweep_privacy(const RunConfig& config) {
    if (config.snapshot.empty()) throw ConfigError("privacy sweep needs a snapshot");
    if (!fs::exists(config.snapshot)) throw ConfigError("snapshot not found: " + config.snapshot);
    if (config.probes.empty()) throw ConfigError("privacy sweep needs probes");
    if (config.eps_grid.empty() || config.lambda_grid.empty() || config.recall_ks.empty()) {
        throw ConfigError("privacy sweep grids must be non-empty");
    }
    const GlobalSnapshot snapshot = load_snapshot(config.snapshot, config.dim);
    const auto probes = load_probes(config.probes);
    for (const auto& probe : probes) {
        if (probe.gold_scenario_name.empty()) {
            throw ConfigError("privacy sweep probes need gold_scenario labels");
        }
    }
    const auto cells = privacy_sweep(snapshot, probes, policy_from(config), config.eps_grid,
                                     config.lambda_grid, config.recall_ks);

    std::ostringstream csv;
    csv << "epsilon,lambda,k,recall,mean_distortion\n";
    json plot = json::array();
    for (const auto& cell : cells) {
        for (const auto& [k, recall] : cell.recall_at) {
            csv << num_str(cell.epsilon) << "," << num_str(cell.lambda) << "," << k << ","
                << num_str(recall) << "," << num_str(cell.mean_distortion) << "\n";
        }
        json entry;
        entry["epsilon"] = cell.epsilon;
        entry["lambda"] = cell.lambda;
        entry["mean_distortion"] = cell.mean_distortion;
        for (const auto& [k, recall] : cell.recall_at) {
            entry["recall@" + std::to_string(k)] = recall;
        }
        plot.push_back(entry);
    }
    write_file((fs::path(config.out) / "report_privacy_sweep.csv").string(), csv.str());
    write_file((fs::path(config.out) / "plot_privacy_sweep.json").string(),
               canonical_dump(plot));
}

void sweep_robustness(const RunConfig& config) {
    validate_run_config(config, /*needs_dataset=*/true);
    if (config.fractions.empty()) throw ConfigError("robustness sweep needs fractions");
    const Workbench bench = make_workbench(config);
    const ToolRegistry registry = default_registry();
    auto gateway = make_gateway(config);

    RobustnessInputs inputs;
    inputs.config = federation_from(config);
    inputs.train_items = bench.split.train;
    inputs.partition = bench.train_partition;
    inputs.test_items = bench.split.test;
    inputs.test_assignment = bench.test_partition.assignment;
    const auto curve = robustness_sweep(inputs, config.fractions, registry, *gateway);

    std::ostringstream csv;
    csv << "fraction,accuracy,recall_at_5\n";
    json plot = json::array();
    for (const auto& point : curve) {
        csv << num_str(point.fraction) << "," << num_str(point.accuracy) << ","
            << num_str(point.recall_at_5) << "\n";
        plot.push_back({{"fraction", point.fraction},
                        {"accuracy", point.accuracy},
                        {"recall_at_5", point.recall_at_5}});
    }
    write_file((fs::path(config.out) / "report_robustness.csv").string(), csv.str());
    write_file((fs::path(config.out) / "plot_robustness.json").string(), canonical_dump(plot));
}

void sweep_convergence(const RunConfig& config) {
    validate_run_config(config, /*needs_dataset=*/true);
    if (config.probes.empty()) throw ConfigError("convergence sweep needs probes");
    const Workbench bench = make_workbench(config);
    const ToolRegistry registry = default_registry();
    auto gateway = make_gateway(config);
    const auto probes = load_probes(config.probes);
    std::vector<std::string> queries;
    for (const auto& probe : probes) queries.push_back(probe.query);

    std::ostringstream csv;
    csv << "regime,epsilon,lambda,round,delta_tool,delta_score,converged_at\n";
    json plot = json::array();
    for (const NoiseRegime regime : {NoiseRegime::fixed, NoiseRegime::unfixed}) {
        for (const double eps : config.eps_grid) {
            for (const double lambda : config.lambda_grid) {
                FederationConfig fed = federation_from(config);
                fed.rounds = config.convergence_rounds;
                fed.policy.enabled = true;
                fed.policy.noise_regime = regime;
                fed.policy.epsilon = eps;
                fed.policy.lambda_mask = lambda;
                const RunOutputs outputs = run_topology(fed, bench.split.train,
                                                        bench.train_partition, registry,
                                                        *gateway);
                const ConvergenceSeries series =
                    convergence_probe(outputs.snapshots, queries, registry, *gateway);
                const std::string converged =
                    series.converged_at ? std::to_string(*series.converged_at) : "none";
                for (const auto& point : series.per_round) {
                    csv << to_string(regime) << "," << num_str(eps) << "," << num_str(lambda)
                        << "," << point.round << "," << num_str(point.delta_tool) << ","
                        << num_str(point.delta_score) << "," << converged << "\n";
                }
                json entry;
                entry["regime"] = to_string(regime);
                entry["epsilon"] = eps;
                entry["lambda"] = lambda;
                entry["converged_at"] = series.converged_at ? json(*series.converged_at)
                                                            : json(nullptr);
                json rounds = json::array();
                for (const auto& point : series.per_round) {
                    rounds.push_back({{"round", point.round},
                                      {"delta_tool", point.delta_tool},
                                      {"delta_score", point.delta_score}});
                }
                entry["rounds"] = rounds;
                plot.push_back(entry);
            }
        }
    }
    write_file((fs::path(config.out) / "report_convergence.csv").string(), csv.str());
    write_file((fs::path(config.out) / "plot_convergence.json").string(), canonical_dump(plot));
}

void sweep_scalability(const RunConfig& config) {
    if (config.snapshot.empty()) throw ConfigError("scalability sweep needs a snapshot");
    if (!fs::exists(config.snapshot)) throw ConfigError("snapshot not found: " + config.snapshot);
    if (config.probes.empty()) throw ConfigError("scalability sweep needs probes");
    if (config.sizes.empty()) throw ConfigError("scalability sweep needs sizes");
    const GlobalSnapshot snapshot = load_snapshot(config.snapshot, config.dim);
    const auto probes = load_probes(config.probes);
    const auto points = scalability_sweep(snapshot, probes, config.sizes, config.dim);

    std::ostringstream csv;
    csv << "scenario_count,snapshot_bytes,recall_at_5\n";
    json plot = json::array();
    for (const auto& point : points) {
        csv << point.scenario_count << "," << point.snapshot_bytes << ","
            << num_str(point.recall_at_5) << "\n";
        plot.push_back({{"scenario_count", point.scenario_count},
                        {"snapshot_bytes", point.snapshot_bytes},
                        {"recall_at_5", point.recall_at_5}});
    }
    write_file((fs::path(config.out) / "report_scalability.csv").string(), csv.str());
    write_file((fs::path(config.out) / "plot_scalability.json").string(), canonical_dump(plot));
}

}  // namespace

void cmd_sweep(const RunConfig& config, const std::string& sweep_kind) {
    apply_jobs(config);
    ensure_out_dir(config.out);
    if (sweep_kind == "privacy") {
        sweep_privacy(config);
    } else if (sweep_kind == "robustness") {
        sweep_robustness(config);
    } else if (sweep_kind == "convergence") {
        sweep_convergence(config);
    } else if (sweep_kind == "scalability") {
        sweep_scalability(config);
    } else {
        throw ConfigError("unknown sweep kind: " + sweep_kind);
    }
    write_file((fs::path(config.out) / "manifest.json").string(),
               manifest_json(config, "sweep:" + sweep_kind));
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

void cmd_attack(const RunConfig& config) {
    validate_run_config(config, /*needs_dataset=*/false);
    if (config.attack_clients.empty()) throw ConfigError("attack needs an attack_clients file");
    if (!fs::exists(config.attack_clients)) {
        throw ConfigError("attack clients file not found: " + config.attack_clients);
    }
    apply_jobs(config);
    auto gateway = make_gateway(config);

    json doc = json::parse(read_file(config.attack_clients));
    std::vector<AttackClient> clients;
    for (const auto& entry : doc.at("clients")) {
        AttackClient client;
        client.client_id = entry.at("client_id").get<std::string>();
        client.server_query = entry.at("server_query").get<std::string>();
        const json& s = entry.at("scenario");
        client.scenario.scenario_name = s.at("scenario").get<std::string>();
        client.scenario.context = s.value("context", std::string{});
        client.scenario.tool_id = s.at("tool_id").get<std::string>();
        if (s.contains("tags") && s["tags"].is_object()) {
            if (s["tags"].contains("domain")) {
                client.scenario.tags.domain = s["tags"]["domain"].get<std::string>();
            }
            if (s["tags"].contains("task_type")) {
                client.scenario.tags.task_type = s["tags"]["task_type"].get<std::string>();
            }
        }
        if (s.contains("difficulty")) {
            client.scenario.difficulty =
                difficulty_from_string(s.at("difficulty").get<std::string>());
        }
        client.scenario.uid = scenario_uid(client.scenario);
        clients.push_back(std::move(client));
    }
    if (clients.empty()) throw ConfigError("attack clients file lists no clients");

    const auto results = attack_eval(clients, *gateway, policy_from(config));

    ensure_out_dir(config.out);
    std::ostringstream csv;
    csv << "client_id,signature,token_overlap,cosine_sim\n";
    for (const auto& r : results) {
        csv << csv_escape(r.client_id) << "," << csv_escape(r.signature.key()) << ","
            << num_str(r.token_overlap) << "," << num_str(r.cosine_sim) << "\n";
    }
    write_file((fs::path(config.out) / "report_attack.csv").string(), csv.str());

    json detail = json::array();
    for (const auto& r : results) {
        detail.push_back({{"client_id", r.client_id},
                          {"signature", r.signature.key()},
                          {"observed_output", r.observed_output},
                          {"ground_truth_prompt", r.ground_truth_prompt},
                          {"reconstruction", r.reconstruction},
                          {"token_overlap", r.token_overlap},
                          {"cosine_sim", r.cosine_sim}});
    }
    write_file((fs::path(config.out) / "attack_detail.json").string(), canonical_dump(detail));
    write_file((fs::path(config.out) / "manifest.json").string(),
               manifest_json(config, "attack"));
}

}  // namespace synapse
