#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "synapse/cli_commands.hpp"
#include "synapse/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void emit_error(const std::string& kind, const std::string& message) {
    nlohmann::json doc;
    doc["error"] = kind;
    doc["message"] = message;
    std::fprintf(stderr, "%s\n", doc.dump().c_str());
}

// Flags override values loaded from --config.
void add_common_flags(CLI::App* cmd, synapse::RunConfig& config) {
    cmd->add_option("--topology", config.topology,
                    "synapse_tiered|centralized|centralized_retrieval_only|static_global|"
                    "local_only|no_routing|flat_server");
    cmd->add_option("--clients", config.clients, "Number of federated clients");
    cmd->add_option("--edges", config.edges, "Edge aggregators (0 = one per 3 clients)");
    cmd->add_option("--rounds", config.rounds, "Federated rounds");
    cmd->add_option("--per-client", config.per_client, "Training items per client (0 = auto)");
    cmd->add_option("--per-client-cap", config.per_client_cap, "Max scenarios per client");
    cmd->add_option("--shards-per-client", config.shards_per_client, "Non-IID shard count");
    cmd->add_option("--partition", config.partition_scheme,
                    "iid|noniid_question_length|noniid_answer_range");
    cmd->add_option("--dataset", config.dataset, "Dataset JSONL path");
    cmd->add_option("--dataset-name", config.dataset_name, "Dataset label for reports");
    cmd->add_option("--probes", config.probes, "Probe queries JSON");
    cmd->add_option("--snapshot", config.snapshot, "Compendium snapshot path (sweeps)");
    cmd->add_option("--attack-clients", config.attack_clients, "Attack fixture JSON");
    cmd->add_option("--mode", config.mode, "Routing mode override: full|retrieval_only|heuristic");
    cmd->add_option("--llm", config.llm, "Gateway provider: mock|http");
    cmd->add_option("--mock-script", config.mock_script, "MockScript JSON path");
    cmd->add_option("--endpoint", config.endpoint, "HTTP endpoint (overrides env)");
    cmd->add_option("--model", config.model, "Model name for http provider");

    auto* privacy = cmd->add_option("--privacy", "Privacy transforms: on|off");
    privacy->check(CLI::IsMember({"on", "off"}))
        ->each([&config](const std::string& v) { config.privacy = v == "on"; });
    cmd->add_option("--epsilon", config.epsilon, "DP budget epsilon");
    cmd->add_option("--lambda", config.lambda, "Masking strength lambda");
    cmd->add_option("--sensitivity", config.sensitivity, "Numeric sensitivity");
    cmd->add_option("--delta", config.delta, "Composition delta");
    cmd->add_option("--l-max", config.l_max, "Scenario character cap");
    cmd->add_option("--s-max", config.s_max, "Scenario sentence cap");
    cmd->add_option("--noise-regime", config.noise_regime, "fixed|unfixed");

    cmd->add_option("--k", config.k, "Retrieval top-k");
    cmd->add_option("--dim", config.dim, "Embedding dimension");
    cmd->add_flag("--bm25", config.bm25, "Use BM25 lexical retrieval");
    cmd->add_option("--k1", config.k1, "BM25 k1");
    cmd->add_option("--b", config.b, "BM25 b");
    cmd->add_option("--dedup-threshold", config.dedup_threshold, "Dedup Jaccard threshold");

    cmd->add_flag("--textgrad", config.textgrad, "Enable keep-if-improves prompt refinement");
    cmd->add_option("--textgrad-steps", config.textgrad_steps, "Refinement steps");
    cmd->add_option("--textgrad-batch", config.textgrad_batch, "Refinement batch size");
    cmd->add_flag("--edge-summarize", config.edge_summarize,
                  "Summarize prompt variants at edges via the gateway");

    cmd->add_option("--adversarial-mode", config.adversarial_mode,
                    "honest|cross_source|random|tool_confusion");
    cmd->add_option("--adversarial-fraction", config.adversarial_fraction,
                    "Share of adversarial clients");

    cmd->add_option("--train-ratio", config.train_ratio, "Training split ratio");
    cmd->add_option("--val-ratio", config.val_ratio, "Validation split ratio");
    cmd->add_option("--test-ratio", config.test_ratio, "Test split ratio");

    cmd->add_option("--eps-grid", config.eps_grid, "Sweep epsilon grid");
    cmd->add_option("--lambda-grid", config.lambda_grid, "Sweep lambda grid");
    cmd->add_option("--recall-ks", config.recall_ks, "Recall@K cut-offs");
    cmd->add_option("--fractions", config.fractions, "Robustness adversarial fractions");
    cmd->add_option("--sizes", config.sizes, "Scalability compendium size fractions");
    cmd->add_option("--convergence-rounds", config.convergence_rounds,
                    "Rounds per convergence series");

    cmd->add_option("--seed", config.seed, "Run seed");
    cmd->add_option("--out", config.out, "Output directory");
    cmd->add_option("--jobs", config.jobs, "Worker budget for sweeps and batches");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synapse: federated compendium exchange for tool-routed agents"};
    app.require_subcommand(1);

    // --config loads first so explicit flags override file values.
    synapse::RunConfig config;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                config = synapse::load_config_file(argv[i + 1]);
            } catch (const synapse::SynapseError& e) {
                emit_error(e.kind(), e.what());
                return kExitConfig;
            }
            break;
        }
    }
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    auto* federate = app.add_subcommand("federate", "Run federated rounds, write snapshots");
    add_common_flags(federate, config);

    std::string snapshot_path;
    auto* eval = app.add_subcommand("eval", "Evaluate a snapshot on the test split");
    eval->add_option("snapshot_path", snapshot_path, "Snapshot compendium JSON")->required();
    add_common_flags(eval, config);

    std::string sweep_kind;
    auto* sweep = app.add_subcommand("sweep", "Parameter sweeps and reports");
    sweep->add_option("kind", sweep_kind, "privacy|robustness|convergence|scalability")
        ->required();
    add_common_flags(sweep, config);

    auto* attack = app.add_subcommand("attack", "Prompt-extraction attack harness");
    add_common_flags(attack, config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        emit_error("UsageError", e.what());
        return kExitConfig;
    }

    try {
        if (federate->parsed()) {
            synapse::cmd_federate(config);
        } else if (eval->parsed()) {
            synapse::cmd_eval(config, snapshot_path);
        } else if (sweep->parsed()) {
            synapse::cmd_sweep(config, sweep_kind);
        } else if (attack->parsed()) {
            synapse::cmd_attack(config);
        }
    } catch (const synapse::ConfigError& e) {
        emit_error(e.kind(), e.what());
        return kExitConfig;
    } catch (const synapse::InsufficientData& e) {
        emit_error(e.kind(), e.what());
        return kExitConfig;
    } catch (const synapse::SynapseError& e) {
        emit_error(e.kind(), e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        emit_error("InternalError", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}
