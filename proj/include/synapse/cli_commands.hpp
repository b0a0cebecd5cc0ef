#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace synapse {

// Everything a run needs, loadable from a JSON config file and overridable
// by flags. Defaults follow the reference experiment setup: 3 clients, 3
// rounds, k=5, epsilon 1.0, TextGrad batch 3 / 3 steps, 512-dim embeddings,
// BM25 k1=1.5 b=0.75.
struct RunConfig {
    // federation
    std::string topology = "synapse_tiered";
    std::size_t clients = 3;
    std::size_t edges = 0;  // 0 -> ceil(clients/3)
    std::uint64_t rounds = 3;
    std::size_t per_client = 0;  // 0 -> train size / clients
    std::size_t per_client_cap = 16;
    std::size_t shards_per_client = 5;
    std::string partition_scheme = "iid";
    std::string dataset;
    std::string dataset_name;  // label for reports; defaults to file stem
    std::string probes;        // probe queries JSON for sweeps
    std::string snapshot;      // compendium JSON for eval/sweeps on a fixed snapshot
    std::string attack_clients;  // attack fixture JSON
    std::string mode;            // routing mode override; empty = topology default

    // gateway
    std::string llm = "mock";  // mock | http
    std::string mock_script;
    std::string endpoint;
    std::string model;

    // privacy
    bool privacy = true;
    double epsilon = 1.0;
    double lambda = 1.0;
    double sensitivity = 1.0;
    double delta = 1e-5;
    std::size_t l_max = 280;
    std::size_t s_max = 3;
    std::string noise_regime = "fixed";

    // retrieval
    std::size_t k = 5;
    std::size_t dim = 512;
    bool bm25 = false;
    double k1 = 1.5;
    double b = 0.75;
    double dedup_threshold = 0.9;

    // textgrad
    bool textgrad = false;
    std::size_t textgrad_steps = 3;
    std::size_t textgrad_batch = 3;
    bool edge_summarize = false;

    // adversarial
    std::string adversarial_mode = "honest";
    double adversarial_fraction = 0.0;

    // splits
    double train_ratio = 0.6;
    double val_ratio = 0.2;
    double test_ratio = 0.2;

    // sweep grids
    std::vector<double> eps_grid = {0.5, 1.0, 2.0};
    std::vector<double> lambda_grid = {0.5, 1.0, 1.5};
    std::vector<std::size_t> recall_ks = {1, 5, 10};
    std::vector<double> fractions = {0.0, 0.2, 0.4, 0.6};
    std::vector<double> sizes = {0.25, 0.5, 0.75, 1.0};
    std::uint64_t convergence_rounds = 10;

    // run
    std::uint64_t seed = 0;
    std::string out = "out";
    int jobs = 0;  // 0 = library default
};

RunConfig load_config_file(const std::string& path);
void apply_config_json(RunConfig& config, const std::string& json_text);
std::string config_to_json(const RunConfig& config);

// Throws ConfigError on any invalid combination; never touches outputs.
void validate_run_config(const RunConfig& config, bool needs_dataset);

// Subcommand bodies; throw SynapseError subclasses on failure.
void cmd_federate(const RunConfig& config);
void cmd_eval(const RunConfig& config, const std::string& snapshot_path);
void cmd_sweep(const RunConfig& config, const std::string& sweep_kind);
void cmd_attack(const RunConfig& config);

}  // namespace synapse
