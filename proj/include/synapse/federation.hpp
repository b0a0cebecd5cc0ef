#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "synapse/compendium.hpp"
#include "synapse/dataset.hpp"
#include "synapse/llm_gateway.hpp"
#include "synapse/privacy.hpp"
#include "synapse/retrieval.hpp"
#include "synapse/routing.hpp"

namespace synapse {

enum class AdversarialMode { honest, cross_source, random, tool_confusion };

std::string to_string(AdversarialMode m);
AdversarialMode adversarial_mode_from_string(const std::string& s);

enum class Topology {
    synapse_tiered,
    centralized,
    centralized_retrieval_only,
    static_global,
    local_only,
    no_routing,
    flat_server,
};

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

// Which routing mode an evaluation against this topology's snapshot uses.
RoutingMode eval_mode_for(Topology t);

struct ClientState {
    std::string client_id;
    std::vector<DataItem> local_data;
    Compendium local_compendium;
    PrivacyPolicy policy;
    AdversarialMode adversarial_mode = AdversarialMode::honest;
};

struct EdgeAggregator {
    std::string edge_id;
    std::vector<std::string> member_clients;
};

// The server's merged, versioned view; the unit redistributed each round.
struct GlobalSnapshot {
    std::int64_t version = 0;
    Compendium compendium;
    EmbeddingIndex index;
};

GlobalSnapshot make_snapshot(Compendium compendium, std::int64_t version,
                             std::size_t dim = kDefaultEmbeddingDim);

inline SnapshotView view(const GlobalSnapshot& snapshot) {
    return SnapshotView{snapshot.compendium, snapshot.index};
}

struct CommEntry {
    std::uint64_t round = 0;
    std::string sender;
    std::uint64_t bytes_up = 0;
    std::uint64_t bytes_down = 0;
};

struct CommLedger {
    std::vector<CommEntry> entries;

    std::uint64_t total_up() const;
    std::uint64_t total_down() const;
    // Uploads by client senders only (edge rows excluded), per round count.
    double mean_client_bytes_up(std::uint64_t rounds) const;
    std::uint64_t client_total_up() const;
};

struct PromptVariant {
    Signature signature;
    std::string tool_id;
    std::string text;
    double local_score = 0.0;
    bool accepted = false;
};

// What a client actually transmits: the policy-transformed compendium plus
// the scored prompt variants TextGrad produced for it.
struct ClientUpload {
    std::string client_id;
    Compendium compendium;
    std::vector<PromptVariant> variants;
    bool failed = false;
    std::string failure;
};

// Minimal uploads carry tools + scenarios only (the one-shot static-global
// baseline); full uploads add precautions, templates, coordination, annex
// and numeric metadata.
enum class ArtifactScope { minimal, full };

struct FederationConfig {
    Topology topology = Topology::synapse_tiered;
    std::size_t clients = 3;
    std::size_t edges = 0;  // 0 -> ceil(clients / 3)
    std::uint64_t rounds = 3;
    std::size_t per_client_cap = 16;
    CurationPolicy curation;
    PrivacyPolicy policy;
    ArtifactScope scope = ArtifactScope::full;
    bool textgrad = false;
    std::size_t textgrad_steps = 3;
    std::size_t textgrad_batch = 3;
    bool edge_summarize = false;
    AdversarialMode adversarial_mode = AdversarialMode::honest;
    double adversarial_fraction = 0.0;
    std::uint64_t seed = 0;
    std::size_t embedding_dim = kDefaultEmbeddingDim;
};

struct FederationState {
    FederationConfig config;
    std::vector<ClientState> clients;
    std::vector<EdgeAggregator> edges;
    GlobalSnapshot snapshot;
    CommLedger ledger;
    ToolRegistry registry;
    Gateway* gateway = nullptr;
};

// Wires clients (sorted ids, round-robin edge assignment) from a partition
// and marks the first ceil(fraction*K) of them adversarial.
FederationState make_federation(const FederationConfig& config,
                                const std::vector<DataItem>& train_items,
                                const Partition& partition, const ToolRegistry& registry,
                                Gateway& gateway);

// One usage scenario per distinct (tool, domain) cluster in the local data;
// adversarial modes corrupt the output deterministically under the run seed.
std::vector<UsageScenario> generate_artifacts(const ClientState& client,
                                              std::size_t per_client_cap,
                                              std::uint64_t seed);

// Keep-if-improves prompt refinement: each step asks the gateway for a
// rewrite given the failing batch examples and accepts only on strict
// local-batch improvement.
PromptVariant textgrad_refine(const PromptVariant& variant, const std::vector<DataItem>& batch,
                              Gateway& gateway, std::size_t steps, std::size_t batch_size,
                              const ToolRegistry& registry,
                              const std::vector<UsageScenario>& context);

// The client-side phase of a round: artifacts, optional TextGrad, privacy.
ClientUpload client_prepare(const ClientState& client, const FederationConfig& config,
                            std::uint64_t round, const ToolRegistry& registry, Gateway* gateway);

struct EdgeResult {
    Compendium compendium;
    std::map<std::string, std::size_t> rejected;  // client_id -> invalid artifacts
};

// Deduplicate, enforce schema consistency and resolve prompt variants
// (summarize via gateway when provided, else keep the highest-scoring one).
EdgeResult edge_aggregate(const std::vector<ClientUpload>& uploads, double dedup_threshold,
                          Gateway* gateway, const std::string& edge_id);

// Fresh-first merge into the previous snapshot: an artifact re-uploaded
// under the same uid replaces the incumbent, which is what lets re-sampled
// (unfixed) noise reach the snapshot while fixed noise leaves it unchanged.
GlobalSnapshot server_merge(const std::vector<Compendium>& edge_outputs,
                            const GlobalSnapshot& prev, double dedup_threshold,
                            std::size_t dim = kDefaultEmbeddingDim);

struct RoundReport {
    std::uint64_t round = 0;
    std::vector<std::string> failed_clients;
};

RoundReport run_round(FederationState& fed, std::uint64_t round);

struct RunOutputs {
    std::vector<GlobalSnapshot> snapshots;                  // one per round
    std::map<std::string, GlobalSnapshot> local_snapshots;  // local_only topology
    CommLedger ledger;
    RoutingMode eval_mode = RoutingMode::full;
    std::vector<RoundReport> rounds;
};

RunOutputs run_topology(const FederationConfig& config, const std::vector<DataItem>& train_items,
                        const Partition& partition, const ToolRegistry& registry,
                        Gateway& gateway);

// Comparison rows for the communication report, arithmetic models only.
struct CommArithmetic {
    double fed_icl_bytes_per_client = 0.0;   // 8 exemplars per client
    double weight_share_bytes_per_client = 0.0;
};

CommArithmetic comm_arithmetic(const std::vector<DataItem>& items, std::uint64_t seed);

}  // namespace synapse
