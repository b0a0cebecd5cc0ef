#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synapse/dataset.hpp"
#include "synapse/federation.hpp"
#include "synapse/privacy.hpp"
#include "synapse/retrieval.hpp"
#include "synapse/routing.hpp"

namespace synapse {

struct EvalReport {
    double global_acc = 0.0;
    double macro_acc = 0.0;   // unweighted mean of per-client accuracies
    double spread = 0.0;      // max - min per-client accuracy
    double std_dev = 0.0;     // population standard deviation
    std::map<std::string, double> per_client_acc;
    std::map<std::size_t, double> recall_at;
    double divergence_mean = 0.0;
    double divergence_std = 0.0;
};

struct EvalOutcome {
    EvalReport report;
    std::vector<RoutingTrace> traces;
};

// Routes every item, scores extracted vs gold (numeric tolerance 1e-6,
// case-folded otherwise) and aggregates per-client statistics. `assignment`
// groups test items by client for the fairness metrics; items outside it
// fall into a single "global" bucket. Recall gold is the snapshot scenario
// matching the item's domain tag and owning tool.
EvalOutcome evaluate(const GlobalSnapshot& snapshot, const ToolRegistry& registry,
                     Gateway& gateway, const std::vector<DataItem>& items, RoutingMode mode,
                     const std::map<std::string, std::vector<std::string>>& assignment = {},
                     const RoutingConfig& config = {});

struct ConvergencePoint {
    std::uint64_t round = 0;       // the later round of the compared pair
    double delta_tool = 0.0;       // fraction of probes whose tool changed
    double delta_score = 0.0;      // mean |change of chosen candidate's cosine|
};

struct ConvergenceSeries {
    std::vector<ConvergencePoint> per_round;
    std::optional<std::uint64_t> converged_at;
};

inline constexpr double kDeltaToolThreshold = 0.02;
inline constexpr double kDeltaScoreThreshold = 0.01;

// Round-to-round drift of tool selection and chosen-candidate scores over a
// probe set; converged_at is the first round where both deltas sit under
// their thresholds for two consecutive rounds.
ConvergenceSeries convergence_probe(const std::vector<GlobalSnapshot>& snapshots,
                                    const std::vector<std::string>& probe_queries,
                                    const ToolRegistry& registry, Gateway& gateway,
                                    RoutingMode mode = RoutingMode::full);

struct StageStats {
    std::size_t success = 0;
    std::size_t failure = 0;
    double acc_given_success = 0.0;
    double acc_given_failure = 0.0;
};

struct ErrorBreakdown {
    StageStats retrieval;  // gold scenario retrieved
    StageStats rerank;     // rerank picked the gold scenario
    StageStats plan;       // parent tool matched the gold tool
    StageStats stability;  // tool stable across the paraphrase set
};

struct GoldLabel {
    std::string gold_uid;
    std::string gold_tool;
    std::string gold_answer;
};

// Stage-wise hit/match/stable conditioning of accuracy. Paraphrase traces
// (3 rewrites per probe, fixtures) drive the stability stage and may be
// empty.
ErrorBreakdown error_breakdown(const std::vector<RoutingTrace>& traces,
                               const std::map<std::string, GoldLabel>& gold,
                               const std::map<std::string, std::vector<RoutingTrace>>&
                                   paraphrase_traces = {});

struct RobustnessPoint {
    double fraction = 0.0;
    double accuracy = 0.0;
    double recall_at_5 = 0.0;
};

struct RobustnessInputs {
    FederationConfig config;
    std::vector<DataItem> train_items;
    Partition partition;
    std::vector<DataItem> test_items;
    std::map<std::string, std::vector<std::string>> test_assignment;
};

// Marks the given share of clients adversarial, reruns federation +
// evaluation per fraction.
std::vector<RobustnessPoint> robustness_sweep(const RobustnessInputs& inputs,
                                              const std::vector<double>& fractions,
                                              const ToolRegistry& registry, Gateway& gateway);

struct PrivacyCell {
    double epsilon = 0.0;
    double lambda = 0.0;
    std::map<std::size_t, double> recall_at;
    double mean_distortion = 0.0;  // mean ||e(s) - e(s~)||_2 over scenarios
};

struct PrivacyProbe {
    std::string query;
    std::string gold_scenario_name;  // resolved against the pre-policy snapshot
};

// Applies each (epsilon, lambda) to the snapshot, re-indexes and measures
// Recall@K against the pre-policy gold uids plus embedding distortion.
std::vector<PrivacyCell> privacy_sweep(const GlobalSnapshot& snapshot,
                                       const std::vector<PrivacyProbe>& probes,
                                       const PrivacyPolicy& base_policy,
                                       const std::vector<double>& eps_grid,
                                       const std::vector<double>& lambda_grid,
                                       const std::vector<std::size_t>& ks);

struct ScalabilityPoint {
    std::size_t scenario_count = 0;
    std::uint64_t snapshot_bytes = 0;
    double recall_at_5 = 0.0;
};

// Recall/size trade-off over growing prefixes of the snapshot's scenarios.
std::vector<ScalabilityPoint> scalability_sweep(const GlobalSnapshot& snapshot,
                                                const std::vector<PrivacyProbe>& probes,
                                                const std::vector<double>& fractions,
                                                std::size_t dim = kDefaultEmbeddingDim);

struct AttackResult {
    std::string client_id;
    Signature signature;
    std::string observed_output;
    std::string ground_truth_prompt;
    std::string reconstruction;
    double token_overlap = 0.0;  // Jaccard over lowercase whitespace tokens
    double cosine_sim = 0.0;     // hash-embedding cosine
};

struct AttackClient {
    std::string client_id;
    std::string server_query;
    UsageScenario scenario;  // the private in-context example under attack
};

// Builds each client's private prompt, emits the policy-transformed
// observation, runs the adversarial reconstruction prompt through the
// attacker gateway and scores the leakage.
std::vector<AttackResult> attack_eval(const std::vector<AttackClient>& clients,
                                      Gateway& attacker_gateway, const PrivacyPolicy& policy);

// Fig-8-style private prompt text for a scenario.
std::string private_prompt_for(const UsageScenario& scenario);

double attack_token_overlap(const std::string& ground_truth, const std::string& reconstruction);
double attack_cosine(const std::string& ground_truth, const std::string& reconstruction);

}  // namespace synapse
