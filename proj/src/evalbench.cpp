#include "synapse/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "synapse/errors.hpp"
#include "synapse/util.hpp"

namespace synapse {

namespace {

std::string replace_all(std::string text, const std::string& slot, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(slot, pos)) != std::string::npos) {
        text.replace(pos, slot.size(), value);
        pos += value.size();
    }
    return text;
}

// Retrieval recall in evaluation reports is name-based: any snapshot
// scenario named like the item's domain tag and owned by the gold tool
// counts as the gold entry.
std::set<std::string> gold_uids_for(const GlobalSnapshot& snapshot, const DataItem& item) {
    std::set<std::string> uids;
    for (const auto& s : snapshot.compendium.scenarios) {
        if (s.scenario_name == item.tags.domain && s.tool_id == item.gold_tool) {
            uids.insert(s.uid);
        }
    }
    return uids;
}

}  // namespace

EvalOutcome evaluate(const GlobalSnapshot& snapshot, const ToolRegistry& registry,
                     Gateway& gateway, const std::vector<DataItem>& items, RoutingMode mode,
                     const std::map<std::string, std::vector<std::string>>& assignment,
                     const RoutingConfig& config) {
    EvalOutcome outcome;
    outcome.traces.resize(items.size());
    std::vector<int> correct(items.size(), 0);
    std::vector<std::set<std::string>> gold_sets(items.size());

    const std::int64_t n = static_cast<std::int64_t>(items.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& item = items[static_cast<std::size_t>(i)];
        auto& trace = outcome.traces[static_cast<std::size_t>(i)];
        try {
            trace = route_query(item.question, view(snapshot), registry, gateway, mode, config);
            trace.correct = answers_match(trace.extracted_answer, item.gold_answer);
        } catch (const SynapseError& e) {
            trace.query = item.question;
            trace.mode = mode;
            trace.raw_answer = std::string("error: ") + e.what();
            trace.correct = false;
        }
        correct[static_cast<std::size_t>(i)] = trace.correct.value_or(false) ? 1 : 0;
        gold_sets[static_cast<std::size_t>(i)] = gold_uids_for(snapshot, item);
    }

    std::size_t hits = 0;
    for (const int c : correct) hits += static_cast<std::size_t>(c);
    outcome.report.global_acc =
        items.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(items.size());

    // Per-client accuracies from the assignment; unassigned items pool into
    // one bucket.
    std::map<std::string, std::string> item_client;
    for (const auto& [client, ids] : assignment) {
        for (const auto& id : ids) item_client[id] = client;
    }
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // correct, total
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto it = item_client.find(items[i].id);
        const std::string client = it == item_client.end() ? "global" : it->second;
        counts[client].first += static_cast<std::size_t>(correct[i]);
        counts[client].second += 1;
    }
    double macro = 0.0;
    double min_acc = 1.0;
    double max_acc = 0.0;
    for (const auto& [client, pair] : counts) {
        const double acc =
            pair.second == 0 ? 0.0
                             : static_cast<double>(pair.first) / static_cast<double>(pair.second);
        outcome.report.per_client_acc[client] = acc;
        macro += acc;
        min_acc = std::min(min_acc, acc);
        max_acc = std::max(max_acc, acc);
    }
    const double k = static_cast<double>(counts.size());
    outcome.report.macro_acc = counts.empty() ? 0.0 : macro / k;
    outcome.report.spread = counts.empty() ? 0.0 : max_acc - min_acc;
    double var = 0.0;
    for (const auto& [client, acc] : outcome.report.per_client_acc) {
        var += (acc - outcome.report.macro_acc) * (acc - outcome.report.macro_acc);
    }
    outcome.report.std_dev = counts.empty() ? 0.0 : std::sqrt(var / k);

    for (const std::size_t kk : {std::size_t{1}, std::size_t{5}, std::size_t{10}}) {
        std::size_t recall_hits = 0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& ranked = outcome.traces[i].retrieved.ranked;
            const std::size_t depth = std::min(kk, ranked.size());
            bool hit = false;
            for (std::size_t r = 0; r < depth && !hit; ++r) {
                hit = gold_sets[i].count(ranked[r].first) > 0;
            }
            recall_hits += hit ? 1 : 0;
        }
        outcome.report.recall_at[kk] =
            items.empty() ? 0.0
                          : static_cast<double>(recall_hits) / static_cast<double>(items.size());
    }
    return outcome;
}

ConvergenceSeries convergence_probe(const std::vector<GlobalSnapshot>& snapshots,
                                    const std::vector<std::string>& probe_queries,
                                    const ToolRegistry& registry, Gateway& gateway,
                                    RoutingMode mode) {
    if (snapshots.size() < 2) throw DomainError("convergence_probe needs at least two snapshots");

    // chosen tool + chosen candidate's retrieval cosine, per snapshot.
    struct ProbeState {
        std::string tool;
        double score = 0.0;
    };
    std::vector<std::vector<ProbeState>> states(snapshots.size());
    for (std::size_t s = 0; s < snapshots.size(); ++s) {
        states[s].resize(probe_queries.size());
        const std::int64_t n = static_cast<std::int64_t>(probe_queries.size());
#pragma omp parallel for schedule(static)
        for (std::int64_t q = 0; q < n; ++q) {
            const RoutingTrace trace = route_query(probe_queries[static_cast<std::size_t>(q)],
                                                   view(snapshots[s]), registry, gateway, mode);
            ProbeState state;
            state.tool = trace.tool_used;
            const int rank = trace.retrieved.rank_of(trace.rerank_choice);
            state.score = rank > 0 ? trace.retrieved.ranked[static_cast<std::size_t>(rank - 1)].second
                                   : 0.0;
            states[s][static_cast<std::size_t>(q)] = state;
        }
    }

    ConvergenceSeries series;
    for (std::size_t s = 1; s < snapshots.size(); ++s) {
        ConvergencePoint point;
        point.round = static_cast<std::uint64_t>(s + 1);
        double flips = 0.0;
        double score_delta = 0.0;
        for (std::size_t q = 0; q < probe_queries.size(); ++q) {
            if (states[s][q].tool != states[s - 1][q].tool) flips += 1.0;
            score_delta += std::fabs(states[s][q].score - states[s - 1][q].score);
        }
        const double nq = static_cast<double>(probe_queries.size());
        point.delta_tool = nq > 0 ? flips / nq : 0.0;
        point.delta_score = nq > 0 ? score_delta / nq : 0.0;
        series.per_round.push_back(point);
    }
    for (std::size_t i = 0; i + 1 < series.per_round.size(); ++i) {
        const auto& a = series.per_round[i];
        const auto& b = series.per_round[i + 1];
        if (a.delta_tool < kDeltaToolThreshold && a.delta_score < kDeltaScoreThreshold &&
            b.delta_tool < kDeltaToolThreshold && b.delta_score < kDeltaScoreThreshold) {
            series.converged_at = a.round;
            break;
        }
    }
    return series;
}

namespace {

void finalize_stage(StageStats& stage, std::size_t success_correct, std::size_t failure_correct) {
    stage.acc_given_success =
        stage.success == 0 ? 0.0
                           : static_cast<double>(success_correct) /
                                 static_cast<double>(stage.success);
    stage.acc_given_failure =
        stage.failure == 0 ? 0.0
                           : static_cast<double>(failure_correct) /
                                 static_cast<double>(stage.failure);
}

}  // namespace

ErrorBreakdown error_breakdown(const std::vector<RoutingTrace>& traces,
                               const std::map<std::string, GoldLabel>& gold,
                               const std::map<std::string, std::vector<RoutingTrace>>&
                                   paraphrase_traces) {
    ErrorBreakdown breakdown;
    std::size_t retrieval_sc = 0, retrieval_fc = 0;
    std::size_t rerank_sc = 0, rerank_fc = 0;
    std::size_t plan_sc = 0, plan_fc = 0;
    std::size_t stab_sc = 0, stab_fc = 0;

    for (const auto& trace : traces) {
        auto it = gold.find(trace.query);
        if (it == gold.end()) continue;
        const GoldLabel& label = it->second;
        const bool correct = trace.correct.value_or(false);

        const bool retrieved = trace.retrieved.contains(label.gold_uid);
        if (retrieved) {
            ++breakdown.retrieval.success;
            retrieval_sc += correct;
        } else {
            ++breakdown.retrieval.failure;
            retrieval_fc += correct;
        }
        const bool rerank_match = trace.rerank_choice == label.gold_uid;
        if (rerank_match) {
            ++breakdown.rerank.success;
            rerank_sc += correct;
        } else {
            ++breakdown.rerank.failure;
            rerank_fc += correct;
        }
        const bool plan_match = trace.tool_used == label.gold_tool;
        if (plan_match) {
            ++breakdown.plan.success;
            plan_sc += correct;
        } else {
            ++breakdown.plan.failure;
            plan_fc += correct;
        }
        auto pt = paraphrase_traces.find(trace.query);
        if (pt != paraphrase_traces.end() && !pt->second.empty()) {
            bool stable = true;
            for (const auto& other : pt->second) {
                stable = stable && other.tool_used == trace.tool_used;
            }
            if (stable) {
                ++breakdown.stability.success;
                stab_sc += correct;
            } else {
                ++breakdown.stability.failure;
                stab_fc += correct;
            }
        }
    }
    finalize_stage(breakdown.retrieval, retrieval_sc, retrieval_fc);
    finalize_stage(breakdown.rerank, rerank_sc, rerank_fc);
    finalize_stage(breakdown.plan, plan_sc, plan_fc);
    finalize_stage(breakdown.stability, stab_sc, stab_fc);
    return breakdown;
}

std::vector<RobustnessPoint> robustness_sweep(const RobustnessInputs& inputs,
                                              const std::vector<double>& fractions,
                                              const ToolRegistry& registry, Gateway& gateway) {
    std::vector<RobustnessPoint> curve(fractions.size());
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double fraction = fractions[i];
        if (fraction < 0.0 || fraction > 1.0) {
            throw DomainError("adversarial fraction must lie in [0,1]");
        }
        FederationConfig config = inputs.config;
        config.adversarial_fraction = fraction;
        const RunOutputs outputs =
            run_topology(config, inputs.train_items, inputs.partition, registry, gateway);
        if (outputs.snapshots.empty()) throw DomainError("robustness sweep needs rounds >= 1");
        const EvalOutcome outcome =
            evaluate(outputs.snapshots.back(), registry, gateway, inputs.test_items,
                     eval_mode_for(config.topology), inputs.test_assignment);
        RobustnessPoint point;
        point.fraction = fraction;
        point.accuracy = outcome.report.global_acc;
        point.recall_at_5 = outcome.report.recall_at.count(5) ? outcome.report.recall_at.at(5)
                                                              : 0.0;
        curve[i] = point;
    }
    return curve;
}

std::vector<PrivacyCell> privacy_sweep(const GlobalSnapshot& snapshot,
                                       const std::vector<PrivacyProbe>& probes,
                                       const PrivacyPolicy& base_policy,
                                       const std::vector<double>& eps_grid,
                                       const std::vector<double>& lambda_grid,
                                       const std::vector<std::size_t>& ks) {
    if (eps_grid.empty() || lambda_grid.empty()) throw DomainError("empty sweep grid");

    // Pre-policy gold uids; apply_policy preserves them.
    std::vector<std::string> gold_uids(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const UsageScenario* found = nullptr;
        for (const auto& s : snapshot.compendium.scenarios) {
            if (s.scenario_name == probes[p].gold_scenario_name) {
                found = &s;
                break;
            }
        }
        if (!found) throw DomainError("probe names unknown scenario " + probes[p].gold_scenario_name);
        gold_uids[p] = found->uid;
    }

    std::vector<EmbeddingVector> base_embeddings(snapshot.compendium.scenarios.size());
    for (std::size_t i = 0; i < base_embeddings.size(); ++i) {
        const auto& s = snapshot.compendium.scenarios[i];
        base_embeddings[i] = embed(s.scenario_name + " " + s.context, snapshot.index.dimension);
    }

    std::vector<PrivacyCell> cells(eps_grid.size() * lambda_grid.size());
    const std::int64_t total = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < total; ++c) {
        const std::size_t ei = static_cast<std::size_t>(c) / lambda_grid.size();
        const std::size_t li = static_cast<std::size_t>(c) % lambda_grid.size();
        PrivacyPolicy policy = base_policy;
        policy.enabled = true;
        policy.epsilon = eps_grid[ei];
        policy.lambda_mask = lambda_grid[li];

        const Compendium transformed = apply_policy(snapshot.compendium, policy);
        const EmbeddingIndex index = build_index(transformed, snapshot.index.dimension);

        PrivacyCell cell;
        cell.epsilon = policy.epsilon;
        cell.lambda = policy.lambda_mask;

        double distortion = 0.0;
        for (std::size_t i = 0; i < transformed.scenarios.size(); ++i) {
            const auto& s = transformed.scenarios[i];
            distortion += l2_distance(
                base_embeddings[i], embed(s.scenario_name + " " + s.context, index.dimension));
        }
        cell.mean_distortion = transformed.scenarios.empty()
                                   ? 0.0
                                   : distortion / static_cast<double>(transformed.scenarios.size());

        std::vector<std::pair<RetrievalResult, std::string>> traces;
        traces.reserve(probes.size());
        const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
        for (std::size_t p = 0; p < probes.size(); ++p) {
            traces.emplace_back(retrieve(index, probes[p].query, max_k), gold_uids[p]);
        }
        for (const std::size_t k : ks) cell.recall_at[k] = recall_at_k(traces, k);
        cells[static_cast<std::size_t>(c)] = cell;
    }
    return cells;
}

std::vector<ScalabilityPoint> scalability_sweep(const GlobalSnapshot& snapshot,
                                                const std::vector<PrivacyProbe>& probes,
                                                const std::vector<double>& fractions,
                                                std::size_t dim) {
    std::vector<ScalabilityPoint> points;
    for (const double fraction : fractions) {
        if (fraction <= 0.0 || fraction > 1.0) {
            throw DomainError("scalability fractions must lie in (0,1]");
        }
        Compendium subset = snapshot.compendium;
        const auto keep = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(subset.scenarios.size())));
        subset.scenarios.resize(std::min(keep, subset.scenarios.size()));
        const EmbeddingIndex index = build_index(subset, dim);

        ScalabilityPoint point;
        point.scenario_count = subset.scenarios.size();
        point.snapshot_bytes = serialize_compendium(subset).size();
        if (!subset.scenarios.empty()) {
            std::vector<std::pair<RetrievalResult, std::string>> traces;
            for (const auto& probe : probes) {
                std::string gold = "-";
                for (const auto& s : subset.scenarios) {
                    if (s.scenario_name == probe.gold_scenario_name) {
                        gold = s.uid;
                        break;
                    }
                }
                traces.emplace_back(retrieve(index, probe.query, 5), gold);
            }
            point.recall_at_5 = recall_at_k(traces, 5);
        }
        points.push_back(point);
    }
    return points;
}

// ---------------------------------------------------------------------------
// Prompt extraction attack
// ---------------------------------------------------------------------------

std::string private_prompt_for(const UsageScenario& scenario) {
    // Fig-8-style layout: one field per line, spaces after colons.
    std::string out;
    out += "{\"role\": \"structured system prompt for " + scenario.tool_id + " QA scenarios\",\n";
    out += " \"tool\": \"" + scenario.tool_id + "\",\n";
    const std::string domain =
        scenario.tags.domain ? *scenario.tags.domain : scenario.scenario_name;
    out += " \"domain\": \"" + domain + "\",\n";
    out += " \"scenario\": \"" + scenario.scenario_name + "\",\n";
    out += " \"type\": \"usage_scenario\",\n";
    out += " \"difficulty\": \"" + to_string(scenario.difficulty) + "\"}";
    return out;
}

double attack_token_overlap(const std::string& ground_truth, const std::string& reconstruction) {
    return token_jaccard(ground_truth, reconstruction);
}

double attack_cosine(const std::string& ground_truth, const std::string& reconstruction) {
    return cosine(embed(ground_truth), embed(reconstruction));
}

std::vector<AttackResult> attack_eval(const std::vector<AttackClient>& clients,
                                      Gateway& attacker_gateway, const PrivacyPolicy& policy) {
    std::vector<AttackResult> results(clients.size());
    const std::int64_t n = static_cast<std::int64_t>(clients.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const AttackClient& client = clients[static_cast<std::size_t>(i)];
        AttackResult result;
        result.client_id = client.client_id;
        result.signature = Signature{client.scenario.tool_id, client.scenario.scenario_name};
        result.ground_truth_prompt = private_prompt_for(client.scenario);
        result.observed_output =
            policy.enabled
                ? mask_text(result.ground_truth_prompt, policy, result.signature.key())
                : result.ground_truth_prompt;
        try {
            ChatRequest request;
            request.messages.push_back({Role::system, attacker_system_template()});
            std::string user = attacker_user_template();
            user = replace_all(std::move(user), "{question}", client.server_query);
            user = replace_all(std::move(user), "{answer}", result.observed_output);
            request.messages.push_back({Role::user, user});
            result.reconstruction = attacker_gateway.complete(request).content;
        } catch (const SynapseError&) {
            result.reconstruction.clear();  // isolated per-client failure
        }
        if (result.reconstruction.empty()) {
            result.token_overlap = 0.0;
            result.cosine_sim = 0.0;
        } else {
            result.token_overlap =
                attack_token_overlap(result.ground_truth_prompt, result.reconstruction);
            result.cosine_sim = attack_cosine(result.ground_truth_prompt, result.reconstruction);
        }
        results[static_cast<std::size_t>(i)] = result;
    }
    return results;
}

}  // namespace synapse
