#include "synapse/federation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "synapse/errors.hpp"
#include "synapse/util.hpp"

namespace synapse {

std::string to_string(AdversarialMode m) {
    switch (m) {
        case AdversarialMode::honest: return "honest";
        case AdversarialMode::cross_source: return "cross_source";
        case AdversarialMode::random: return "random";
        case AdversarialMode::tool_confusion: return "tool_confusion";
    }
    return "honest";
}

AdversarialMode adversarial_mode_from_string(const std::string& s) {
    if (s == "honest") return AdversarialMode::honest;
    if (s == "cross_source") return AdversarialMode::cross_source;
    if (s == "random") return AdversarialMode::random;
    if (s == "tool_confusion") return AdversarialMode::tool_confusion;
    throw DomainError("unknown adversarial mode: " + s);
}

std::string to_string(Topology t) {
    switch (t) {
        case Topology::synapse_tiered: return "synapse_tiered";
        case Topology::centralized: return "centralized";
        case Topology::centralized_retrieval_only: return "centralized_retrieval_only";
        case Topology::static_global: return "static_global";
        case Topology::local_only: return "local_only";
        case Topology::no_routing: return "no_routing";
        case Topology::flat_server: return "flat_server";
    }
    return "synapse_tiered";
}

Topology topology_from_string(const std::string& s) {
    if (s == "synapse_tiered") return Topology::synapse_tiered;
    if (s == "centralized") return Topology::centralized;
    if (s == "centralized_retrieval_only") return Topology::centralized_retrieval_only;
    if (s == "static_global") return Topology::static_global;
    if (s == "local_only") return Topology::local_only;
    if (s == "no_routing") return Topology::no_routing;
    if (s == "flat_server") return Topology::flat_server;
    throw UnknownTopology("unknown topology: " + s);
}

RoutingMode eval_mode_for(Topology t) {
    switch (t) {
        case Topology::centralized_retrieval_only: return RoutingMode::retrieval_only;
        case Topology::no_routing: return RoutingMode::heuristic;
        default: return RoutingMode::full;
    }
}

GlobalSnapshot make_snapshot(Compendium compendium, std::int64_t version, std::size_t dim) {
    GlobalSnapshot snapshot;
    snapshot.version = version;
    snapshot.compendium = std::move(compendium);
    snapshot.compendium.version = version;
    snapshot.index = build_index(snapshot.compendium, dim);
    return snapshot;
}

std::uint64_t CommLedger::total_up() const {
    std::uint64_t total = 0;
    for (const auto& e : entries) total += e.bytes_up;
    return total;
}

std::uint64_t CommLedger::total_down() const {
    std::uint64_t total = 0;
    for (const auto& e : entries) total += e.bytes_down;
    return total;
}

std::uint64_t CommLedger::client_total_up() const {
    std::uint64_t total = 0;
    for (const auto& e : entries) {
        if (e.sender.rfind("client-", 0) == 0) total += e.bytes_up;
    }
    return total;
}

double CommLedger::mean_client_bytes_up(std::uint64_t rounds) const {
    std::set<std::string> clients;
    for (const auto& e : entries) {
        if (e.sender.rfind("client-", 0) == 0) clients.insert(e.sender);
    }
    if (clients.empty() || rounds == 0) return 0.0;
    return static_cast<double>(client_total_up()) /
           (static_cast<double>(clients.size()) * static_cast<double>(rounds));
}

// ---------------------------------------------------------------------------
// Artifact generation
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string>& confusion_vocab(const std::string& tool_id) {
    static const std::vector<std::string> math = {
        "Financial and Banking Calculator", "Algebraic Word Problem Solver",
        "Percentage and Proportion Solver"};
    static const std::vector<std::string> science = {
        "Chemical Reaction Balancer", "Physics Motion Analyzer", "Biology Taxonomy Guide"};
    static const std::vector<std::string> logic = {
        "Deductive Syllogism Checker", "Truth Table Evaluator", "Constraint Puzzle Solver"};
    static const std::vector<std::string> spatial = {
        "Polygon Geometry Visualizer", "Grid Navigation Planner", "Solid Rotation Analyzer"};
    if (tool_id == "mathqa") return science;  // confuse toward the next domain over
    if (tool_id == "scienceqa") return logic;
    if (tool_id == "logicqa") return spatial;
    return math;
}

std::string garbage_context(std::uint64_t seed, const std::string& key, std::size_t tokens) {
    static constexpr char alphabet[] = "bcdfghjklmnpqrstvwxz";
    DeterministicStream stream(stream_seed(seed, key));
    std::string out;
    for (std::size_t t = 0; t < tokens; ++t) {
        if (t > 0) out += ' ';
        const std::size_t len = 4 + static_cast<std::size_t>(stream.below(5));
        for (std::size_t i = 0; i < len; ++i) {
            out += alphabet[stream.below(sizeof(alphabet) - 1)];
        }
    }
    out += '.';
    return out;
}

Difficulty difficulty_for(const std::string& question) {
    if (question.size() <= 80) return Difficulty::easy;
    if (question.size() <= 160) return Difficulty::medium;
    return Difficulty::hard;
}

}  // namespace

std::vector<UsageScenario> generate_artifacts(const ClientState& client,
                                              std::size_t per_client_cap, std::uint64_t seed) {
    if (client.local_data.empty()) return {};

    // Cluster by (tool, domain skill tag), first appearance order.
    std::vector<std::pair<std::string, std::string>> cluster_keys;
    std::map<std::pair<std::string, std::string>, std::vector<const DataItem*>> clusters;
    for (const auto& item : client.local_data) {
        const std::string domain =
            !item.tags.domain.empty()
                ? item.tags.domain
                : (!item.tags.task_type.empty() ? item.tags.task_type : item.gold_tool);
        const auto key = std::make_pair(item.gold_tool, domain);
        if (!clusters.count(key)) cluster_keys.push_back(key);
        clusters[key].push_back(&item);
    }

    std::vector<UsageScenario> scenarios;
    for (const auto& key : cluster_keys) {
        if (scenarios.size() >= per_client_cap) break;
        const auto& members = clusters[key];
        const DataItem& exemplar = *members.front();

        UsageScenario s;
        s.tool_id = key.first;
        s.scenario_name = key.second;
        std::string skills = exemplar.tags.task_type;
        const std::string suffix = skills.empty() ? std::string{} : " Skills: " + skills + ".";
        const std::size_t budget = 280 > suffix.size() ? 280 - suffix.size() : 1;
        s.context = truncate_text(exemplar.question, budget, 2) + suffix;
        s.tags.domain = key.second;
        if (!skills.empty()) s.tags.task_type = skills;
        s.difficulty = difficulty_for(exemplar.question);

        switch (client.adversarial_mode) {
            case AdversarialMode::honest:
                break;
            case AdversarialMode::cross_source: {
                // Swap the owning tool across domains.
                static const std::vector<std::string> wheel = {"mathqa", "scienceqa", "logicqa",
                                                               "spatialqa"};
                const auto it = std::find(wheel.begin(), wheel.end(), s.tool_id);
                const std::size_t at = it == wheel.end() ? 0 : static_cast<std::size_t>(it - wheel.begin());
                s.tool_id = wheel[(at + 1) % wheel.size()];
                break;
            }
            case AdversarialMode::random:
                s.context = garbage_context(seed, client.client_id + "/garbage/" + s.scenario_name,
                                            12);
                break;
            case AdversarialMode::tool_confusion: {
                const auto& vocab = confusion_vocab(s.tool_id);
                s.scenario_name = vocab[scenarios.size() % vocab.size()];
                s.tags.domain = s.scenario_name;
                break;
            }
        }
        s.uid = scenario_uid(s);
        scenarios.push_back(std::move(s));
    }
    return scenarios;
}

// ---------------------------------------------------------------------------
// TextGrad refinement
// ---------------------------------------------------------------------------

namespace {

double score_template(const std::string& tool_id, const std::string& template_text,
                      const std::vector<DataItem>& batch, const ToolRegistry& registry,
                      Gateway& gateway, const std::vector<UsageScenario>& context,
                      std::vector<const DataItem*>* failures) {
    ToolRegistry patched = registry;
    auto it = patched.tools.find(tool_id);
    if (it == patched.tools.end()) throw UnknownTool("no such tool: " + tool_id);
    it->second.prompt.text = template_text;

    std::size_t correct = 0;
    for (const auto& item : batch) {
        bool ok = false;
        try {
            const ExecutionResult result =
                execute_tool(tool_id, item.question, context, patched, gateway);
            ok = answers_match(result.extracted, item.gold_answer);
        } catch (const SynapseError&) {
            ok = false;
        }
        if (ok) {
            ++correct;
        } else if (failures) {
            failures->push_back(&item);
        }
    }
    return batch.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(batch.size());
}

std::string replace_all(std::string text, const std::string& slot, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(slot, pos)) != std::string::npos) {
        text.replace(pos, slot.size(), value);
        pos += value.size();
    }
    return text;
}

}  // namespace

PromptVariant textgrad_refine(const PromptVariant& variant, const std::vector<DataItem>& batch,
                              Gateway& gateway, std::size_t steps, std::size_t batch_size,
                              const ToolRegistry& registry,
                              const std::vector<UsageScenario>& context) {
    if (steps < 1) throw DomainError("textgrad_refine needs steps >= 1");
    std::vector<DataItem> local_batch(batch.begin(),
                                      batch.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                          batch.size(), batch_size)));

    PromptVariant best = variant;
    best.accepted = false;
    std::vector<const DataItem*> failures;
    best.local_score = score_template(variant.tool_id, variant.text, local_batch, registry,
                                      gateway, context, &failures);

    for (std::size_t step = 0; step < steps; ++step) {
        std::string failure_text;
        for (const auto* item : failures) {
            failure_text += "Q: " + item->question + "\nExpected: " + item->gold_answer + "\n";
        }
        if (failure_text.empty()) failure_text = "(none)";

        std::string prompt = refiner_template();
        prompt = replace_all(std::move(prompt), "{prompt}", best.text);
        prompt = replace_all(std::move(prompt), "{failures}", failure_text);

        ChatRequest request;
        request.messages.push_back({Role::user, prompt});
        std::string candidate;
        try {
            candidate = gateway.complete(request).content;
        } catch (const SynapseError&) {
            continue;  // gateway failure skips the step
        }
        if (candidate.empty() || candidate == best.text) continue;

        std::vector<const DataItem*> candidate_failures;
        const double score = score_template(variant.tool_id, candidate, local_batch, registry,
                                            gateway, context, &candidate_failures);
        if (score > best.local_score) {  // kept only if performance improves
            best.text = candidate;
            best.local_score = score;
            best.accepted = true;
            failures = std::move(candidate_failures);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Client preparation
// ---------------------------------------------------------------------------

namespace {

const std::map<std::string, std::string>& tool_descriptions() {
    static const std::map<std::string, std::string> descriptions = {
        {"mathqa", "Solves quantitative word problems."},
        {"scienceqa", "Answers science questions."},
        {"logicqa", "Solves logical deduction problems."},
        {"spatialqa", "Answers spatial reasoning questions."},
    };
    return descriptions;
}

std::string entity_name(const std::string& scenario_name) {
    std::string out;
    for (const char c : scenario_name) {
        out += (c == ' ' ? '_' : c);
    }
    return out;
}

Compendium assemble_compendium(const ClientState& client,
                               const std::vector<UsageScenario>& scenarios,
                               const FederationConfig& config, const ToolRegistry& registry,
                               const std::vector<PromptVariant>& variants) {
    Compendium c;
    c.owner = client.client_id;
    c.version = 0;

    std::vector<std::string> tool_order;
    std::set<std::string> seen;
    for (const auto& s : scenarios) {
        if (seen.insert(s.tool_id).second) tool_order.push_back(s.tool_id);
    }
    for (const auto& tool : tool_order) {
        ToolMetadata meta;
        meta.tool_id = tool;
        auto it = tool_descriptions().find(tool);
        meta.description = it != tool_descriptions().end()
                               ? it->second
                               : ("Executes " + tool + " queries.");
        c.tools.push_back(std::move(meta));
    }
    c.scenarios = scenarios;

    if (config.scope == ArtifactScope::full) {
        for (const auto& tool : tool_order) {
            c.precautions.push_back(
                {"Ambiguous Input",
                 "Unclear or underspecified problems may cause " + tool +
                     " to produce incorrect results. Restate the question with explicit "
                     "quantities, units and the asked-for value before routing; reject "
                     "inputs whose entities cannot be grounded in the scenario text."});
            c.precautions.push_back(
                {"Scope Complexity",
                 "Not intended for tasks outside the " + tool +
                     " capability envelope. Escalate multi-domain or multi-hop questions to "
                     "the planner instead of forcing a single tool, and surface partial "
                     "answers rather than guessing beyond the covered scenarios."});
        }
        c.coordination.description =
            "Coordinates specialist tools when a query spans several reasoning skills; each "
            "hand-off carries the intermediate value and its unit forward.";
        c.coordination.examples = {
            "Extract formula -> calculate -> verify answer.",
            "Classify the question -> route to the owning tool -> check units.",
            "Decompose multi-part asks -> solve parts in dependency order -> combine totals."};

        for (const auto& tool : tool_order) {
            auto it = registry.tools.find(tool);
            if (it == registry.tools.end()) continue;
            PromptTemplate base = it->second.prompt;
            base.template_id = tool;
            for (const auto& v : variants) {
                if (v.tool_id == tool) base.text = v.text;
            }
            base.variables = template_variables_of(base.text);
            c.templates.push_back(base);
        }
        for (const auto& s : scenarios) {
            PromptTemplate t;
            t.template_id = Signature{s.tool_id, s.scenario_name}.key();
            t.text = "Apply the " + s.scenario_name +
                     " playbook. Restate the quantities in the question, pick the governing "
                     "relation from the examples below, substitute the given values, and "
                     "carry units through every step.\n\nWorked examples:\n{context}\n\n"
                     "Question: {query}\n\nShow the substitution explicitly before the "
                     "final line so the verifier can replay the arithmetic.";
            t.variables = {"context", "query"};
            c.templates.push_back(std::move(t));
        }

        for (const auto& tool : tool_order) c.annex.entities.push_back(entity_name(tool));
        for (const auto& s : scenarios) {
            const std::string entity = entity_name(s.scenario_name);
            if (std::find(c.annex.entities.begin(), c.annex.entities.end(), entity) ==
                c.annex.entities.end()) {
                c.annex.entities.push_back(entity);
            }
            c.annex.relations.push_back({entity, "routes_to", s.tool_id});
        }

        double context_chars = 0.0;
        for (const auto& s : scenarios) context_chars += static_cast<double>(s.context.size());
        c.metadata["scenario_count"] = static_cast<double>(scenarios.size());
        c.metadata["example_count"] = static_cast<double>(client.local_data.size());
        c.metadata["mean_context_chars"] =
            scenarios.empty()
                ? 0.0
                : std::round(context_chars / static_cast<double>(scenarios.size()));
    }
    return c;
}

}  // namespace

ClientUpload client_prepare(const ClientState& client, const FederationConfig& config,
                            std::uint64_t round, const ToolRegistry& registry, Gateway* gateway) {
    ClientUpload upload;
    upload.client_id = client.client_id;

    const auto scenarios = generate_artifacts(client, config.per_client_cap, config.seed);

    std::vector<PromptVariant> variants;
    if (config.textgrad && gateway != nullptr && !scenarios.empty()) {
        std::vector<std::string> tool_order;
        std::set<std::string> seen;
        for (const auto& s : scenarios) {
            if (seen.insert(s.tool_id).second) tool_order.push_back(s.tool_id);
        }
        for (const auto& tool : tool_order) {
            auto it = registry.tools.find(tool);
            if (it == registry.tools.end()) continue;
            const UsageScenario* first = nullptr;
            std::vector<UsageScenario> context;
            for (const auto& s : scenarios) {
                if (s.tool_id != tool) continue;
                if (!first) first = &s;
                if (context.size() < 3) context.push_back(s);
            }
            PromptVariant incumbent;
            incumbent.signature = Signature{tool, first->scenario_name};
            incumbent.tool_id = tool;
            incumbent.text = it->second.prompt.text;
            std::vector<DataItem> batch;
            for (const auto& item : client.local_data) {
                if (item.gold_tool == tool) batch.push_back(item);
            }
            if (batch.empty()) continue;
            variants.push_back(textgrad_refine(incumbent, batch, *gateway, config.textgrad_steps,
                                               config.textgrad_batch, registry, context));
        }
    }

    Compendium c = assemble_compendium(client, scenarios, config, registry, variants);
    c = curate(c, config.curation);
    c.version = 0;

    PrivacyPolicy policy = client.policy;
    policy.round = round;
    if (policy.enabled) c = apply_policy(c, policy);

    upload.compendium = std::move(c);
    upload.variants = std::move(variants);
    return upload;
}

// ---------------------------------------------------------------------------
// Aggregation tiers
// ---------------------------------------------------------------------------

EdgeResult edge_aggregate(const std::vector<ClientUpload>& uploads, double dedup_threshold,
                          Gateway* gateway, const std::string& edge_id) {
    if (uploads.empty()) throw DomainError("edge_aggregate on empty upload set");

    EdgeResult result;
    std::vector<Compendium> valid;
    std::vector<const ClientUpload*> contributors;
    for (const auto& upload : uploads) {
        if (upload.failed) {
            result.rejected[upload.client_id] += 1;
            continue;
        }
        try {
            validate_compendium(upload.compendium);
            valid.push_back(upload.compendium);
            contributors.push_back(&upload);
        } catch (const SchemaError&) {
            result.rejected[upload.client_id] += 1;
        }
    }
    if (valid.empty()) throw DomainError("edge " + edge_id + " received no valid artifacts");

    // Group prompt variants by signature across clients.
    std::map<std::string, std::vector<const PromptVariant*>> groups;
    for (const auto* upload : contributors) {
        for (const auto& v : upload->variants) {
            groups[v.signature.key()].push_back(&v);
        }
    }

    Compendium merged = merge_compendiums(valid, dedup_threshold);
    merged.owner = edge_id;

    for (const auto& [key, variants] : groups) {
        std::string text;
        if (gateway != nullptr && variants.size() > 1) {
            std::string listing;
            for (const auto* v : variants) listing += "---\n" + v->text + "\n";
            std::string prompt = summarizer_template();
            prompt = replace_all(std::move(prompt), "{variants}", listing);
            ChatRequest request;
            request.messages.push_back({Role::user, prompt});
            try {
                text = gateway->complete(request).content;
            } catch (const SynapseError&) {
                text.clear();
            }
        }
        if (text.empty()) {
            const PromptVariant* best = variants.front();
            for (const auto* v : variants) {
                if (v->local_score > best->local_score) best = v;
            }
            text = best->text;
        }
        bool found = false;
        for (auto& t : merged.templates) {
            if (t.template_id == key) {
                t.text = text;
                t.variables = template_variables_of(text);
                found = true;
            }
        }
        if (!found) {
            PromptTemplate t;
            t.template_id = key;
            t.text = text;
            t.variables = template_variables_of(text);
            merged.templates.push_back(std::move(t));
        }
    }
    result.compendium = std::move(merged);
    return result;
}

GlobalSnapshot server_merge(const std::vector<Compendium>& edge_outputs,
                            const GlobalSnapshot& prev, double dedup_threshold, std::size_t dim) {
    std::vector<Compendium> parts = edge_outputs;  // fresh artifacts take precedence
    parts.push_back(prev.compendium);
    Compendium merged = merge_compendiums(parts, dedup_threshold);
    merged.owner = "server";
    return make_snapshot(std::move(merged), prev.version + 1, dim);
}

// ---------------------------------------------------------------------------
// Rounds and topologies
// ---------------------------------------------------------------------------

FederationState make_federation(const FederationConfig& config,
                                const std::vector<DataItem>& train_items,
                                const Partition& partition, const ToolRegistry& registry,
                                Gateway& gateway) {
    if (config.clients < 1) throw DomainError("federation needs at least one client");
    FederationState fed;
    fed.config = config;
    fed.registry = registry;
    fed.gateway = &gateway;

    std::vector<std::string> client_ids;
    for (const auto& [client_id, ids] : partition.assignment) client_ids.push_back(client_id);
    std::sort(client_ids.begin(), client_ids.end());
    if (client_ids.size() != config.clients) {
        throw ConfigError("partition has " + std::to_string(client_ids.size()) +
                          " clients, config expects " + std::to_string(config.clients));
    }

    const std::size_t adversarial =
        static_cast<std::size_t>(std::ceil(config.adversarial_fraction *
                                           static_cast<double>(client_ids.size()) - 1e-9));
    for (std::size_t i = 0; i < client_ids.size(); ++i) {
        ClientState client;
        client.client_id = client_ids[i];
        client.local_data = items_for_client(partition, train_items, client_ids[i]);
        client.policy = config.policy;
        client.adversarial_mode =
            i < adversarial ? config.adversarial_mode : AdversarialMode::honest;
        fed.clients.push_back(std::move(client));
    }

    std::size_t edge_count = config.edges;
    if (edge_count == 0) edge_count = (config.clients + 2) / 3;
    const bool tiered = config.topology == Topology::synapse_tiered ||
                        config.topology == Topology::no_routing;
    if (!tiered) edge_count = 1;
    for (std::size_t e = 0; e < edge_count; ++e) {
        fed.edges.push_back({"edge-" + std::to_string(e + 1), {}});
    }
    for (std::size_t i = 0; i < fed.clients.size(); ++i) {
        fed.edges[i % edge_count].member_clients.push_back(fed.clients[i].client_id);
    }

    fed.snapshot = make_snapshot(Compendium{}, 0, config.embedding_dim);
    fed.snapshot.compendium.owner = "server";
    return fed;
}

RoundReport run_round(FederationState& fed, std::uint64_t round) {
    if (round < 1) throw DomainError("rounds are 1-based");
    if (fed.clients.empty()) throw DomainError("federation has no clients");

    RoundReport report;
    report.round = round;

    std::vector<ClientUpload> uploads(fed.clients.size());
    const std::int64_t n = static_cast<std::int64_t>(fed.clients.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& client = fed.clients[static_cast<std::size_t>(i)];
        auto& upload = uploads[static_cast<std::size_t>(i)];
        try {
            upload = client_prepare(client, fed.config, round, fed.registry, fed.gateway);
        } catch (const std::exception& e) {
            // A straggler or broken client never aborts the round.
            upload.client_id = client.client_id;
            upload.failed = true;
            upload.failure = e.what();
        }
    }

    std::map<std::string, CommEntry> client_rows;
    std::map<std::string, const ClientUpload*> by_client;
    for (std::size_t i = 0; i < uploads.size(); ++i) {
        const auto& upload = uploads[i];
        by_client[upload.client_id] = &upload;
        CommEntry entry;
        entry.round = round;
        entry.sender = upload.client_id;
        if (upload.failed) {
            report.failed_clients.push_back(upload.client_id);
        } else if (fed.config.topology != Topology::local_only) {
            entry.bytes_up = serialize_compendium(upload.compendium).size();
        }
        client_rows[upload.client_id] = entry;
    }

    const bool tiered = fed.config.topology == Topology::synapse_tiered ||
                        fed.config.topology == Topology::no_routing;

    std::vector<Compendium> server_inputs;
    std::vector<CommEntry> edge_rows;
    if (fed.config.topology == Topology::local_only) {
        // No transmission in any direction.
    } else if (tiered) {
        for (const auto& edge : fed.edges) {
            std::vector<ClientUpload> member_uploads;
            for (const auto& client_id : edge.member_clients) {
                auto it = by_client.find(client_id);
                if (it != by_client.end()) member_uploads.push_back(*it->second);
            }
            if (member_uploads.empty()) continue;
            bool all_failed = true;
            for (const auto& u : member_uploads) all_failed = all_failed && u.failed;
            if (all_failed) continue;
            EdgeResult edge_result =
                edge_aggregate(member_uploads, fed.config.curation.dedup_threshold,
                               fed.config.edge_summarize ? fed.gateway : nullptr, edge.edge_id);
            CommEntry entry;
            entry.round = round;
            entry.sender = edge.edge_id;
            entry.bytes_up = serialize_compendium(edge_result.compendium).size();
            edge_rows.push_back(entry);
            server_inputs.push_back(std::move(edge_result.compendium));
        }
    } else {
        for (const auto& upload : uploads) {
            if (!upload.failed) server_inputs.push_back(upload.compendium);
        }
    }

    if (fed.config.topology == Topology::local_only) {
        // Snapshot tracking is per-client; handled by run_topology.
    } else if (!server_inputs.empty()) {
        fed.snapshot = server_merge(server_inputs, fed.snapshot,
                                    fed.config.curation.dedup_threshold, fed.config.embedding_dim);
    } else {
        fed.snapshot = make_snapshot(fed.snapshot.compendium, fed.snapshot.version + 1,
                                     fed.config.embedding_dim);
    }

    if (fed.config.topology != Topology::local_only) {
        const std::uint64_t down = serialize_compendium(fed.snapshot.compendium).size();
        for (auto& [client_id, entry] : client_rows) entry.bytes_down = down;
    }

    for (const auto& [client_id, entry] : client_rows) fed.ledger.entries.push_back(entry);
    for (const auto& entry : edge_rows) fed.ledger.entries.push_back(entry);
    return report;
}

RunOutputs run_topology(const FederationConfig& config, const std::vector<DataItem>& train_items,
                        const Partition& partition, const ToolRegistry& registry,
                        Gateway& gateway) {
    FederationConfig effective = config;
    if (effective.topology == Topology::static_global) {
        effective.rounds = 1;  // one-shot merge
        effective.scope = ArtifactScope::minimal;
    }
    FederationState fed = make_federation(effective, train_items, partition, registry, gateway);

    RunOutputs outputs;
    outputs.eval_mode = eval_mode_for(effective.topology);

    if (effective.topology == Topology::local_only) {
        for (const auto& client : fed.clients) {
            ClientUpload upload =
                client_prepare(client, effective, 1, fed.registry, fed.gateway);
            outputs.local_snapshots.emplace(
                client.client_id,
                make_snapshot(std::move(upload.compendium), 1, effective.embedding_dim));
        }
        outputs.ledger = fed.ledger;
        return outputs;
    }

    for (std::uint64_t round = 1; round <= effective.rounds; ++round) {
        outputs.rounds.push_back(run_round(fed, round));
        outputs.snapshots.push_back(fed.snapshot);
    }
    outputs.ledger = fed.ledger;
    return outputs;
}

CommArithmetic comm_arithmetic(const std::vector<DataItem>& items, std::uint64_t seed) {
    CommArithmetic arithmetic;
    // Fed-ICL ships eight in-context exemplars per client.
    std::vector<DataItem> pool = items;
    deterministic_shuffle(pool, stream_seed(seed, "comm/fed_icl"));
    const std::size_t take = std::min<std::size_t>(8, pool.size());
    double bytes = 0.0;
    for (std::size_t i = 0; i < take; ++i) {
        bytes += static_cast<double>(pool[i].question.size() + pool[i].gold_answer.size() + 24);
    }
    arithmetic.fed_icl_bytes_per_client = bytes;
    // 8e9 parameters at fp32, counted up + down.
    arithmetic.weight_share_bytes_per_client = 8e9 * 4.0 * 2.0;
    return arithmetic;
}

}  // namespace synapse
