#include "synapse/routing.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "synapse/errors.hpp"
#include "synapse/util.hpp"

namespace synapse {

using nlohmann::json;

std::vector<std::string> ToolRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(tools.size());
    for (const auto& [id, spec] : tools) out.push_back(id);
    return out;
}

std::string ToolRegistry::smallest_id() const {
    if (tools.empty()) throw DomainError("empty tool registry");
    return tools.begin()->first;
}

namespace {

PromptTemplate make_tool_template(const std::string& tool_id, const std::string& role_line) {
    PromptTemplate t;
    t.template_id = tool_id;
    t.text = role_line +
             "\n\nRelevant usage scenarios:\n{context}\n\nQuestion: {query}\n\nReason step by "
             "step before giving the final answer.";
    t.variables = {"context", "query"};
    return t;
}

}  // namespace

ToolRegistry default_registry() {
    ToolRegistry registry;
    registry.tools["mathqa"] = ToolSpec{
        make_tool_template("mathqa", "You are a specialist quantitative reasoning tool. Solve "
                                     "the word problem exactly."),
        AnswerFormat::numeric, "Solves quantitative word problems."};
    registry.tools["scienceqa"] = ToolSpec{
        make_tool_template("scienceqa", "You are a specialist science question answering tool."),
        AnswerFormat::text, "Answers science questions."};
    registry.tools["logicqa"] = ToolSpec{
        make_tool_template("logicqa", "You are a specialist logical reasoning tool."),
        AnswerFormat::text, "Solves logical deduction problems."};
    registry.tools["spatialqa"] = ToolSpec{
        make_tool_template("spatialqa", "You are a specialist spatial reasoning tool."),
        AnswerFormat::text, "Answers spatial reasoning questions."};
    return registry;
}

std::string to_string(RoutingMode m) {
    switch (m) {
        case RoutingMode::full: return "full";
        case RoutingMode::retrieval_only: return "retrieval_only";
        case RoutingMode::heuristic: return "heuristic";
    }
    return "full";
}

RoutingMode routing_mode_from_string(const std::string& s) {
    if (s == "full") return RoutingMode::full;
    if (s == "retrieval_only") return RoutingMode::retrieval_only;
    if (s == "heuristic") return RoutingMode::heuristic;
    throw DomainError("unknown routing mode: " + s);
}

// ---------------------------------------------------------------------------
// Templates. These constants are the runtime source of truth; the files in
// prompts/ carry the same bytes and a test pins the two together.
// ---------------------------------------------------------------------------

namespace {

const std::string kRerankerTemplate =
    "You are an expert tool router. Your task is to select the single most appropriate tool "
    "scenario for the given user query from the provided list of options.\n"
    "\n"
    "User Query:\n"
    "\"{query}\"\n"
    "\n"
    "Candidate Tool Scenarios:\n"
    "{candidates}\n"
    "\n"
    "Analyze the query and the tool descriptions carefully. Respond with ONLY the number of the "
    "best tool option (e.g., \"1\", \"2\", \"3\").\n";

const std::string kPlannerTemplate =
    "You are an AI mission planner. Your job is to analyze a user query and a list of retrieved "
    "tool scenarios to create a final execution plan.\n"
    "\n"
    "User Query:\n"
    "\"{query}\"\n"
    "\n"
    "Candidate Tool Scenarios (retrieved from a vector search):\n"
    "{candidates}\n"
    "\n"
    "Your primary task is to determine which main tool, 'mathqa' or 'scienceqa' or 'mmluqa' or "
    "'truthfulqa', is the correct one to handle this query, based on which tool owns the most "
    "relevant scenario from the candidate list. Then, create a JSON object describing your "
    "plan.\n"
    "\n"
    "JSON Response Format:\n"
    "{\n"
    "  \"plan_rationale\": \"A brief explanation of why you chose the parent tool, referencing "
    "the most relevant candidate scenario.\",\n"
    "  \"primary_tool\": {\n"
    "    \"scenario_name\": \"The full name of the best matching tool scenario from the "
    "candidate list.\",\n"
    "    \"parent_tool_name\": \"The final parent tool name. This value MUST be similar to "
    "'mathqa' or 'scienceqa' or 'logicqa' or 'spatialqa'.\"\n"
    "  }\n"
    "}\n"
    "\n"
    "Respond with ONLY the valid JSON object.\n";

const std::string kRefinerTemplate =
    "You are a prompt engineer refining the prompt template of a specialist tool. The current "
    "template failed on the examples below. Rewrite the template so the tool answers them "
    "correctly while staying concise and general. Keep the {context} and {query} placeholders.\n"
    "\n"
    "Current template:\n"
    "{prompt}\n"
    "\n"
    "Failed examples:\n"
    "{failures}\n"
    "\n"
    "Respond with ONLY the improved template text.\n";

const std::string kSummarizerTemplate =
    "You are merging prompt variants produced by different clients for the same tool scenario. "
    "Combine them into a single template that preserves the shared structure and the strongest "
    "instructions. Keep the {context} and {query} placeholders.\n"
    "\n"
    "Variants:\n"
    "{variants}\n"
    "\n"
    "Respond with ONLY the merged template text.\n";

const std::string kAttackerSystemTemplate =
    "You are an adversarial analyst attempting to reconstruct the original prompt or in-context "
    "example that produced a public response.Given only the observed response, infer the most "
    "likely original prompt.Respond with your best guess as plain text without extra "
    "commentary.\n";

const std::string kAttackerUserTemplate =
    "The observed response may be masked, summarized, or partially redacted.Infer the likely "
    "tool, domain, scenario, and role implied by the text.Reconstruct the original "
    "prompt/in-context example in the most plausible structured form.Question: "
    "{question}Answer: {answer}\n";

std::string replace_slot(std::string text, const std::string& slot, const std::string& value) {
    const auto pos = text.find(slot);
    if (pos != std::string::npos) text.replace(pos, slot.size(), value);
    return text;
}

}  // namespace

const std::string& reranker_template() { return kRerankerTemplate; }
const std::string& planner_template() { return kPlannerTemplate; }
const std::string& refiner_template() { return kRefinerTemplate; }
const std::string& summarizer_template() { return kSummarizerTemplate; }
const std::string& attacker_system_template() { return kAttackerSystemTemplate; }
const std::string& attacker_user_template() { return kAttackerUserTemplate; }

std::string numeric_answer_instruction() {
    return "The last line of your response should be of the following format: 'Answer: $VALUE$' "
           "where VALUE is a numerical value.";
}

std::string text_answer_instruction() {
    return "The last line of your response should be of the following format: 'Answer: $VALUE$' "
           "where VALUE is the final answer.";
}

std::string render_rerank_prompt(const std::string& query,
                                 const std::vector<UsageScenario>& candidates) {
    if (candidates.empty()) throw DomainError("rerank needs at least one candidate");
    if (candidates.size() > 9) {
        throw TooManyCandidates("reranker accepts at most 9 candidates, got " +
                                std::to_string(candidates.size()));
    }
    std::string lines;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i > 0) lines += "\n";
        lines += "- Tool Option " + std::to_string(i + 1) + ": \"" +
                 candidates[i].scenario_name + ": " + candidates[i].context + "\"";
    }
    std::string prompt = replace_slot(kRerankerTemplate, "{query}", query);
    return replace_slot(std::move(prompt), "{candidates}", lines);
}

std::string render_planner_prompt(const std::string& query,
                                  const std::vector<UsageScenario>& candidates) {
    if (candidates.empty()) throw DomainError("planner needs at least one candidate");
    std::string lines;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i > 0) lines += "\n";
        lines += "- \"" + candidates[i].scenario_name + " (parent tool: " +
                 candidates[i].tool_id + "): " + candidates[i].context + "\"";
    }
    std::string prompt = replace_slot(kPlannerTemplate, "{query}", query);
    return replace_slot(std::move(prompt), "{candidates}", lines);
}

RerankOutcome rerank(const std::string& query, const std::vector<UsageScenario>& candidates,
                     const std::vector<double>& scores, Gateway& gateway) {
    if (candidates.empty()) throw DomainError("rerank needs at least one candidate");
    RerankOutcome outcome;
    outcome.scores = scores;

    ChatRequest request;
    request.messages.push_back({Role::user, render_rerank_prompt(query, candidates)});
    const ChatResponse response = gateway.complete(request);

    // First integer in 1..n wins; longer integers are skipped whole.
    std::optional<std::size_t> choice;
    const std::string& text = response.content;
    for (std::size_t i = 0; i < text.size() && !choice; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
        std::size_t j = i;
        std::uint64_t value = 0;
        bool oversized = false;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
            if (value > candidates.size()) {
                oversized = true;
            } else {
                value = value * 10 + static_cast<std::uint64_t>(text[j] - '0');
            }
            ++j;
        }
        if (!oversized && value >= 1 && value <= candidates.size()) {
            choice = static_cast<std::size_t>(value);
        }
        i = j - 1;
    }
    if (choice) {
        outcome.uid = candidates[*choice - 1].uid;
    } else {
        outcome.uid = candidates.front().uid;
        outcome.parse_failure = true;
    }
    return outcome;
}

namespace {

std::string normalize_tool_id(const std::string& raw) {
    std::string out;
    for (const char c : raw) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return out;
}

// Exact match, else nearest registry id within edit distance 2.
std::optional<std::string> resolve_tool_id(const std::string& raw, const ToolRegistry& registry,
                                           bool* normalized) {
    const std::string norm = normalize_tool_id(raw);
    if (norm.empty()) return std::nullopt;
    if (registry.has(norm)) {
        if (normalized) *normalized = norm != raw;
        return norm;
    }
    std::optional<std::string> best;
    std::size_t best_distance = 3;
    for (const auto& [id, spec] : registry.tools) {
        const std::size_t d = edit_distance(norm, id);
        if (d < best_distance || (best && d == best_distance && id < *best)) {
            best = id;
            best_distance = d;
        }
    }
    if (best && normalized) *normalized = true;
    return best;
}

std::optional<json> first_balanced_json(const std::string& text) {
    for (std::size_t start = 0; start < text.size(); ++start) {
        if (text[start] != '{') continue;
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') {
                    ++i;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                --depth;
                if (depth == 0) {
                    try {
                        return json::parse(text.substr(start, i - start + 1));
                    } catch (const json::parse_error&) {
                        break;  // try the next opening brace
                    }
                }
            }
        }
    }
    return std::nullopt;
}

bool is_math_symbol_token(const std::string& token) {
    if (contains_digit(token)) return true;
    static const std::set<std::string> operators = {"+", "-", "*", "/", "=",
                                                    "%", "×", "÷", "^"};
    return operators.count(token) > 0;
}

}  // namespace

std::string heuristic_route(const std::string& query,
                            const std::vector<UsageScenario>& candidates,
                            const ToolRegistry& registry) {
    const bool numeric_query = contains_digit(query);
    const std::string default_tool =
        numeric_query && registry.has("mathqa") ? "mathqa" : registry.smallest_id();
    if (candidates.empty()) return default_tool;

    const auto query_tokens = whitespace_tokens(to_lower(query));
    const std::set<std::string> query_set(query_tokens.begin(), query_tokens.end());
    double symbolic_bonus = 0.0;
    for (const auto& t : whitespace_tokens(query)) {
        if (is_math_symbol_token(t)) symbolic_bonus += 1.0;
    }

    double best_score = -1.0;
    std::vector<const UsageScenario*> best;
    for (const auto& candidate : candidates) {
        double score = 0.0;
        const auto tokens =
            whitespace_tokens(to_lower(candidate.scenario_name + " " + candidate.context));
        const std::set<std::string> candidate_set(tokens.begin(), tokens.end());
        for (const auto& t : candidate_set) score += query_set.count(t) ? 1.0 : 0.0;
        if (candidate.tool_id == "mathqa") score += symbolic_bonus;
        if (score > best_score) {
            best_score = score;
            best = {&candidate};
        } else if (score == best_score) {
            best.push_back(&candidate);
        }
    }
    if (best.size() == 1) return best.front()->tool_id;
    if (numeric_query && registry.has("mathqa")) return "mathqa";
    std::string smallest = best.front()->tool_id;
    for (const auto* c : best) smallest = std::min(smallest, c->tool_id);
    return smallest;
}

Plan plan(const std::string& query, const std::vector<UsageScenario>& candidates,
          Gateway& gateway, const ToolRegistry& registry) {
    if (candidates.empty()) throw DomainError("plan needs at least one candidate");

    auto heuristic_plan = [&]() {
        Plan p;
        p.fallback = true;
        p.parent_tool_name = heuristic_route(query, candidates, registry);
        p.scenario_name = candidates.front().scenario_name;
        p.plan_rationale = "heuristic fallback route";
        return p;
    };

    ChatRequest request;
    request.messages.push_back({Role::user, render_planner_prompt(query, candidates)});
    ChatResponse response;
    try {
        response = gateway.complete(request);
    } catch (const SynapseError&) {
        return heuristic_plan();
    }

    const auto doc = first_balanced_json(response.content);
    if (!doc) return heuristic_plan();
    Plan p;
    try {
        p.plan_rationale = doc->value("plan_rationale", std::string{});
        const json& primary = doc->at("primary_tool");
        p.scenario_name = primary.at("scenario_name").get<std::string>();
        const std::string raw_parent = primary.at("parent_tool_name").get<std::string>();
        const auto resolved = resolve_tool_id(raw_parent, registry, &p.normalized);
        if (!resolved) return heuristic_plan();
        p.parent_tool_name = *resolved;
    } catch (const json::exception&) {
        return heuristic_plan();
    }
    return p;
}

ExecutionResult execute_tool(const std::string& tool_id, const std::string& query,
                             const std::vector<UsageScenario>& context,
                             const ToolRegistry& registry, Gateway& gateway) {
    auto it = registry.tools.find(tool_id);
    if (it == registry.tools.end()) throw UnknownTool("no such tool: " + tool_id);
    const ToolSpec& spec = it->second;

    std::string snippets;
    const std::size_t limit = std::min<std::size_t>(context.size(), 3);
    for (std::size_t i = 0; i < limit; ++i) {
        if (i > 0) snippets += "\n";
        snippets += "- " + context[i].scenario_name + ": " + context[i].context;
    }

    std::string prompt = spec.prompt.text;
    prompt = replace_slot(std::move(prompt), "{context}", snippets);
    prompt = replace_slot(std::move(prompt), "{query}", query);
    prompt += "\n" + (spec.answer_format == AnswerFormat::numeric ? numeric_answer_instruction()
                                                                  : text_answer_instruction());

    ChatRequest request;
    request.messages.push_back({Role::user, prompt});
    const ChatResponse response = gateway.complete(request);

    ExecutionResult result;
    result.raw = response.content;

    // Last "Answer: $...$" payload wins.
    std::optional<std::string> payload;
    const std::string marker = "Answer:";
    std::size_t pos = result.raw.rfind(marker);
    while (pos != std::string::npos) {
        std::size_t i = pos + marker.size();
        while (i < result.raw.size() && result.raw[i] == ' ') ++i;
        if (i < result.raw.size() && result.raw[i] == '$') {
            const std::size_t close = result.raw.find('$', i + 1);
            if (close != std::string::npos) {
                payload = result.raw.substr(i + 1, close - i - 1);
                break;
            }
        }
        pos = pos == 0 ? std::string::npos : result.raw.rfind(marker, pos - 1);
    }

    if (payload) {
        if (spec.answer_format == AnswerFormat::numeric) {
            const auto value = first_number(*payload);
            if (value) {
                result.extracted = num_str(*value);
            } else {
                result.extracted = *payload;
                result.format_miss = true;
            }
        } else {
            result.extracted = *payload;
        }
        return result;
    }

    result.format_miss = true;
    if (spec.answer_format == AnswerFormat::numeric) {
        const auto value = last_number(result.raw);
        result.extracted = value ? num_str(*value) : "";
    } else {
        std::string trimmed = result.raw;
        while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front()))) {
            trimmed.erase(trimmed.begin());
        }
        while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) {
            trimmed.pop_back();
        }
        result.extracted = trimmed;
    }
    return result;
}

RoutingTrace route_query(const std::string& query, const SnapshotView& snapshot,
                         const ToolRegistry& registry, Gateway& gateway, RoutingMode mode,
                         const RoutingConfig& config) {
    RoutingTrace trace;
    trace.query = query;
    trace.mode = mode;
    if (config.use_bm25) {
        std::vector<std::pair<std::string, std::string>> corpus;
        corpus.reserve(snapshot.compendium.scenarios.size());
        for (const auto& s : snapshot.compendium.scenarios) {
            corpus.emplace_back(s.uid, s.scenario_name + " " + s.context);
        }
        trace.retrieved = bm25_retrieve(corpus, query, config.k, config.bm25_k1, config.bm25_b);
    } else {
        trace.retrieved = retrieve(snapshot.index, query, config.k);
    }

    std::vector<UsageScenario> candidates;
    std::vector<double> scores;
    for (const auto& [uid, score] : trace.retrieved.ranked) {
        const UsageScenario* s = snapshot.compendium.find_scenario(uid);
        if (s == nullptr) continue;  // index/compendium invariant guards this
        candidates.push_back(*s);
        scores.push_back(score);
    }
    if (candidates.empty()) throw EmptyIndex("no retrievable scenarios for query");
    trace.rerank_scores = scores;

    switch (mode) {
        case RoutingMode::full: {
            const RerankOutcome outcome = rerank(query, candidates, scores, gateway);
            trace.rerank_choice = outcome.uid;
            trace.rerank_parse_failure = outcome.parse_failure;
            trace.plan = plan(query, candidates, gateway, registry);
            break;
        }
        case RoutingMode::retrieval_only: {
            trace.rerank_choice = candidates.front().uid;
            Plan p;
            p.parent_tool_name = registry.has(candidates.front().tool_id)
                                     ? candidates.front().tool_id
                                     : heuristic_route(query, candidates, registry);
            p.scenario_name = candidates.front().scenario_name;
            p.plan_rationale = "retrieval rank-1 tool";
            trace.plan = p;
            break;
        }
        case RoutingMode::heuristic: {
            trace.rerank_choice = candidates.front().uid;
            Plan p;
            p.parent_tool_name = heuristic_route(query, candidates, registry);
            p.scenario_name = candidates.front().scenario_name;
            p.plan_rationale = "heuristic lexical route";
            trace.plan = p;
            break;
        }
    }
    trace.tool_used = trace.plan.parent_tool_name;

    std::vector<UsageScenario> owned;
    for (const auto& c : candidates) {
        if (c.tool_id == trace.tool_used && owned.size() < config.snippet_count) {
            owned.push_back(c);
        }
    }
    const ExecutionResult exec =
        execute_tool(trace.tool_used, query, owned, registry, gateway);
    trace.raw_answer = exec.raw;
    trace.extracted_answer = exec.extracted;
    trace.answer_format_miss = exec.format_miss;
    return trace;
}

bool answers_match(const std::string& extracted, const std::string& gold) {
    const auto gold_number = first_number(gold);
    if (gold_number) {
        const auto got = first_number(extracted);
        return got && std::fabs(*got - *gold_number) <= 1e-6;
    }
    return normalize_ws_lower(extracted) == normalize_ws_lower(gold);
}

}  // namespace synapse
