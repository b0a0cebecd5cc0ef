#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synapse/compendium.hpp"
#include "synapse/llm_gateway.hpp"
#include "synapse/retrieval.hpp"

namespace synapse {

enum class AnswerFormat { numeric, text };

struct ToolSpec {
    PromptTemplate prompt;  // {context} and {query} slots
    AnswerFormat answer_format = AnswerFormat::text;
    std::string description;
};

// Executable parent tools. The four reasoning tools are always present in
// the default registry; arbitrary extra ids are accepted.
struct ToolRegistry {
    std::map<std::string, ToolSpec> tools;

    bool has(const std::string& tool_id) const { return tools.count(tool_id) > 0; }
    std::vector<std::string> ids() const;
    std::string smallest_id() const;
};

ToolRegistry default_registry();

struct Plan {
    std::string plan_rationale;
    std::string scenario_name;
    std::string parent_tool_name;
    bool fallback = false;    // planner output unusable, heuristic route taken
    bool normalized = false;  // parent id needed fuzzy normalization
};

enum class RoutingMode { full, retrieval_only, heuristic };

std::string to_string(RoutingMode m);
RoutingMode routing_mode_from_string(const std::string& s);

struct RoutingConfig {
    std::size_t k = kDefaultTopK;
    std::size_t snippet_count = 3;  // context examples injected at execution
    bool use_bm25 = false;          // lexical retrieval baseline
    double bm25_k1 = 1.5;
    double bm25_b = 0.75;
};

struct RoutingTrace {
    std::string query;
    RetrievalResult retrieved;
    std::string rerank_choice;            // uid, always among retrieved
    std::vector<double> rerank_scores;    // retrieval cosines, candidate order
    Plan plan;
    std::string tool_used;
    std::string raw_answer;
    std::string extracted_answer;
    std::optional<bool> correct;
    RoutingMode mode = RoutingMode::full;
    bool rerank_parse_failure = false;
    bool answer_format_miss = false;
};

struct SnapshotView {
    const Compendium& compendium;
    const EmbeddingIndex& index;
};

// Byte-exact instantiation of the reranker template, candidates rendered as
// numbered "Tool Option i" lines in retrieval order.
std::string render_rerank_prompt(const std::string& query,
                                 const std::vector<UsageScenario>& candidates);

std::string render_planner_prompt(const std::string& query,
                                  const std::vector<UsageScenario>& candidates);

struct RerankOutcome {
    std::string uid;
    std::vector<double> scores;
    bool parse_failure = false;
};

// LLM choice of the best candidate; the first integer 1..n in the response
// wins, anything unparseable falls back to retrieval rank 1.
RerankOutcome rerank(const std::string& query, const std::vector<UsageScenario>& candidates,
                     const std::vector<double>& scores, Gateway& gateway);

// LLM execution plan; the first balanced JSON object in the response is
// parsed and the parent id normalized against the registry (lowercase,
// strip non-alphanumerics, nearest id within edit distance 2). Any failure
// falls back to the heuristic route.
Plan plan(const std::string& query, const std::vector<UsageScenario>& candidates,
          Gateway& gateway, const ToolRegistry& registry);

// Lexical fallback router: token overlap plus a symbolic bonus that nudges
// digit/operator-bearing queries toward mathqa.
std::string heuristic_route(const std::string& query,
                            const std::vector<UsageScenario>& candidates,
                            const ToolRegistry& registry);

struct ExecutionResult {
    std::string raw;
    std::string extracted;
    bool format_miss = false;
};

ExecutionResult execute_tool(const std::string& tool_id, const std::string& query,
                             const std::vector<UsageScenario>& context,
                             const ToolRegistry& registry, Gateway& gateway);

// The full inference chain: retrieve -> rerank -> plan -> execute. The
// retrieval_only and heuristic modes skip the LLM stages and realize the
// corresponding baselines on the identical retrieval/execution path.
RoutingTrace route_query(const std::string& query, const SnapshotView& snapshot,
                         const ToolRegistry& registry, Gateway& gateway, RoutingMode mode,
                         const RoutingConfig& config = {});

// Embedded copies of the prompt files under prompts/; a test pins the file
// bytes to these constants.
const std::string& reranker_template();
const std::string& planner_template();
const std::string& refiner_template();
const std::string& summarizer_template();
const std::string& attacker_system_template();
const std::string& attacker_user_template();

std::string numeric_answer_instruction();
std::string text_answer_instruction();

// Normalizes "Answer: $21$" style payloads: numeric answers compare on the
// first number, text answers case-folded.
bool answers_match(const std::string& extracted, const std::string& gold);

}  // namespace synapse
