#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace synapse {

// ---------------------------------------------------------------------------
// The compendium is the unit of federated exchange: a structured JSON
// artifact holding tool metadata, usage scenarios, precautions, prompt
// templates and an entity/relation annex. The canonical file layout is
// documented in docs/schema.md and enforced by parse/serialize round trips.
// ---------------------------------------------------------------------------

struct ToolMetadata {
    std::string tool_id;       // non-empty, lowercase ASCII + underscores
    std::string description;   // non-empty
    std::string spec_version = "1.0.0";
};

struct ScenarioTags {
    std::optional<std::string> dataset;
    std::optional<std::string> domain;
    std::optional<std::string> task_type;

    bool operator==(const ScenarioTags&) const = default;
};

enum class Difficulty { easy, medium, hard };

std::string to_string(Difficulty d);
Difficulty difficulty_from_string(const std::string& s);

struct UsageScenario {
    std::string scenario_name;
    std::string context;
    std::string tool_id;
    ScenarioTags tags;
    Difficulty difficulty = Difficulty::medium;
    // Content-derived stable identifier, assigned at creation and preserved
    // verbatim through curation and privacy transforms so routing keys
    // survive masking.
    std::string uid;
};

struct Precaution {
    std::string precaution;  // short title
    std::string details;
};

struct PromptTemplate {
    std::string template_id;
    std::string text;                     // `{placeholder}` slots
    std::vector<std::string> variables;   // exactly the placeholders in text
};

struct Relation {
    std::string source;
    std::string link;
    std::string target;

    bool operator==(const Relation&) const = default;
};

struct StructuredAnnex {
    std::vector<std::string> entities;
    std::vector<Relation> relations;
};

struct MultiToolCoordination {
    std::string description;
    std::vector<std::string> examples;

    bool empty() const { return description.empty() && examples.empty(); }
};

struct Compendium {
    std::string owner;
    std::int64_t version = 0;
    std::vector<ToolMetadata> tools;
    std::vector<UsageScenario> scenarios;
    std::vector<Precaution> precautions;
    MultiToolCoordination coordination;
    std::vector<PromptTemplate> templates;
    StructuredAnnex annex;
    // Declared numeric metadata (counts, scores); the only fields the Laplace
    // mechanism perturbs.
    std::map<std::string, double> metadata;

    const UsageScenario* find_scenario(const std::string& uid) const;
};

// "unified::<tool_id>::scenario::<scenario_name>"
struct Signature {
    std::string tool_id;
    std::string scenario_name;

    std::string key() const;
    static Signature parse(const std::string& key);

    bool operator==(const Signature&) const = default;
    bool operator<(const Signature& other) const {
        return key() < other.key();
    }
};

struct CurationPolicy {
    std::size_t l_max = 280;          // chars per scenario context
    std::size_t s_max = 3;            // sentences per scenario context
    double dedup_threshold = 0.9;     // token-Jaccard cutoff
};

// Stable 64-bit content hash over (tool_id, scenario_name, normalized
// context); invariant under whitespace runs and case in the context.
std::string scenario_uid(const UsageScenario& s);

// Sorted distinct `{identifier}` placeholders in a template body.
std::vector<std::string> template_variables_of(const std::string& text);

// Parse + validate the canonical layout; SchemaError names the JSON path.
Compendium parse_compendium(const std::string& json_text);
Compendium compendium_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const Compendium& c);
// Canonical serialization: sorted keys, UTF-8, no insignificant whitespace.
std::string serialize_compendium(const Compendium& c);

// Throws SchemaError on any invariant violation.
void validate_compendium(const Compendium& c);

// Order-stable near-duplicate removal: first occurrence survives; exact uid
// duplicates always go; survivors never pair (same tool, Jaccard >= threshold).
std::vector<UsageScenario> dedup_scenarios(const std::vector<UsageScenario>& scenarios,
                                           double threshold);

// Truncation caps + dedup; bumps the version.
Compendium curate(const Compendium& c, const CurationPolicy& policy);

// Union with first-wins tie-breaks on every keyed collection, then a full
// curation pass. version = 1 + max input version.
Compendium merge_compendiums(const std::vector<Compendium>& parts, double dedup_threshold);

}  // namespace synapse
