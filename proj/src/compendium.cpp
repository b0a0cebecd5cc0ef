#include "synapse/compendium.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "synapse/errors.hpp"
#include "synapse/util.hpp"

namespace synapse {

using nlohmann::json;

std::string to_string(Difficulty d) {
    switch (d) {
        case Difficulty::easy: return "easy";
        case Difficulty::medium: return "medium";
        case Difficulty::hard: return "hard";
    }
    return "medium";
}

Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::easy;
    if (s == "medium") return Difficulty::medium;
    if (s == "hard") return Difficulty::hard;
    throw DomainError("unknown difficulty: " + s);
}

const UsageScenario* Compendium::find_scenario(const std::string& uid) const {
    for (const auto& s : scenarios) {
        if (s.uid == uid) return &s;
    }
    return nullptr;
}

std::string Signature::key() const {
    return "unified::" + tool_id + "::scenario::" + scenario_name;
}

Signature Signature::parse(const std::string& key) {
    static constexpr std::string_view prefix = "unified::";
    static constexpr std::string_view marker = "::scenario::";
    if (key.rfind(prefix, 0) != 0) {
        throw DomainError("signature must start with 'unified::': " + key);
    }
    const auto pos = key.find(marker, prefix.size());
    if (pos == std::string::npos) {
        throw DomainError("signature missing '::scenario::': " + key);
    }
    Signature sig;
    sig.tool_id = key.substr(prefix.size(), pos - prefix.size());
    sig.scenario_name = key.substr(pos + marker.size());
    if (sig.tool_id.empty() || sig.scenario_name.empty()) {
        throw DomainError("signature has empty components: " + key);
    }
    return sig;
}

std::string scenario_uid(const UsageScenario& s) {
    std::uint64_t h = kFnvOffset;
    h = fnv1a64(s.tool_id, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(s.scenario_name, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(normalize_ws_lower(s.context), h);
    return hex64(h);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

bool valid_tool_id(const std::string& id) {
    if (id.empty()) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

bool valid_uid(const std::string& uid) {
    if (uid.size() != 16) return false;
    return std::all_of(uid.begin(), uid.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

}  // namespace

std::vector<std::string> template_variables_of(const std::string& text) {
    // A placeholder is `{identifier}` with identifier = [A-Za-z_][A-Za-z0-9_]*.
    // Literal JSON braces in prompt text never qualify.
    std::vector<std::string> names;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        std::size_t j = i + 1;
        std::string name;
        while (j < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
            name += text[j];
            ++j;
        }
        if (j < text.size() && text[j] == '}' && !name.empty() &&
            !std::isdigit(static_cast<unsigned char>(name[0]))) {
            names.push_back(name);
            i = j;
        }
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

void validate_compendium(const Compendium& c) {
    std::unordered_set<std::string> tool_ids;
    for (std::size_t i = 0; i < c.tools.size(); ++i) {
        const auto& t = c.tools[i];
        const std::string path = "textual_compendium.tool_description[" + std::to_string(i) + "]";
        if (!valid_tool_id(t.tool_id)) {
            throw SchemaError(path + ".tool_id",
                              "tool_id must be non-empty lowercase ASCII/underscores");
        }
        if (t.description.empty()) {
            throw SchemaError(path + ".description", "description must be non-empty");
        }
        if (!tool_ids.insert(t.tool_id).second) {
            throw SchemaError(path + ".tool_id", "duplicate tool_id: " + t.tool_id);
        }
    }
    std::unordered_set<std::string> uids;
    for (std::size_t i = 0; i < c.scenarios.size(); ++i) {
        const auto& s = c.scenarios[i];
        const std::string path = "textual_compendium.usage_scenarios[" + std::to_string(i) + "]";
        if (s.scenario_name.empty()) {
            throw SchemaError(path + ".scenario", "scenario name must be non-empty");
        }
        if (!tool_ids.count(s.tool_id)) {
            throw SchemaError(path + ".tool_id",
                              "references tool_id '" + s.tool_id + "' absent from tool_description");
        }
        if (!valid_uid(s.uid)) {
            throw SchemaError(path + ".uid", "uid must be 16 lowercase hex chars");
        }
        if (!uids.insert(s.uid).second) {
            throw SchemaError(path + ".uid", "duplicate uid: " + s.uid);
        }
    }
    for (std::size_t i = 0; i < c.precautions.size(); ++i) {
        const auto& p = c.precautions[i];
        const std::string path = "textual_compendium.precautions[" + std::to_string(i) + "]";
        if (p.precaution.empty()) throw SchemaError(path + ".precaution", "must be non-empty");
        if (p.details.empty()) throw SchemaError(path + ".details", "must be non-empty");
    }
    std::unordered_set<std::string> template_ids;
    for (std::size_t i = 0; i < c.templates.size(); ++i) {
        const auto& t = c.templates[i];
        const std::string path = "textual_compendium.prompt_templates[" + std::to_string(i) + "]";
        if (t.template_id.empty()) throw SchemaError(path + ".template_id", "must be non-empty");
        if (!template_ids.insert(t.template_id).second) {
            throw SchemaError(path + ".template_id", "duplicate template_id: " + t.template_id);
        }
        auto placeholders = template_variables_of(t.text);
        auto declared = t.variables;
        std::sort(declared.begin(), declared.end());
        if (placeholders != declared) {
            throw SchemaError(path + ".variables",
                              "placeholders in text must match declared variables");
        }
    }
    std::set<std::string> entity_set(c.annex.entities.begin(), c.annex.entities.end());
    if (entity_set.size() != c.annex.entities.size()) {
        throw SchemaError("structured_annex.entities", "duplicate entity");
    }
    std::set<std::tuple<std::string, std::string, std::string>> triples;
    for (std::size_t i = 0; i < c.annex.relations.size(); ++i) {
        const auto& r = c.annex.relations[i];
        const std::string path = "structured_annex.relations[" + std::to_string(i) + "]";
        if (r.source.empty() || r.link.empty() || r.target.empty()) {
            throw SchemaError(path, "relation fields must be non-empty");
        }
        if (!triples.insert({r.source, r.link, r.target}).second) {
            throw SchemaError(path, "duplicate relation triple");
        }
    }
    if (c.version < 0) {
        throw SchemaError("version", "version must be non-negative");
    }
}

// ---------------------------------------------------------------------------
// JSON (de)serialization — canonical layout of docs/schema.md
// ---------------------------------------------------------------------------

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(path + "." + key, "missing required field");
    }
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string()) throw SchemaError(path + "." + key, "expected string");
    return v.get<std::string>();
}

}  // namespace

Compendium compendium_from_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("$", "document must be a JSON object");
    Compendium c;
    c.owner = doc.value("owner", std::string{});
    c.version = doc.value("version", std::int64_t{0});
    if (doc.contains("metadata")) {
        const json& md = doc["metadata"];
        if (!md.is_object()) throw SchemaError("metadata", "expected object");
        for (auto it = md.begin(); it != md.end(); ++it) {
            if (!it.value().is_number()) {
                throw SchemaError("metadata." + it.key(), "expected number");
            }
            c.metadata[it.key()] = it.value().get<double>();
        }
    }

    const json& tc = require(doc, "textual_compendium", "$");
    if (!tc.is_object()) throw SchemaError("textual_compendium", "expected object");

    if (tc.contains("tool_description")) {
        const json& tools = tc["tool_description"];
        if (!tools.is_array()) throw SchemaError("textual_compendium.tool_description", "expected array");
        for (std::size_t i = 0; i < tools.size(); ++i) {
            const std::string path = "textual_compendium.tool_description[" + std::to_string(i) + "]";
            const json& t = tools[i];
            if (!t.is_object()) throw SchemaError(path, "expected object");
            ToolMetadata tm;
            tm.tool_id = require_string(t, "tool_id", path);
            tm.description = require_string(t, "description", path);
            tm.spec_version = t.value("spec_version", std::string{"1.0.0"});
            c.tools.push_back(std::move(tm));
        }
    }

    if (tc.contains("usage_scenarios")) {
        const json& scenarios = tc["usage_scenarios"];
        if (!scenarios.is_array()) throw SchemaError("textual_compendium.usage_scenarios", "expected array");
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            const std::string path = "textual_compendium.usage_scenarios[" + std::to_string(i) + "]";
            const json& s = scenarios[i];
            if (!s.is_object()) throw SchemaError(path, "expected object");
            UsageScenario us;
            us.scenario_name = require_string(s, "scenario", path);
            us.context = require_string(s, "context", path);
            us.tool_id = require_string(s, "tool_id", path);
            if (s.contains("tags")) {
                const json& tags = s["tags"];
                if (!tags.is_object()) throw SchemaError(path + ".tags", "expected object");
                for (auto it = tags.begin(); it != tags.end(); ++it) {
                    if (!it.value().is_string()) {
                        throw SchemaError(path + ".tags." + it.key(), "expected string");
                    }
                    if (it.key() == "dataset") us.tags.dataset = it.value().get<std::string>();
                    else if (it.key() == "domain") us.tags.domain = it.value().get<std::string>();
                    else if (it.key() == "task_type") us.tags.task_type = it.value().get<std::string>();
                    else throw SchemaError(path + ".tags." + it.key(), "unknown tag key");
                }
            }
            if (s.contains("difficulty")) {
                const std::string d = require_string(s, "difficulty", path);
                try {
                    us.difficulty = difficulty_from_string(d);
                } catch (const DomainError&) {
                    throw SchemaError(path + ".difficulty", "must be easy|medium|hard");
                }
            }
            us.uid = s.contains("uid") ? require_string(s, "uid", path) : scenario_uid(us);
            c.scenarios.push_back(std::move(us));
        }
    }

    if (tc.contains("precautions")) {
        const json& ps = tc["precautions"];
        if (!ps.is_array()) throw SchemaError("textual_compendium.precautions", "expected array");
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const std::string path = "textual_compendium.precautions[" + std::to_string(i) + "]";
            if (!ps[i].is_object()) throw SchemaError(path, "expected object");
            Precaution p;
            p.precaution = require_string(ps[i], "precaution", path);
            p.details = require_string(ps[i], "details", path);
            c.precautions.push_back(std::move(p));
        }
    }

    if (tc.contains("multi_tool_coordination")) {
        const json& mtc = tc["multi_tool_coordination"];
        if (!mtc.is_object()) throw SchemaError("textual_compendium.multi_tool_coordination", "expected object");
        c.coordination.description = mtc.value("description", std::string{});
        if (mtc.contains("examples")) {
            for (std::size_t i = 0; i < mtc["examples"].size(); ++i) {
                const json& e = mtc["examples"][i];
                if (!e.is_string()) {
                    throw SchemaError("textual_compendium.multi_tool_coordination.examples[" +
                                          std::to_string(i) + "]",
                                      "expected string");
                }
                c.coordination.examples.push_back(e.get<std::string>());
            }
        }
    }

    if (tc.contains("prompt_templates")) {
        const json& ts = tc["prompt_templates"];
        if (!ts.is_array()) throw SchemaError("textual_compendium.prompt_templates", "expected array");
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const std::string path = "textual_compendium.prompt_templates[" + std::to_string(i) + "]";
            if (!ts[i].is_object()) throw SchemaError(path, "expected object");
            PromptTemplate pt;
            pt.template_id = require_string(ts[i], "template_id", path);
            pt.text = require_string(ts[i], "text", path);
            if (ts[i].contains("variables")) {
                for (const auto& v : ts[i]["variables"]) {
                    if (!v.is_string()) throw SchemaError(path + ".variables", "expected strings");
                    pt.variables.push_back(v.get<std::string>());
                }
            }
            c.templates.push_back(std::move(pt));
        }
    }

    const json& annex = require(doc, "structured_annex", "$");
    if (!annex.is_object()) throw SchemaError("structured_annex", "expected object");
    if (annex.contains("entities")) {
        for (std::size_t i = 0; i < annex["entities"].size(); ++i) {
            const json& e = annex["entities"][i];
            if (!e.is_string()) {
                throw SchemaError("structured_annex.entities[" + std::to_string(i) + "]",
                                  "expected string");
            }
            c.annex.entities.push_back(e.get<std::string>());
        }
    }
    if (annex.contains("relations")) {
        for (std::size_t i = 0; i < annex["relations"].size(); ++i) {
            const std::string path = "structured_annex.relations[" + std::to_string(i) + "]";
            const json& r = annex["relations"][i];
            if (!r.is_object()) throw SchemaError(path, "expected object");
            Relation rel;
            rel.source = require_string(r, "source", path);
            rel.link = require_string(r, "link", path);
            rel.target = require_string(r, "target", path);
            c.annex.relations.push_back(std::move(rel));
        }
    }

    validate_compendium(c);
    return c;
}

Compendium parse_compendium(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    return compendium_from_json(doc);
}

json to_json(const Compendium& c) {
    json doc = json::object();
    doc["owner"] = c.owner;
    doc["version"] = c.version;
    json md = json::object();
    for (const auto& [k, v] : c.metadata) md[k] = v;
    doc["metadata"] = md;

    json tc = json::object();
    json tools = json::array();
    for (const auto& t : c.tools) {
        tools.push_back({{"tool_id", t.tool_id},
                         {"description", t.description},
                         {"spec_version", t.spec_version}});
    }
    tc["tool_description"] = tools;

    json scenarios = json::array();
    for (const auto& s : c.scenarios) {
        json tags = json::object();
        if (s.tags.dataset) tags["dataset"] = *s.tags.dataset;
        if (s.tags.domain) tags["domain"] = *s.tags.domain;
        if (s.tags.task_type) tags["task_type"] = *s.tags.task_type;
        scenarios.push_back({{"scenario", s.scenario_name},
                             {"context", s.context},
                             {"tool_id", s.tool_id},
                             {"tags", tags},
                             {"difficulty", to_string(s.difficulty)},
                             {"uid", s.uid}});
    }
    tc["usage_scenarios"] = scenarios;

    json precautions = json::array();
    for (const auto& p : c.precautions) {
        precautions.push_back({{"precaution", p.precaution}, {"details", p.details}});
    }
    tc["precautions"] = precautions;

    tc["multi_tool_coordination"] = {{"description", c.coordination.description},
                                     {"examples", c.coordination.examples}};

    json templates = json::array();
    for (const auto& t : c.templates) {
        templates.push_back({{"template_id", t.template_id},
                             {"text", t.text},
                             {"variables", t.variables}});
    }
    tc["prompt_templates"] = templates;
    doc["textual_compendium"] = tc;

    json relations = json::array();
    for (const auto& r : c.annex.relations) {
        relations.push_back({{"source", r.source}, {"link", r.link}, {"target", r.target}});
    }
    doc["structured_annex"] = {{"entities", c.annex.entities}, {"relations", relations}};
    return doc;
}

std::string serialize_compendium(const Compendium& c) {
    return canonical_dump(to_json(c));
}

// ---------------------------------------------------------------------------
// Curation
// ---------------------------------------------------------------------------

std::vector<UsageScenario> dedup_scenarios(const std::vector<UsageScenario>& scenarios,
                                           double threshold) {
    std::vector<UsageScenario> kept;
    std::unordered_set<std::string> seen_uids;
    for (const auto& s : scenarios) {
        if (seen_uids.count(s.uid)) continue;
        bool duplicate = false;
        for (const auto& k : kept) {
            if (k.tool_id == s.tool_id &&
                token_jaccard(k.context, s.context) >= threshold) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) {
            seen_uids.insert(s.uid);
            kept.push_back(s);
        }
    }
    return kept;
}

Compendium curate(const Compendium& c, const CurationPolicy& policy) {
    Compendium out = c;
    for (auto& s : out.scenarios) {
        s.context = truncate_text(s.context, policy.l_max, policy.s_max);
    }
    out.scenarios = dedup_scenarios(out.scenarios, policy.dedup_threshold);
    out.version = c.version + 1;
    return out;
}

Compendium merge_compendiums(const std::vector<Compendium>& parts, double dedup_threshold) {
    if (parts.empty()) throw DomainError("merge_compendiums requires at least one part");

    Compendium out;
    out.owner = parts.front().owner;
    std::int64_t max_version = 0;

    std::unordered_set<std::string> tool_ids;
    std::unordered_set<std::string> uids;
    std::unordered_set<std::string> precaution_keys;
    std::unordered_set<std::string> template_ids;
    std::unordered_set<std::string> entities;
    std::set<std::tuple<std::string, std::string, std::string>> triples;

    for (const auto& part : parts) {
        max_version = std::max(max_version, part.version);
        for (const auto& t : part.tools) {
            if (tool_ids.insert(t.tool_id).second) out.tools.push_back(t);
        }
        for (const auto& s : part.scenarios) {
            if (uids.insert(s.uid).second) out.scenarios.push_back(s);
        }
        for (const auto& p : part.precautions) {
            if (precaution_keys.insert(p.precaution + "\x1f" + p.details).second) {
                out.precautions.push_back(p);
            }
        }
        for (const auto& t : part.templates) {
            if (template_ids.insert(t.template_id).second) out.templates.push_back(t);
        }
        if (out.coordination.empty() && !part.coordination.empty()) {
            out.coordination = part.coordination;
        }
        for (const auto& e : part.annex.entities) {
            if (entities.insert(e).second) out.annex.entities.push_back(e);
        }
        for (const auto& r : part.annex.relations) {
            if (triples.insert({r.source, r.link, r.target}).second) {
                out.annex.relations.push_back(r);
            }
        }
        for (const auto& [k, v] : part.metadata) {
            out.metadata.emplace(k, v);  // first wins
        }
    }

    CurationPolicy policy;
    policy.dedup_threshold = dedup_threshold;
    out = curate(out, policy);
    out.version = max_version + 1;
    return out;
}

}  // namespace synapse
