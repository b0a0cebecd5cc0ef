#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "synapse/compendium.hpp"
#include "synapse/errors.hpp"
#include "synapse/util.hpp"
#include "test_support.hpp"

using namespace synapse;

namespace {

UsageScenario make_scenario(const std::string& tool, const std::string& name,
                            const std::string& context) {
    UsageScenario s;
    s.tool_id = tool;
    s.scenario_name = name;
    s.context = context;
    s.uid = scenario_uid(s);
    return s;
}

}  // namespace

TEST_CASE("fig2 document parses to the expected shape") {
    const Compendium c = parse_compendium(read_file(test_support::fixture_path(
        "fig2.compendium.json")));
    CHECK(c.tools.size() == 1);
    CHECK(c.tools[0].tool_id == "mathqa");
    CHECK(c.scenarios.size() == 2);
    CHECK(c.scenarios[0].scenario_name == "Financial Calculator");
    CHECK(c.scenarios[1].scenario_name == "Algebraic Word Problem Solver");
    CHECK(c.precautions.size() == 2);
    CHECK(c.precautions[1].details == "Not intended for calculus.");
    CHECK(c.annex.entities.size() == 2);
    CHECK(c.annex.relations.size() == 2);
    CHECK(c.coordination.examples.size() == 1);
}

TEST_CASE("all fixture documents round-trip byte-identically") {
    for (const auto& path : test_support::fixture_compendium_files()) {
        CAPTURE(path);
        const std::string original = read_file(path);
        const Compendium c = parse_compendium(original);
        CHECK(serialize_compendium(c) == original);
    }
}

TEST_CASE("empty document is valid") {
    const Compendium c = parse_compendium(
        R"({"textual_compendium":{},"structured_annex":{}})");
    CHECK(c.tools.empty());
    CHECK(c.scenarios.empty());
    // Re-parse of the canonical form is the identity.
    const std::string canonical = serialize_compendium(c);
    CHECK(serialize_compendium(parse_compendium(canonical)) == canonical);
}

TEST_CASE("schema errors carry JSON paths") {
    SUBCASE("dangling tool reference") {
        const std::string doc =
            R"({"textual_compendium":{"tool_description":[],)"
            R"("usage_scenarios":[{"scenario":"S","context":"c","tool_id":"calc"}]},)"
            R"("structured_annex":{}})";
        CHECK_THROWS_WITH_AS(parse_compendium(doc),
                             doctest::Contains("usage_scenarios[0].tool_id"), SchemaError);
    }
    SUBCASE("missing required field") {
        const std::string doc =
            R"({"textual_compendium":{"usage_scenarios":[{"scenario":"S","tool_id":"t"}]},)"
            R"("structured_annex":{}})";
        CHECK_THROWS_WITH_AS(parse_compendium(doc), doctest::Contains("context"), SchemaError);
    }
    SUBCASE("duplicate uid") {
        Compendium c;
        c.tools.push_back({"mathqa", "Solves.", "1.0.0"});
        auto s = make_scenario("mathqa", "A", "one context.");
        auto t = make_scenario("mathqa", "B", "another context.");
        t.uid = s.uid;
        c.scenarios = {s, t};
        CHECK_THROWS_WITH_AS(validate_compendium(c),
                             doctest::Contains("usage_scenarios[1].uid"), SchemaError);
    }
    SUBCASE("missing textual_compendium") {
        CHECK_THROWS_WITH_AS(parse_compendium(R"({"structured_annex":{}})"),
                             doctest::Contains("textual_compendium"), SchemaError);
    }
    SUBCASE("bad tool_id charset") {
        const std::string doc =
            R"({"textual_compendium":{"tool_description":[{"tool_id":"Bad-Id","description":"x"}]},)"
            R"("structured_annex":{}})";
        CHECK_THROWS_WITH_AS(parse_compendium(doc), doctest::Contains("tool_id"), SchemaError);
    }
    SUBCASE("template variable mismatch") {
        const std::string doc =
            R"({"textual_compendium":{"prompt_templates":[{"template_id":"t","text":"{query}","variables":[]}]},)"
            R"("structured_annex":{}})";
        CHECK_THROWS_WITH_AS(parse_compendium(doc), doctest::Contains("variables"), SchemaError);
    }
    SUBCASE("duplicate relation") {
        const std::string doc =
            R"({"textual_compendium":{},"structured_annex":{"relations":[)"
            R"({"source":"a","link":"b","target":"c"},{"source":"a","link":"b","target":"c"}]}})";
        CHECK_THROWS_WITH_AS(parse_compendium(doc), doctest::Contains("relations[1]"),
                             SchemaError);
    }
}

TEST_CASE("scenario uid is stable under whitespace and case") {
    auto a = make_scenario("mathqa", "Financial Calculator", "Handles interest and loans.");
    auto b = make_scenario("mathqa", "Financial Calculator",
                           "  handles   INTEREST and loans.  ");
    CHECK(a.uid == scenario_uid(b));
    auto c = make_scenario("mathqa", "Other Name", "Handles interest and loans.");
    CHECK(a.uid != c.uid);
}

TEST_CASE("fixture scenario uids are exhaustively distinct") {
    std::set<std::string> uids;
    std::size_t total = 0;
    for (const auto& path : test_support::fixture_compendium_files()) {
        const Compendium c = parse_compendium(read_file(path));
        for (const auto& s : c.scenarios) {
            uids.insert(s.uid);
            ++total;
        }
    }
    CHECK(total > 50);
    CHECK(uids.size() == total);
}

TEST_CASE("template placeholders ignore literal JSON braces") {
    CHECK(template_variables_of("{query} and {context}") ==
          std::vector<std::string>{"context", "query"});
    CHECK(template_variables_of("{\"plan_rationale\": \"x\"} uses {query}") ==
          std::vector<std::string>{"query"});
    CHECK(template_variables_of("{ spaced }").empty());
}

TEST_CASE("dedup_scenarios") {
    SUBCASE("exact duplicates collapse at any threshold") {
        auto s = make_scenario("mathqa", "A", "identical context here.");
        CHECK(dedup_scenarios({s, s}, 1.0).size() == 1);
    }
    SUBCASE("threshold 1.0 keeps distinct contexts") {
        auto a = make_scenario("mathqa", "A", "first context.");
        auto b = make_scenario("mathqa", "B", "second context.");
        CHECK(dedup_scenarios({a, b}, 1.0).size() == 2);
    }
    SUBCASE("near-duplicates by tool only") {
        auto a = make_scenario("mathqa", "A", "shared words everywhere around here.");
        auto b = make_scenario("scienceqa", "B", "shared words everywhere around here.");
        CHECK(dedup_scenarios({a, b}, 0.9).size() == 2);  // different tools survive
    }
    SUBCASE("ten-scenario fixture with three near-duplicates at threshold 0.9") {
        // Pairwise Jaccards hand-verified: 0.9167, 0.92, 0.9259 for the dup
        // pairs; every cross pair is below 0.07.
        const std::string base1 =
            "computes simple and compound interest on deposits loans and mortgages including "
            "principal rate time periods annual monthly quarterly payments with fees penalties "
            "balance summaries";
        const std::string dup1 =
            "computes simple and compound interest on deposits loans and mortgages including "
            "principal rate time periods annual monthly quarterly payments with fees penalties "
            "balance overviews";
        const std::string base2 =
            "solves percentage proportion markup discount tax tip conversion problems across "
            "retail salary commission scenarios with stepwise unit rate checks and final "
            "rounding rules applied";
        const std::string dup2 =
            "solves percentage proportion markup discount tax tip conversion problems across "
            "retail salary commission scenarios with stepwise unit rate checks and final "
            "truncation rules applied";
        const std::string base3 =
            "analyzes work rate time pipelines where several workers pumps or machines fill "
            "drain or build together combining individual rates into joint completion times "
            "with idle gaps handled";
        const std::string dup3 =
            "analyzes work rate time pipelines where several workers pumps or machines fill "
            "drain or build together combining individual rates into joint completion times "
            "with rest gaps handled";
        std::vector<UsageScenario> scenarios = {
            make_scenario("mathqa", "Interest", base1),
            make_scenario("mathqa", "Percent", base2),
            make_scenario("mathqa", "Work", base3),
            make_scenario("mathqa", "Interest Copy", dup1),
            make_scenario("mathqa", "Percent Copy", dup2),
            make_scenario("mathqa", "Work Copy", dup3),
            make_scenario("mathqa", "Geometry",
                          "covers geometry of triangles circles rectangles including area "
                          "perimeter and angle sums."),
            make_scenario("mathqa", "Sequences",
                          "handles sequences series and number patterns with recursive and "
                          "closed forms."),
            make_scenario("mathqa", "Counting",
                          "counts objects sets and arrangements using permutations and "
                          "combinations."),
            make_scenario("mathqa", "Motion",
                          "tracks motion distance speed and relative velocity between moving "
                          "bodies."),
        };
        const auto survivors = dedup_scenarios(scenarios, 0.9);
        CHECK(survivors.size() == 7);
        // Order-stable: first occurrences survive.
        CHECK(survivors[0].scenario_name == "Interest");
        CHECK(survivors[1].scenario_name == "Percent");
        CHECK(survivors[2].scenario_name == "Work");
    }
    SUBCASE("idempotence") {
        auto a = make_scenario("mathqa", "A", "alpha beta gamma delta.");
        auto b = make_scenario("mathqa", "B", "alpha beta gamma delta epsilon.");
        auto c = make_scenario("mathqa", "C", "unrelated words entirely new.");
        const auto once = dedup_scenarios({a, b, c}, 0.75);
        const auto twice = dedup_scenarios(once, 0.75);
        CHECK(once.size() == twice.size());
        for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].uid == twice[i].uid);
    }
}

TEST_CASE("curate") {
    Compendium c;
    c.tools.push_back({"mathqa", "Solves.", "1.0.0"});
    CurationPolicy policy;

    SUBCASE("long context truncates at the sentence boundary under 280") {
        std::string context;
        for (int i = 0; i < 10; ++i) {
            context += "Sentence number " + std::to_string(i) + " fills space with words. ";
        }
        REQUIRE(context.size() > 280);
        c.scenarios.push_back(make_scenario("mathqa", "Long", context));
        policy.s_max = 100;
        const Compendium out = curate(c, policy);
        CHECK(out.scenarios[0].context.size() <= 280);
        CHECK(out.scenarios[0].context.back() == '.');
        CHECK(out.version == c.version + 1);
    }
    SUBCASE("compliant context unchanged") {
        c.scenarios.push_back(make_scenario("mathqa", "Short", "Tiny. Context."));
        const Compendium out = curate(c, policy);
        CHECK(out.scenarios[0].context == "Tiny. Context.");
    }
    SUBCASE("sentence cap keeps the first sentence") {
        c.scenarios.push_back(make_scenario("mathqa", "Multi", "One. Two. Three."));
        policy.s_max = 1;
        const Compendium out = curate(c, policy);
        CHECK(out.scenarios[0].context == "One.");
    }
    SUBCASE("never grows serialized size at equal version") {
        std::string context;
        for (int i = 0; i < 30; ++i) context += "Londing sentence " + std::to_string(i) + ". ";
        c.scenarios.push_back(make_scenario("mathqa", "Long", context));
        c.scenarios.push_back(make_scenario("mathqa", "Long Copy", context));
        Compendium out = curate(c, policy);
        out.version = c.version;
        CHECK(serialize_compendium(out).size() <= serialize_compendium(c).size());
    }
}

TEST_CASE("merge_compendiums") {
    const Compendium fig2 = parse_compendium(read_file(test_support::fixture_path(
        "fig2.compendium.json")));

    SUBCASE("merge with itself equals curate up to nothing") {
        const Compendium merged = merge_compendiums({fig2, fig2}, 0.9);
        CurationPolicy policy;
        const Compendium curated = curate(fig2, policy);
        CHECK(merged.scenarios.size() == curated.scenarios.size());
        CHECK(serialize_compendium(merged) == serialize_compendium(curated));
    }
    SUBCASE("disjoint scenario union sums counts") {
        Compendium a;
        a.tools.push_back({"mathqa", "Solves.", "1.0.0"});
        a.scenarios.push_back(make_scenario("mathqa", "A", "one topic entirely."));
        Compendium b;
        b.tools.push_back({"mathqa", "Solves.", "1.0.0"});
        b.scenarios.push_back(make_scenario("mathqa", "B", "different topic altogether."));
        Compendium c;
        c.tools.push_back({"scienceqa", "Science.", "1.0.0"});
        c.scenarios.push_back(make_scenario("scienceqa", "C", "chemistry reactions balance."));
        const Compendium merged = merge_compendiums({a, b, c}, 0.9);
        CHECK(merged.scenarios.size() == 3);
        CHECK(merged.tools.size() == 2);
    }
    SUBCASE("uid collision keeps the first occurrence") {
        Compendium second;
        second.owner = "client-2";
        second.tools = fig2.tools;
        second.scenarios.push_back(fig2.scenarios[1]);  // same Algebraic scenario, same uid
        const Compendium merged = merge_compendiums({fig2, second}, 0.9);
        std::size_t algebraic = 0;
        for (const auto& s : merged.scenarios) {
            if (s.scenario_name == "Algebraic Word Problem Solver") ++algebraic;
        }
        CHECK(algebraic == 1);
        CHECK(merged.scenarios.size() == fig2.scenarios.size());
    }
    SUBCASE("version is one past the max input") {
        Compendium a = fig2;
        a.version = 4;
        Compendium b = fig2;
        b.version = 9;
        CHECK(merge_compendiums({a, b}, 0.9).version == 10);
    }
    SUBCASE("associativity up to tie-break: same uid sets") {
        Compendium a;
        a.tools.push_back({"mathqa", "Solves.", "1.0.0"});
        a.scenarios.push_back(make_scenario("mathqa", "A", "first body of text."));
        Compendium b = a;
        b.scenarios[0] = make_scenario("mathqa", "B", "second body of text.");
        Compendium c = a;
        c.scenarios[0] = make_scenario("mathqa", "C", "third body of text.");
        const Compendium left = merge_compendiums({a, merge_compendiums({b, c}, 0.9)}, 0.9);
        const Compendium right = merge_compendiums({merge_compendiums({a, b}, 0.9), c}, 0.9);
        std::set<std::string> lu, ru;
        for (const auto& s : left.scenarios) lu.insert(s.uid);
        for (const auto& s : right.scenarios) ru.insert(s.uid);
        CHECK(lu == ru);
    }
    SUBCASE("empty parts rejected") {
        CHECK_THROWS_AS(merge_compendiums({}, 0.9), DomainError);
    }
}

TEST_CASE("signature keys parse back") {
    const Signature sig{"math", "Work, Rate, and Time Analyzer"};
    CHECK(sig.key() == "unified::math::scenario::Work, Rate, and Time Analyzer");
    const Signature parsed = Signature::parse(sig.key());
    CHECK(parsed.tool_id == "math");
    CHECK(parsed.scenario_name == "Work, Rate, and Time Analyzer");
    CHECK_THROWS_AS(Signature::parse("bogus"), DomainError);
}
