#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "synapse/errors.hpp"
#include "synapse/federation.hpp"
#include "synapse/util.hpp"

using namespace synapse;

namespace {

MockGateway make_mock(std::string fallback = "1") {
    MockScript script;
    script.default_response = std::move(fallback);
    return MockGateway(std::move(script));
}

DataItem item(const std::string& id, const std::string& question, const std::string& answer,
              const std::string& domain, const std::string& task = "word_problem") {
    DataItem d;
    d.id = id;
    d.question = question;
    d.gold_answer = answer;
    d.tags.dataset = "gsm8k";
    d.tags.domain = domain;
    d.tags.task_type = task;
    d.gold_tool = gold_tool_for(d.tags);
    return d;
}

std::vector<DataItem> two_domain_items() {
    return {
        item("a1", "A loan of 12500 at 7% for 36 months costs what interest?", "2625",
             "Financial and Banking Calculator"),
        item("a2", "Deposit 900 at 4% for 2 years; find the balance.", "973",
             "Financial and Banking Calculator"),
        item("b1", "Solve 3x + 4 = 19 for x.", "5", "Algebraic Word Problem Solver"),
        item("b2", "If y doubled is 18, what is y?", "9", "Algebraic Word Problem Solver"),
    };
}

ClientState client_with(std::vector<DataItem> data, AdversarialMode mode,
                        std::uint64_t seed = 3) {
    ClientState client;
    client.client_id = "client-1";
    client.local_data = std::move(data);
    client.policy.enabled = false;
    client.policy.seed = seed;
    client.adversarial_mode = mode;
    return client;
}

Partition partition_of(const std::vector<DataItem>& items, std::size_t clients) {
    Partition p;
    for (std::size_t i = 0; i < items.size(); ++i) {
        p.assignment["client-" + std::to_string(i % clients + 1)].push_back(items[i].id);
    }
    return p;
}

FederationConfig basic_config(Topology topology, std::size_t clients, std::uint64_t rounds) {
    FederationConfig config;
    config.topology = topology;
    config.clients = clients;
    config.rounds = rounds;
    config.policy.enabled = false;
    config.seed = 5;
    return config;
}

}  // namespace

TEST_CASE("generate_artifacts honest mode") {
    const auto client = client_with(two_domain_items(), AdversarialMode::honest);
    const auto scenarios = generate_artifacts(client, 16, 3);
    REQUIRE(scenarios.size() == 2);  // one per (tool, domain) cluster
    CHECK(scenarios[0].scenario_name == "Financial and Banking Calculator");
    CHECK(scenarios[0].tool_id == "mathqa");
    CHECK(scenarios[0].context.find("loan") != std::string::npos);
    CHECK(scenarios[0].context.find("Skills: word_problem.") != std::string::npos);
    CHECK(scenarios[1].scenario_name == "Algebraic Word Problem Solver");
    // Dataset provenance never enters the artifact.
    for (const auto& s : scenarios) {
        CHECK(!s.tags.dataset.has_value());
        CHECK(s.context.find("gsm8k") == std::string::npos);
        CHECK(s.uid == scenario_uid(s));
    }
    SUBCASE("cap limits cluster count") {
        CHECK(generate_artifacts(client, 1, 3).size() == 1);
    }
    SUBCASE("pure-math shard yields only mathqa scenarios") {
        for (const auto& s : scenarios) CHECK(s.tool_id == "mathqa");
    }
}

TEST_CASE("generate_artifacts adversarial modes") {
    SUBCASE("cross_source swaps the owning tool") {
        const auto client = client_with(two_domain_items(), AdversarialMode::cross_source);
        for (const auto& s : generate_artifacts(client, 16, 3)) {
            CHECK(s.tool_id == "scienceqa");
        }
    }
    SUBCASE("random mode is deterministic seeded garbage") {
        const auto client = client_with(two_domain_items(), AdversarialMode::random);
        const auto a = generate_artifacts(client, 16, 3);
        const auto b = generate_artifacts(client, 16, 3);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].context == b[i].context);
            CHECK(a[i].context.find("loan") == std::string::npos);
        }
        const auto c = generate_artifacts(client, 16, 4);  // different seed
        CHECK(a[0].context != c[0].context);
    }
    SUBCASE("tool_confusion renames while keeping the tool id") {
        const auto client = client_with(two_domain_items(), AdversarialMode::tool_confusion);
        for (const auto& s : generate_artifacts(client, 16, 3)) {
            CHECK(s.tool_id == "mathqa");
            CHECK(s.scenario_name != "Financial and Banking Calculator");
            CHECK(s.scenario_name != "Algebraic Word Problem Solver");
        }
    }
}

TEST_CASE("textgrad_refine keeps candidates only on strict improvement") {
    const ToolRegistry registry = default_registry();
    const auto items = two_domain_items();
    std::vector<UsageScenario> context;

    PromptVariant incumbent;
    incumbent.signature = Signature{"mathqa", "Financial and Banking Calculator"};
    incumbent.tool_id = "mathqa";
    incumbent.text = registry.tools.at("mathqa").prompt.text;

    SUBCASE("refiner echoing the incumbent is never accepted") {
        MockScript script;
        script.rules.push_back({"prompt engineer", false, incumbent.text});
        script.default_response = "Answer: $0$";  // every execution wrong
        MockGateway gateway(std::move(script));
        const auto result =
            textgrad_refine(incumbent, items, gateway, 3, 3, registry, context);
        CHECK(!result.accepted);
        CHECK(result.text == incumbent.text);
        CHECK(result.local_score == doctest::Approx(0.0));
    }
    SUBCASE("a rewrite that fixes the batch is accepted") {
        MockScript script;
        // The candidate template triggers correct scripted answers.
        script.rules.push_back({"prompt engineer", false,
                                "Improved solver prompt.\n{context}\n{query}\nmagic-token"});
        script.rules.push_back(
            {"(?=[\\s\\S]*magic-token)(?=[\\s\\S]*loan of 12500)", true, "Answer: $2625$"});
        script.rules.push_back(
            {"(?=[\\s\\S]*magic-token)(?=[\\s\\S]*Deposit 900)", true, "Answer: $973$"});
        script.rules.push_back({"magic-token", false, "Answer: $5$"});
        script.default_response = "Answer: $0$";
        MockGateway gateway(std::move(script));
        const auto result =
            textgrad_refine(incumbent, items, gateway, 1, 3, registry, context);
        CHECK(result.accepted);
        CHECK(result.local_score > 0.0);
        CHECK(result.text.find("magic-token") != std::string::npos);
    }
    SUBCASE("three monotone scripted improvements end at the max") {
        // The mock is stateless; improvement is driven by three rules keyed
        // on the evolving incumbent text inside the refiner prompt.
        MockScript script;
        // Transition rules require the refiner header so they never trigger
        // on execution prompts that embed the stage markers.
        script.rules.push_back({"(?=[\\s\\S]*prompt engineer)(?=[\\s\\S]*stage-two)", true,
                                "stage-three template {context} {query} better3"});
        script.rules.push_back({"(?=[\\s\\S]*prompt engineer)(?=[\\s\\S]*stage-one)", true,
                                "stage-two template {context} {query} better2"});
        script.rules.push_back({"prompt engineer", false,
                                "stage-one template {context} {query} better1"});
        // Hand-enumerated scores on the 3-item batch: stage-one 1/3,
        // stage-two 2/3, stage-three 2/3; the kept best is 2/3.
        script.rules.push_back(
            {"(?=[\\s\\S]*better3)(?=[\\s\\S]*Solve 3x)", true, "Answer: $5$"});
        script.rules.push_back(
            {"(?=[\\s\\S]*better3)(?=[\\s\\S]*doubled)", true, "Answer: $9$"});
        script.rules.push_back({"better3", false, "Answer: $2625$"});
        script.rules.push_back(
            {"(?=[\\s\\S]*better2)(?=[\\s\\S]*loan of 12500)", true, "Answer: $2625$"});
        script.rules.push_back(
            {"(?=[\\s\\S]*better2)(?=[\\s\\S]*Deposit 900)", true, "Answer: $973$"});
        script.rules.push_back(
            {"(?=[\\s\\S]*better1)(?=[\\s\\S]*loan of 12500)", true, "Answer: $2625$"});
        script.default_response = "Answer: $0$";
        MockGateway gateway(std::move(script));
        const auto result =
            textgrad_refine(incumbent, items, gateway, 3, 3, registry, context);
        CHECK(result.accepted);
        CHECK(result.local_score == doctest::Approx(2.0 / 3.0));
    }
}

TEST_CASE("edge_aggregate") {
    FederationConfig config = basic_config(Topology::synapse_tiered, 1, 1);
    const ToolRegistry registry = default_registry();
    auto gateway = make_mock();
    const auto items = two_domain_items();

    ClientState client = client_with(items, AdversarialMode::honest);
    const ClientUpload upload = client_prepare(client, config, 1, registry, &gateway);

    SUBCASE("single client: edge output equals curated client output") {
        const EdgeResult result = edge_aggregate({upload}, 0.9, nullptr, "edge-1");
        Compendium expected = curate(upload.compendium, CurationPolicy{});
        expected.owner = "edge-1";
        CHECK(result.compendium.scenarios.size() == expected.scenarios.size());
        for (std::size_t i = 0; i < expected.scenarios.size(); ++i) {
            CHECK(result.compendium.scenarios[i].uid == expected.scenarios[i].uid);
            CHECK(result.compendium.scenarios[i].context == expected.scenarios[i].context);
        }
        CHECK(result.rejected.empty());
    }
    SUBCASE("identical uids from two clients collapse to one") {
        ClientUpload second = upload;
        second.client_id = "client-2";
        const EdgeResult result = edge_aggregate({upload, second}, 0.9, nullptr, "edge-1");
        CHECK(result.compendium.scenarios.size() == upload.compendium.scenarios.size());
    }
    SUBCASE("invalid artifacts are rejected and counted") {
        ClientUpload broken = upload;
        broken.client_id = "client-9";
        broken.compendium.scenarios[0].tool_id = "ghost_tool";  // dangling reference
        const EdgeResult result = edge_aggregate({upload, broken}, 0.9, nullptr, "edge-1");
        CHECK(result.rejected.at("client-9") == 1);
        CHECK(result.compendium.scenarios.size() == upload.compendium.scenarios.size());
    }
    SUBCASE("highest-scoring prompt variant survives without a gateway") {
        ClientUpload a = upload;
        a.variants = {{Signature{"mathqa", "S"}, "mathqa", "variant one {context} {query}", 0.3,
                       false}};
        ClientUpload b = upload;
        b.client_id = "client-2";
        b.variants = {{Signature{"mathqa", "S"}, "mathqa", "variant two {context} {query}", 0.7,
                       true}};
        ClientUpload c = upload;
        c.client_id = "client-3";
        c.variants = {{Signature{"mathqa", "S"}, "mathqa", "variant three {context} {query}",
                       0.5, false}};
        const EdgeResult result = edge_aggregate({a, b, c}, 0.9, nullptr, "edge-1");
        bool found = false;
        for (const auto& t : result.compendium.templates) {
            if (t.template_id == Signature{"mathqa", "S"}.key()) {
                found = true;
                CHECK(t.text == "variant two {context} {query}");
            }
        }
        CHECK(found);
    }
    SUBCASE("gateway summarization merges multi-client variants") {
        MockScript script;
        script.rules.push_back({"merging prompt variants", false,
                                "merged summary {context} {query}"});
        script.default_response = "1";
        MockGateway summarizer(std::move(script));
        ClientUpload a = upload;
        a.variants = {{Signature{"mathqa", "S"}, "mathqa", "v1 {context} {query}", 0.3, false}};
        ClientUpload b = upload;
        b.client_id = "client-2";
        b.variants = {{Signature{"mathqa", "S"}, "mathqa", "v2 {context} {query}", 0.6, false}};
        const EdgeResult result = edge_aggregate({a, b}, 0.9, &summarizer, "edge-1");
        bool found = false;
        for (const auto& t : result.compendium.templates) {
            if (t.template_id == Signature{"mathqa", "S"}.key()) {
                found = true;
                CHECK(t.text == "merged summary {context} {query}");
            }
        }
        CHECK(found);
    }
}

TEST_CASE("server_merge versions and replacement") {
    FederationConfig config = basic_config(Topology::flat_server, 1, 1);
    const ToolRegistry registry = default_registry();
    auto gateway = make_mock();
    ClientState client = client_with(two_domain_items(), AdversarialMode::honest);
    const ClientUpload upload = client_prepare(client, config, 1, registry, &gateway);

    GlobalSnapshot prev = make_snapshot(Compendium{}, 0);
    const GlobalSnapshot s1 = server_merge({upload.compendium}, prev, 0.9);
    CHECK(s1.version == 1);
    CHECK(s1.compendium.version == 1);
    CHECK(s1.index.entries.size() == s1.compendium.scenarios.size());

    SUBCASE("no changes: snapshot differs only in version") {
        const GlobalSnapshot s2 = server_merge({upload.compendium}, s1, 0.9);
        CHECK(s2.version == 2);
        Compendium normalized = s2.compendium;
        normalized.version = s1.compendium.version;
        CHECK(serialize_compendium(normalized) == serialize_compendium(s1.compendium));
    }
    SUBCASE("new scenario becomes retrievable") {
        Compendium extra;
        extra.tools.push_back({"mathqa", "Solves.", "1.0.0"});
        UsageScenario s;
        s.tool_id = "mathqa";
        s.scenario_name = "Prime Factor Helper";
        s.context = "Breaks integers into prime factors for divisibility questions.";
        s.uid = scenario_uid(s);
        extra.scenarios.push_back(s);
        const GlobalSnapshot s2 = server_merge({extra}, s1, 0.9);
        const auto r = retrieve(s2.index, "prime factors of an integer", 1);
        CHECK(r.ranked[0].first == s.uid);
    }
    SUBCASE("fresh artifact under the same uid replaces the incumbent") {
        Compendium replayed = upload.compendium;
        replayed.scenarios[0].context = "##### ## ##### ## ## ### ## ###### masked body.";
        // Same uid, new surface text.
        const GlobalSnapshot s2 = server_merge({replayed}, s1, 0.9);
        const UsageScenario* found = s2.compendium.find_scenario(replayed.scenarios[0].uid);
        REQUIRE(found != nullptr);
        CHECK(found->context == replayed.scenarios[0].context);
    }
}

TEST_CASE("run_round") {
    const auto items = two_domain_items();
    const ToolRegistry registry = default_registry();
    auto gateway = make_mock();

    SUBCASE("zero clients rejected before the round starts") {
        FederationConfig config = basic_config(Topology::flat_server, 0, 1);
        CHECK_THROWS_AS(make_federation(config, items, Partition{}, registry, gateway),
                        DomainError);
    }
    SUBCASE("ledger rows cover uploads and redistribution") {
        FederationConfig config = basic_config(Topology::synapse_tiered, 2, 1);
        FederationState fed =
            make_federation(config, items, partition_of(items, 2), registry, gateway);
        run_round(fed, 1);
        std::uint64_t client_rows = 0;
        std::uint64_t edge_rows = 0;
        const std::uint64_t snapshot_bytes =
            serialize_compendium(fed.snapshot.compendium).size();
        for (const auto& e : fed.ledger.entries) {
            if (e.sender.rfind("client-", 0) == 0) {
                ++client_rows;
                CHECK(e.bytes_up > 0);
                CHECK(e.bytes_down == snapshot_bytes);
            } else {
                ++edge_rows;
                CHECK(e.bytes_up > 0);
            }
        }
        CHECK(client_rows == 2);
        CHECK(edge_rows == 1);
        const std::uint64_t sum = fed.ledger.total_up();
        std::uint64_t manual = 0;
        for (const auto& e : fed.ledger.entries) manual += e.bytes_up;
        CHECK(sum == manual);
    }
    SUBCASE("privacy on vs off: masked uploads keep the same byte size") {
        FederationConfig off = basic_config(Topology::flat_server, 2, 1);
        FederationConfig on = off;
        on.policy.enabled = true;
        on.policy.lambda_mask = 1.0;
        on.policy.epsilon = 1.0;
        auto g1 = make_mock();
        auto g2 = make_mock();
        FederationState f_off =
            make_federation(off, items, partition_of(items, 2), registry, g1);
        FederationState f_on = make_federation(on, items, partition_of(items, 2), registry, g2);
        run_round(f_off, 1);
        run_round(f_on, 1);
        // Masking replaces tokens with equal-length # runs and noisy counts
        // stay integral, so upload sizes must match exactly.
        std::map<std::string, std::uint64_t> up_off, up_on;
        for (const auto& e : f_off.ledger.entries) {
            if (e.sender.rfind("client-", 0) == 0) up_off[e.sender] = e.bytes_up;
        }
        for (const auto& e : f_on.ledger.entries) {
            if (e.sender.rfind("client-", 0) == 0) up_on[e.sender] = e.bytes_up;
        }
        for (const auto& [client, bytes] : up_off) {
            CHECK(up_on.at(client) == bytes);
        }
    }
    SUBCASE("deterministic across identical runs") {
        FederationConfig config = basic_config(Topology::synapse_tiered, 2, 3);
        config.policy.enabled = true;
        auto g1 = make_mock();
        auto g2 = make_mock();
        FederationState f1 =
            make_federation(config, items, partition_of(items, 2), registry, g1);
        FederationState f2 =
            make_federation(config, items, partition_of(items, 2), registry, g2);
        for (std::uint64_t r = 1; r <= 3; ++r) {
            run_round(f1, r);
            run_round(f2, r);
        }
        CHECK(serialize_compendium(f1.snapshot.compendium) ==
              serialize_compendium(f2.snapshot.compendium));
        REQUIRE(f1.ledger.entries.size() == f2.ledger.entries.size());
        for (std::size_t i = 0; i < f1.ledger.entries.size(); ++i) {
            CHECK(f1.ledger.entries[i].bytes_up == f2.ledger.entries[i].bytes_up);
        }
    }
}

TEST_CASE("run_topology wiring") {
    const auto items = two_domain_items();
    const ToolRegistry registry = default_registry();
    const Partition partition = partition_of(items, 2);

    SUBCASE("centralized and tiered converge to the same uid set") {
        auto g1 = make_mock();
        auto g2 = make_mock();
        FederationConfig tiered = basic_config(Topology::synapse_tiered, 2, 2);
        FederationConfig central = basic_config(Topology::centralized, 2, 2);
        const RunOutputs a = run_topology(tiered, items, partition, registry, g1);
        const RunOutputs b = run_topology(central, items, partition, registry, g2);
        std::set<std::string> ua, ub;
        for (const auto& s : a.snapshots.back().compendium.scenarios) ua.insert(s.uid);
        for (const auto& s : b.snapshots.back().compendium.scenarios) ub.insert(s.uid);
        CHECK(ua == ub);
        CHECK(a.eval_mode == RoutingMode::full);
        CHECK(b.eval_mode == RoutingMode::full);
    }
    SUBCASE("local_only moves zero bytes") {
        auto gateway = make_mock();
        FederationConfig config = basic_config(Topology::local_only, 2, 2);
        const RunOutputs outputs = run_topology(config, items, partition, registry, gateway);
        CHECK(outputs.ledger.total_up() == 0);
        CHECK(outputs.ledger.total_down() == 0);
        CHECK(outputs.local_snapshots.size() == 2);
    }
    SUBCASE("flat_server with one edge equals tiered output") {
        auto g1 = make_mock();
        auto g2 = make_mock();
        FederationConfig flat = basic_config(Topology::flat_server, 2, 2);
        FederationConfig tiered = basic_config(Topology::synapse_tiered, 2, 2);
        tiered.edges = 1;
        const RunOutputs a = run_topology(flat, items, partition, registry, g1);
        const RunOutputs b = run_topology(tiered, items, partition, registry, g2);
        CHECK(serialize_compendium(a.snapshots.back().compendium) ==
              serialize_compendium(b.snapshots.back().compendium));
    }
    SUBCASE("static_global is one-shot and minimal") {
        auto gateway = make_mock();
        FederationConfig config = basic_config(Topology::static_global, 2, 5);
        const RunOutputs outputs = run_topology(config, items, partition, registry, gateway);
        CHECK(outputs.snapshots.size() == 1);
        CHECK(outputs.snapshots[0].compendium.templates.empty());
        CHECK(outputs.snapshots[0].compendium.precautions.empty());
    }
    SUBCASE("no_routing evaluates heuristically") {
        CHECK(eval_mode_for(Topology::no_routing) == RoutingMode::heuristic);
        CHECK(eval_mode_for(Topology::centralized_retrieval_only) ==
              RoutingMode::retrieval_only);
    }
    SUBCASE("unknown topology string") {
        CHECK_THROWS_AS(topology_from_string("mesh"), UnknownTopology);
    }
}

TEST_CASE("comm arithmetic rows") {
    const auto items = two_domain_items();
    const CommArithmetic arithmetic = comm_arithmetic(items, 1);
    CHECK(arithmetic.weight_share_bytes_per_client == doctest::Approx(64e9));
    CHECK(arithmetic.fed_icl_bytes_per_client > 0.0);
}
