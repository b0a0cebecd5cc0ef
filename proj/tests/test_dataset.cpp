#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "synapse/dataset.hpp"
#include "synapse/errors.hpp"
#include "synapse/util.hpp"

using namespace synapse;

namespace {

// Synthetic corpus with controllable question lengths and numeric answers.
std::vector<DataItem> synthetic_items(std::size_t n) {
    std::vector<DataItem> items;
    for (std::size_t i = 0; i < n; ++i) {
        DataItem item;
        item.id = "it-" + std::to_string(100 + i);
        item.question = "Question " + std::string(i % 180, 'x') + " number " +
                        std::to_string(i) + "?";
        item.gold_answer = std::to_string((i * 7) % 97);
        item.tags.dataset = "gsm8k";
        item.tags.domain = "Domain " + std::to_string(i % 6);
        item.tags.task_type = "word_problem";
        item.gold_tool = gold_tool_for(item.tags);
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace

TEST_CASE("ingest") {
    SUBCASE("ten clean lines") {
        std::string jsonl;
        for (int i = 0; i < 10; ++i) {
            jsonl += R"({"id":"q)" + std::to_string(i) +
                     R"(","question":"What is )" + std::to_string(i) +
                     R"( + 1?","answer":")" + std::to_string(i + 1) +
                     R"(","tags":{"dataset":"gsm8k","domain":"arith","task_type":"word_problem"}})" +
                     "\n";
        }
        const auto items = ingest_text(jsonl);
        REQUIRE(items.size() == 10);
        CHECK(items[0].gold_tool == "mathqa");
        CHECK(items[3].gold_answer == "4");
    }
    SUBCASE("missing answer names the line") {
        const std::string jsonl =
            R"({"question":"ok","answer":"1"})" "\n"
            R"({"question":"broken"})" "\n";
        CHECK_THROWS_WITH_AS(ingest_text(jsonl), doctest::Contains("line 2"), FormatError);
    }
    SUBCASE("invalid JSON names the line") {
        CHECK_THROWS_WITH_AS(ingest_text("{oops\n"), doctest::Contains("line 1"), FormatError);
    }
    SUBCASE("numeric answers are accepted") {
        const auto items = ingest_text(R"({"question":"q","answer":21})" "\n");
        CHECK(items[0].gold_answer == "21.0");
    }
    SUBCASE("gold tool mapping") {
        Tags gsm{.dataset = "gsm8k", .domain = "", .task_type = ""};
        CHECK(gold_tool_for(gsm) == "mathqa");
        Tags bbh{.dataset = "bbh_object_counting", .domain = "", .task_type = ""};
        CHECK(gold_tool_for(bbh) == "mathqa");
        Tags sci{.dataset = "scienceqa", .domain = "", .task_type = ""};
        CHECK(gold_tool_for(sci) == "scienceqa");
        Tags fallback{.dataset = "", .domain = "", .task_type = "word_problem"};
        CHECK(gold_tool_for(fallback) == "mathqa");
        Tags none{.dataset = "", .domain = "", .task_type = ""};
        CHECK(gold_tool_for(none) == "scienceqa");
    }
}

TEST_CASE("split_items is deterministic and proportional") {
    const auto items = synthetic_items(100);
    SplitRatios ratios{0.6, 0.2, 0.2};
    const auto a = split_items(items, ratios, 7);
    const auto b = split_items(items, ratios, 7);
    CHECK(a.train.size() == 60);
    CHECK(a.val.size() == 20);
    CHECK(a.test.size() == 20);
    for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].id == b.train[i].id);
    const auto c = split_items(items, ratios, 8);
    bool differs = false;
    for (std::size_t i = 0; i < a.train.size(); ++i) differs |= a.train[i].id != c.train[i].id;
    CHECK(differs);
}

TEST_CASE("partition schemes") {
    const auto items = synthetic_items(200);

    SUBCASE("iid: equal disjoint chunks") {
        const Partition p = make_partition(items, PartitionScheme::iid, 3, 60, 42);
        CHECK(p.assignment.size() == 3);
        std::set<std::string> seen;
        for (const auto& [client, ids] : p.assignment) {
            CHECK(ids.size() == 60);
            for (const auto& id : ids) CHECK(seen.insert(id).second);
        }
        CHECK(seen.size() == 180);
    }
    SUBCASE("same seed, same partition; different seed differs") {
        const Partition a = make_partition(items, PartitionScheme::iid, 3, 60, 42);
        const Partition b = make_partition(items, PartitionScheme::iid, 3, 60, 42);
        const Partition c = make_partition(items, PartitionScheme::iid, 3, 60, 43);
        CHECK(a.assignment == b.assignment);
        CHECK(a.assignment != c.assignment);
    }
    SUBCASE("question-length scheme deals the shortest to client 1") {
        const Partition p =
            make_partition(items, PartitionScheme::noniid_question_length, 3, 60, 42);
        std::map<std::string, std::size_t> lengths;
        for (const auto& item : items) lengths[item.id] = item.question.size();
        std::size_t max_c1 = 0;
        for (const auto& id : p.assignment.at("client-1")) {
            max_c1 = std::max(max_c1, lengths[id]);
        }
        std::size_t min_c3 = SIZE_MAX;
        for (const auto& id : p.assignment.at("client-3")) {
            min_c3 = std::min(min_c3, lengths[id]);
        }
        CHECK(max_c1 <= min_c3);
    }
    SUBCASE("answer-range scheme sorts by numeric answers") {
        const Partition p =
            make_partition(items, PartitionScheme::noniid_answer_range, 3, 60, 42);
        std::map<std::string, double> answers;
        for (const auto& item : items) answers[item.id] = *first_number(item.gold_answer);
        double max_c1 = -1;
        for (const auto& id : p.assignment.at("client-1")) {
            max_c1 = std::max(max_c1, answers[id]);
        }
        double min_c3 = 1e18;
        for (const auto& id : p.assignment.at("client-3")) {
            min_c3 = std::min(min_c3, answers[id]);
        }
        CHECK(max_c1 <= min_c3);
    }
    SUBCASE("insufficient data throws") {
        CHECK_THROWS_AS(make_partition(items, PartitionScheme::iid, 5, 60, 1),
                        InsufficientData);
    }
    SUBCASE("disjoint cover across all schemes and seeds") {
        for (const auto scheme : {PartitionScheme::iid, PartitionScheme::noniid_question_length,
                                  PartitionScheme::noniid_answer_range}) {
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const Partition p = make_partition(items, scheme, 4, 50, seed);
                std::set<std::string> seen;
                std::size_t total = 0;
                for (const auto& [client, ids] : p.assignment) {
                    total += ids.size();
                    for (const auto& id : ids) CHECK(seen.insert(id).second);
                }
                CHECK(total == 200);
            }
        }
    }
}

TEST_CASE("divergence") {
    SUBCASE("identical client distributions give zero mean") {
        // Two clients with the same multiset of question lengths.
        std::vector<DataItem> items;
        for (int c = 0; c < 2; ++c) {
            for (int i = 0; i < 10; ++i) {
                DataItem item;
                item.id = "c" + std::to_string(c) + "-" + std::to_string(i);
                item.question = std::string(10 * (i % 5 + 1), 'q');
                item.gold_answer = "1";
                items.push_back(item);
            }
        }
        Partition p;
        for (const auto& item : items) {
            p.assignment[item.id[1] == '0' ? "client-1" : "client-2"].push_back(item.id);
        }
        const auto [mean, std] = partition_divergence(p, items);
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("two disjoint single-bin clients hit ln 2") {
        // Hand evaluation: each client is a point mass on a different bin, so
        // JS(client, rest) = 0.5 ln 2 + 0.5 ln 2 = ln 2 per client.
        std::vector<DataItem> items;
        for (int i = 0; i < 10; ++i) {
            DataItem item;
            item.id = "short-" + std::to_string(i);
            item.question = "aaaa";
            items.push_back(item);
        }
        for (int i = 0; i < 10; ++i) {
            DataItem item;
            item.id = "long-" + std::to_string(i);
            item.question = std::string(400, 'z');
            items.push_back(item);
        }
        Partition p;
        for (const auto& item : items) {
            p.assignment[item.id[0] == 's' ? "client-1" : "client-2"].push_back(item.id);
        }
        const auto [mean, std] = partition_divergence(p, items);
        CHECK(mean == doctest::Approx(std::log(2.0)).epsilon(1e-9));
        CHECK(std == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("noniid exceeds iid on the same fixture and seed") {
        const auto items = synthetic_items(200);
        const Partition iid = make_partition(items, PartitionScheme::iid, 4, 50, 11);
        const Partition skewed =
            make_partition(items, PartitionScheme::noniid_question_length, 4, 50, 11);
        const auto [iid_mean, iid_std] = partition_divergence(iid, items);
        const auto [non_mean, non_std] = partition_divergence(skewed, items);
        CHECK(non_mean > iid_mean);
        CHECK(non_mean <= std::log(2.0) + 1e-12);
        CHECK(iid_mean >= 0.0);
    }
}

TEST_CASE("items_for_client preserves assignment order") {
    const auto items = synthetic_items(30);
    const Partition p = make_partition(items, PartitionScheme::iid, 3, 10, 5);
    const auto mine = items_for_client(p, items, "client-2");
    REQUIRE(mine.size() == 10);
    for (std::size_t i = 0; i < mine.size(); ++i) {
        CHECK(mine[i].id == p.assignment.at("client-2")[i]);
    }
    CHECK(items_for_client(p, items, "client-9").empty());
}
