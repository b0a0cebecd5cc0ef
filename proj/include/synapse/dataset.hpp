#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace synapse {

struct Tags {
    std::string dataset;
    std::string domain;
    std::string task_type;
};

// One benchmark example. gold_tool is an evaluation label derived from
// dataset provenance; it is never exposed to routing prompts.
struct DataItem {
    std::string id;
    std::string question;
    std::string gold_answer;
    Tags tags;
    std::string gold_tool;
};

// Documented dataset -> parent tool mapping (GSM8k/BBH route to mathqa).
std::string gold_tool_for(const Tags& tags);

// JSONL with fields question, answer and optional id/tags. FormatError
// carries the offending line number.
std::vector<DataItem> ingest(const std::string& path);
std::vector<DataItem> ingest_text(const std::string& jsonl, const std::string& origin = "<memory>");

struct SplitRatios {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

struct DataSplit {
    std::vector<DataItem> train;
    std::vector<DataItem> val;
    std::vector<DataItem> test;
};

DataSplit split_items(const std::vector<DataItem>& items, const SplitRatios& ratios,
                      std::uint64_t seed);

enum class PartitionScheme { iid, noniid_question_length, noniid_answer_range };

std::string to_string(PartitionScheme s);
PartitionScheme partition_scheme_from_string(const std::string& s);

struct Partition {
    PartitionScheme scheme = PartitionScheme::iid;
    std::size_t shards_per_client = 5;
    // client_id -> item ids, a disjoint cover of the used items.
    std::map<std::string, std::vector<std::string>> assignment;
};

// iid: seeded shuffle then equal chunks. noniid_question_length: sort by
// question length, cut into clients*shards shards, deal contiguous shard
// groups. noniid_answer_range: same but sorted by numeric answer value with
// question-length fallback.
Partition make_partition(const std::vector<DataItem>& items, PartitionScheme scheme,
                         std::size_t clients, std::size_t per_client, std::uint64_t seed,
                         std::size_t shards_per_client = 5);

// Leave-one-out Jensen-Shannon divergence (nats) between each client's
// question-length histogram (10 equal-width bins over the global range) and
// the pooled histogram of all other clients; returns (mean, std).
std::pair<double, double> partition_divergence(const Partition& partition,
                                               const std::vector<DataItem>& items);

std::vector<DataItem> items_for_client(const Partition& partition,
                                       const std::vector<DataItem>& items,
                                       const std::string& client_id);

}  // namespace synapse
